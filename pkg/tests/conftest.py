import hypothesis
import pytest

from cardioload.domain import LoadConfig, TargetConfig, UserProfile

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.register_profile("ci", max_examples=1000, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def profile() -> UserProfile:
    return UserProfile(user_id="u1", sex_coefficient_k=1.92, resting_hr=60.0, max_hr=190.0)


@pytest.fixture
def load_config() -> LoadConfig:
    return LoadConfig()


@pytest.fixture
def target_config() -> TargetConfig:
    return TargetConfig()
