import hashlib

from pathlib import Path

import msgspec

from msgspec import Struct


class RunManifest(Struct, frozen=True):
    command: str
    config_digest: str
    parameters: dict[str, str]
    inputs: dict[str, str]
    outputs: dict[str, str]


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_file(path: Path) -> str:
    with open(path, "rb") as f:
        return digest_bytes(f.read())


def build_manifest(
    command: str,
    config_bytes: bytes,
    parameters: dict[str, str],
    inputs: dict[str, Path],
    outputs: list[Path],
    root: Path,
) -> RunManifest:
    """Describes a run by digests only: no wall-clock time and no absolute paths."""
    return RunManifest(
        command=command,
        config_digest=digest_bytes(config_bytes),
        parameters=dict(sorted(parameters.items())),
        inputs={name: digest_file(path) for name, path in sorted(inputs.items())},
        outputs={str(path.relative_to(root)): digest_file(path) for path in sorted(outputs)},
    )


def write_manifest(manifest: RunManifest, path: Path):
    with open(path, "wb") as f:
        f.write(msgspec.json.format(msgspec.json.encode(manifest), indent=2) + b"\n")


def read_manifest(path: Path) -> RunManifest:
    with open(path, "rb") as f:
        return msgspec.json.decode(f.read(), type=RunManifest)
