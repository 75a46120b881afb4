"""Cardio Load: per-minute training impulse from heart rate, and adaptive weekly targets."""
