from __future__ import annotations

from hypothesis import HealthCheck, settings

settings.register_profile(
    "fracdual", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fracdual")
