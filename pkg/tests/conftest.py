"""Shared test configuration.

Hypothesis runs derandomized so the suite is reproducible in CI; the
statistical tests pin their own generator seeds for the same reason.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "deterministic",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")
