"""Shared test configuration: one hypothesis profile, no deadlines.

Exact-arithmetic cases vary wildly in cost (a single draw can produce a
thousand-bit exponent gap), so per-example deadlines only add flakes.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "exact",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("exact")
