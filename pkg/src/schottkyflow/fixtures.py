"""Reference schemes used across the test and report suites.

Both schemes pair disks through g(z) = c_plus - r^2/(z - c_minus), which
carries |z - c_minus| = r onto |w - c_plus| = r.  The first is Fuchsian
(all data on the real line, trivial holonomy), the second genuinely
three-dimensional with a spread of holonomy angles.
"""
from __future__ import annotations

from .coding import SchottkyScheme


def fuchsian_pair() -> SchottkyScheme:
    """Rank-2 Fuchsian scheme: real disk pairs (-3, 3, r=0.6), (-1, 1, r=0.35)."""
    return SchottkyScheme.from_pairings([
        (-3.0, 3.0, 0.6),
        (-1.0, 1.0, 0.35),
    ])


def twisted_pair() -> SchottkyScheme:
    """Rank-2 non-Fuchsian scheme: (-3, 3, r=0.6) and (-1.5i, 1.5i, r=0.6)."""
    return SchottkyScheme.from_pairings([
        (-3.0, 3.0, 0.6),
        (-1.5j, 1.5j, 0.6),
    ])


FIXTURES = {
    "fix-a": fuchsian_pair,
    "fix-b": twisted_pair,
}


def by_name(name: str) -> SchottkyScheme:
    key = name.lower()
    if key not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return FIXTURES[key]()
