"""Shared builders for the test suite."""

from __future__ import annotations

from taupipe.core import AngularCoord
from taupipe.eventio import SplitMix64
from taupipe.stages import INVALID_TAU, Tau, TriggerConfig


def tau(pt: int, eta: int, phi: int) -> Tau:
    return Tau(pt, AngularCoord(eta, phi), True)


def fig5_taus() -> tuple[Tau, ...]:
    """Six taus in three proximity groups with pts 74/37/25/25/70/59.

    Groups sit far apart (eta separation ~2000 units); members of a group sit
    within the proximity radius of each other.  Slots 7..16 stay invalid.
    """
    centers = {"A": (-2000, 0), "B": (0, 0), "C": (2000, 0)}
    layout = [
        ("A", 74, 0, 0),
        ("B", 37, 0, 0),
        ("A", 25, 40, 30),
        ("B", 25, 50, -20),
        ("C", 70, 0, 0),
        ("B", 59, -30, 40),
    ]
    taus = [INVALID_TAU] * 16
    for i, (group, pt, de, dp) in enumerate(layout):
        ce, cp = centers[group]
        taus[i] = tau(pt, ce + de, cp + dp)
    return tuple(taus)


def random_tau_slots(rng: SplitMix64, n_slots: int = 16) -> tuple[Tau, ...]:
    """Random 16-slot instance with duplicated pts and proximity chains.

    Positions live on a 120-unit grid: orthogonally adjacent cells are within
    the default proximity radius, diagonal and farther cells are not, so
    chained neighborhoods occur naturally.
    """
    taus = [INVALID_TAU] * n_slots
    for i in range(n_slots):
        if rng.chance(7, 8):
            pt = 1 + rng.below(24)
            eta = (rng.below(13) - 6) * 120
            phi = (rng.below(13) - 6) * 120
            taus[i] = tau(pt, eta, phi)
    return tuple(taus)


def random_merge_lists(rng: SplitMix64) -> list[list[int]]:
    """Four source lists of unique int items; a quarter of draws stay small."""
    small = rng.chance(1, 4)
    sizes = [rng.below(9) if small else rng.below(33) for _ in range(4)]
    return [[lst * 1000 + i for i in range(size)] for lst, size in enumerate(sizes)]


def chain_taus(cfg: TriggerConfig) -> tuple[Tau, ...]:
    """a > b > c in pt; a near b, b near c, a not near c."""
    taus = [INVALID_TAU] * cfg.n_seeds
    taus[0] = tau(90, 0, 0)
    taus[1] = tau(50, 150, 0)
    taus[2] = tau(30, 300, 0)
    return tuple(taus)
