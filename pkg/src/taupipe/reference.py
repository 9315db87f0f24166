"""Naive, unpipelined reference implementations used as ground truth.

Everything here favors obviousness over speed: full sorts, list
comprehensions, exact rational arithmetic.  The trigger reference keeps only
the stated structural limits (16 seeds, 30 candidates, 8 taus) and no other
capacity mechanics, so it defines the canonical per-event output that the
staged pipeline and the dataflow engine are checked against.

The candidate cap takes the earliest survivors in input order.  A merge step
is allowed to pick any items once a seed's cone holds more than the cap, so
on such events a round-robin merge can legitimately differ from this
canonical choice; the batch runners surface that as a divergence.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import AngularCoord, Event, Particle, delta_r2, wrap_delta_phi, wrap_phi
from .stages import INVALID_TAU, Tau, TriggerConfig, signal_cone_r2


def oracle_trigger(event: Event, cfg: TriggerConfig) -> tuple[Tau, ...]:
    """Canonical end-to-end result: the seven steps, written the simple way."""
    valid = [p for p in event.particles if p.valid]

    ranked = sorted(
        (
            (i, p)
            for i, p in enumerate(event.particles)
            if p.valid and p.kind.charge != 0 and p.pt >= cfg.min_seed_pt
        ),
        key=lambda ip: (-ip[1].pt, ip[0]),
    )
    seeds = ranked[: cfg.n_seeds]

    taus: list[Tau] = [INVALID_TAU] * cfg.n_seeds
    for slot, (_, seed) in enumerate(seeds):
        in_cone = [
            p
            for p in valid
            if delta_r2(p.pos, seed.pos, phi_range=cfg.phi_range) <= cfg.filter_cone_r2
        ]
        cands = in_cone[: cfg.max_candidates]
        total = min(sum(p.pt for p in cands), cfg.pt_max)

        r2_sig = signal_cone_r2(total, cfg)
        kept = [
            p
            for p in cands
            if p.kind.species in cfg.allowed_signal_species
            and delta_r2(p.pos, seed.pos, phi_range=cfg.phi_range) <= r2_sig
        ]
        sum_pt = min(sum(p.pt for p in kept), cfg.pt_max)
        if sum_pt == 0 or sum_pt < cfg.min_tau_pt:
            continue

        eta_w = _trunc(Fraction(sum(p.pt * p.pos.eta for p in kept), sum_pt))
        phi_off = _trunc(
            Fraction(
                sum(p.pt * wrap_delta_phi(p.pos.phi, seed.pos.phi, cfg.phi_range) for p in kept),
                sum_pt,
            )
        )
        phi_w = wrap_phi(seed.pos.phi + phi_off, cfg.phi_range)
        taus[slot] = Tau(pt=sum_pt, pos=AngularCoord(eta_w, phi_w), valid=True)

    return oracle_clean(taus, cfg)


def _trunc(x: Fraction) -> int:
    # int() on Fraction truncates toward zero, matching an integer divider.
    return int(x)


def oracle_clean(taus: Sequence[Tau], cfg: TriggerConfig) -> tuple[Tau, ...]:
    """Survivors by the domination rule, then the highest-pt cap.

    Slot i survives when no valid nearby slot j beats it: pt_j > pt_i, or
    pt_j == pt_i with j < i.
    """
    n = len(taus)
    survivors = []
    for i in range(n):
        if not taus[i].valid:
            continue
        dominated = any(
            taus[j].valid
            and j != i
            and delta_r2(taus[i].pos, taus[j].pos, phi_range=cfg.phi_range) <= cfg.proximity_r2
            and (taus[j].pt > taus[i].pt or (taus[j].pt == taus[i].pt and j < i))
            for j in range(n)
        )
        if not dominated:
            survivors.append(i)
    if len(survivors) > cfg.max_taus:
        top = sorted(survivors, key=lambda i: (-taus[i].pt, i))[: cfg.max_taus]
        survivors = sorted(top)
    return tuple(taus[i] for i in survivors)


@dataclass(frozen=True)
class MergeExpectation:
    """What any correct four-to-one merge must produce: a checker, not a chooser.

    When the sources fit the capacity, the output must be exactly the source
    multiset.  On overflow any capacity-sized sub-multiset of the sources is
    acceptable.
    """

    capacity: int
    source_multiset: Counter
    source_count: int

    @property
    def required_size(self) -> int:
        return min(self.capacity, self.source_count)

    def check(self, items: Sequence[Particle], discarded: Sequence[Particle] | None = None) -> bool:
        out = Counter(items)
        if len(items) != self.required_size:
            return False
        if not all(out[k] <= self.source_multiset[k] for k in out):
            return False
        if self.source_count <= self.capacity and out != self.source_multiset:
            return False
        if discarded is not None and out + Counter(discarded) != self.source_multiset:
            return False
        return True


def oracle_merge(lists: Sequence[Sequence[Particle]], cfg: TriggerConfig) -> MergeExpectation:
    """Build the merge-outcome descriptor for the given source lists."""
    flat = [p for lst in lists for p in lst]
    return MergeExpectation(
        capacity=cfg.max_candidates,
        source_multiset=Counter(flat),
        source_count=len(flat),
    )
