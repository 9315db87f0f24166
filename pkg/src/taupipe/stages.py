"""Pure functional implementations of the seven trigger pipeline steps.

Step order: seed selection, per-block cone filtering, four-to-one candidate
merging (two interchangeable solutions), signal-candidate selection, weighted
parameter averaging, tau reconstruction, and proximity cleaning (again two
solutions).  Every function is a pure function of its inputs plus the config;
the optional ``ops`` argument collects datapath operation counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import (
    ETA_MAX,
    PHI_RANGE,
    PT_MAX,
    AngularCoord,
    Event,
    OpCounter,
    Particle,
    Species,
    delta_r2,
    saturating_pt_add,
    trunc_div,
    wrap_delta_phi,
    wrap_phi,
)

DEFAULT_SIGNAL_SPECIES = frozenset(
    {Species.CHARGED_HADRON, Species.NEUTRAL_HADRON, Species.PHOTON, Species.ELECTRON}
)

# Fixed setup cost of the round-robin merge state machine: size-register
# capture, index/count/availability reset.  One emitted item per cycle after
# that, so the full worst case models 3 + 30 = 33 cycles.
MERGE_B_SETUP_CYCLES = 3

MERGE_SOLUTIONS = ("A", "B")
CLEAN_SOLUTIONS = ("A", "B")


@dataclass(frozen=True)
class TriggerConfig:
    """All knobs of the trigger algorithm, with desk-scale defaults.

    The cone and threshold values are placeholders wired through one record so
    they can be replaced wholesale; the structural constants (128 inputs, 16
    seeds, 4 blocks of 32, 30 candidates, 8 taus) match the pipeline framing.
    """

    n_input: int = 128
    n_seeds: int = 16
    n_filter_blocks: int = 4
    block_size: int = 32
    max_candidates: int = 30
    max_taus: int = 8
    filter_cone_r2: int = 16900
    signal_cone_k: int = 16900 * 256
    signal_cone_r2_min: int = 1024
    signal_cone_r2_max: int = 16900
    allowed_signal_species: frozenset[Species] = DEFAULT_SIGNAL_SPECIES
    proximity_r2: int = 26569
    min_seed_pt: int = 4
    min_tau_pt: int = 16
    pt_max: int = PT_MAX
    phi_range: int = PHI_RANGE
    eta_max: int = ETA_MAX

    def __post_init__(self) -> None:
        if self.n_filter_blocks * self.block_size != self.n_input:
            raise ValueError(
                "n_filter_blocks * block_size must equal n_input "
                f"(got {self.n_filter_blocks}*{self.block_size} != {self.n_input})"
            )
        if self.signal_cone_r2_min > self.signal_cone_r2_max:
            raise ValueError(
                "signal_cone_r2_min must not exceed signal_cone_r2_max "
                f"(got {self.signal_cone_r2_min} > {self.signal_cone_r2_max})"
            )
        if not 1 <= self.n_seeds <= self.n_input:
            raise ValueError(f"n_seeds must be in 1..{self.n_input}, got {self.n_seeds}")
        if not 1 <= self.max_taus <= self.n_seeds:
            raise ValueError(
                f"max_taus must be in 1..n_seeds={self.n_seeds}, got {self.max_taus}"
            )
        if not 1 <= self.max_candidates <= self.n_input:
            raise ValueError(f"max_candidates must be positive, got {self.max_candidates}")
        for name in ("filter_cone_r2", "signal_cone_k", "proximity_r2", "min_seed_pt",
                     "min_tau_pt", "signal_cone_r2_min"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.pt_max < 1 or self.eta_max < 1:
            raise ValueError("pt_max and eta_max must be positive")
        if self.phi_range < 2 or self.phi_range % 2 != 0:
            raise ValueError(f"phi_range must be a positive even number, got {self.phi_range}")


@dataclass(frozen=True)
class Seed:
    """A high-pt charged particle around which a candidate list is built."""

    particle: Particle
    source_index: int

    def __post_init__(self) -> None:
        if not self.particle.valid:
            raise ValueError("seed particle must be valid")
        if self.particle.kind.charge == 0:
            raise ValueError("seed particle must be charged")


@dataclass(frozen=True)
class CandidateList:
    """A seed with its associated candidates and their saturating pt total."""

    seed: Seed
    candidates: tuple[Particle, ...]
    total_pt: int


@dataclass(frozen=True)
class TauParams:
    """Weighted-average properties of one candidate group.

    ``valid`` is False exactly when the group's pt sum is zero (in particular
    when the group is empty); no division is performed in that case.
    """

    sum_pt: int
    eta_w: int
    phi_w: int
    valid: bool


@dataclass(frozen=True)
class Tau:
    pt: int
    pos: AngularCoord
    valid: bool

    def __post_init__(self) -> None:
        if not self.valid and self.pt != 0:
            raise ValueError("invalid taus must carry pt = 0")


INVALID_TAU = Tau(0, AngularCoord(0, 0), False)


@dataclass(frozen=True)
class CleaningMatrix:
    """Pairwise domination grid over the 16 tau slots; diagonal unused."""

    rows: tuple[tuple[bool, ...], ...]

    @property
    def size(self) -> int:
        return len(self.rows)

    def ones(self) -> set[tuple[int, int]]:
        """Set of (row, col) positions holding True, 0-based."""
        return {
            (i, j)
            for i, row in enumerate(self.rows)
            for j, v in enumerate(row)
            if v
        }

    def row_any(self, i: int) -> bool:
        return any(self.rows[i])


@dataclass(frozen=True)
class MergeResult:
    """Outcome of a four-to-one merge.

    ``emit_steps`` counts items moved into the target list.  ``modeled_cycles``
    is the variant's cycle estimate: for solution A the parallel trimming
    phase (max source size, at most one read per source per cycle), for
    solution B the state-machine setup plus one cycle per emitted item.
    """

    items: tuple[Particle, ...]
    discarded: tuple[Particle, ...]
    emit_steps: int
    modeled_cycles: int


@dataclass(frozen=True)
class StageCost:
    """Measured per-unit datapath cost of one pipeline stage."""

    stage: str
    unit: str
    multiplications: int
    divisions: int
    comparisons: int


def select_seeds(event: Event, cfg: TriggerConfig, ops: OpCounter | None = None) -> tuple[Seed, ...]:
    """Pick the highest-pt charged particles, at most ``n_seeds`` of them.

    Output is graded by descending pt with ascending source index breaking
    ties.  Fewer qualifying particles simply yield a shorter tuple.
    """
    qualified: list[Seed] = []
    for idx, p in enumerate(event.particles):
        if not p.valid or p.kind.charge == 0:
            continue
        if ops is not None:
            ops.comparisons += 1
        if p.pt >= cfg.min_seed_pt:
            qualified.append(Seed(p, idx))
    qualified.sort(key=lambda s: (-s.particle.pt, s.source_index))
    return tuple(qualified[: cfg.n_seeds])


def partition_blocks(event: Event, cfg: TriggerConfig) -> tuple[tuple[Particle, ...], ...]:
    """Split the event into the contiguous fixed-size filter blocks."""
    bs = cfg.block_size
    return tuple(
        event.particles[i * bs : (i + 1) * bs] for i in range(cfg.n_filter_blocks)
    )


def filter_block(
    block: Sequence[Particle],
    seed: Seed,
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> tuple[Particle, ...]:
    """Keep the block's valid particles inside the seed's filter cone.

    Input order is preserved; the cone boundary is inclusive.
    """
    kept: list[Particle] = []
    for p in block:
        if not p.valid:
            continue
        d = delta_r2(p.pos, seed.particle.pos, phi_range=cfg.phi_range, ops=ops)
        if ops is not None:
            ops.comparisons += 1
        if d <= cfg.filter_cone_r2:
            kept.append(p)
    return tuple(kept)


def merge_solution_a(
    lists: Sequence[Sequence[Particle]],
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> MergeResult:
    """Merge by greedy take-counts in list order, trimming the excess.

    Take counts are allocated greedily: the first list contributes up to the
    capacity, the second up to what remains, and so on.  Sources are drained
    in parallel, so the trimming phase never models more than one block's
    worth of cycles.
    """
    cap = cfg.max_candidates
    sizes = [len(lst) for lst in lists]
    for s in sizes:
        if s > cfg.block_size:
            raise ValueError(f"source list of {s} items exceeds block size {cfg.block_size}")
    takes: list[int] = []
    remaining = cap
    for s in sizes:
        if ops is not None:
            ops.comparisons += 1
        c = min(s, remaining)
        takes.append(c)
        remaining -= c
    items: list[Particle] = []
    discarded: list[Particle] = []
    for lst, c in zip(lists, takes):
        items.extend(lst[:c])
        discarded.extend(lst[c:])
    return MergeResult(
        items=tuple(items),
        discarded=tuple(discarded),
        emit_steps=sum(takes),
        modeled_cycles=max(sizes, default=0),
    )


def merge_solution_b(
    lists: Sequence[Sequence[Particle]],
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> MergeResult:
    """Merge with the shared-index round-robin state machine.

    A single index register walks all sources in lockstep.  At each index the
    per-source availability bits are set to (index < size); while any bit is
    up and the target is not full, the item from the lowest-numbered available
    source is emitted and its bit cleared.  When all bits are down the index
    advances.  Output order is round-robin by element index with list-number
    priority.
    """
    cap = cfg.max_candidates
    sizes = [len(lst) for lst in lists]
    for s in sizes:
        if s > cfg.block_size:
            raise ValueError(f"source list of {s} items exceeds block size {cfg.block_size}")
    items: list[Particle] = []
    taken: list[list[bool]] = [[False] * s for s in sizes]
    count = 0
    emit_steps = 0
    index = 0
    max_size = max(sizes, default=0)
    while index < max_size and count < cap:
        avail = [index < s for s in sizes]
        if ops is not None:
            ops.comparisons += len(sizes)
        while count < cap:
            try:
                src = avail.index(True)
            except ValueError:
                break
            items.append(lists[src][index])
            taken[src][index] = True
            avail[src] = False
            count += 1
            emit_steps += 1
        index += 1
    discarded = tuple(
        lst[pos]
        for src, lst in enumerate(lists)
        for pos in range(sizes[src])
        if not taken[src][pos]
    )
    return MergeResult(
        items=tuple(items),
        discarded=discarded,
        emit_steps=emit_steps,
        modeled_cycles=MERGE_B_SETUP_CYCLES + emit_steps,
    )


_MERGE_FNS: dict[str, Callable[..., MergeResult]] = {
    "A": merge_solution_a,
    "B": merge_solution_b,
}


def merge_fn(solution: str) -> Callable[..., MergeResult]:
    try:
        return _MERGE_FNS[solution]
    except KeyError:
        raise ValueError(f"unknown merge solution {solution!r}, expected one of {MERGE_SOLUTIONS}")


def compute_total_pt(
    candidates: Sequence[Particle],
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> int:
    """Saturating sum of the candidates' transverse momenta."""
    total = 0
    for p in candidates:
        total = saturating_pt_add(total, p.pt, cfg.pt_max)
    return total


def signal_cone_r2(total_pt: int, cfg: TriggerConfig) -> int:
    """Signal cone radius squared: inverse-pt shrinking, clamped both ways.

    clamp(signal_cone_k / max(total_pt, 1), r2_min, r2_max) with truncating
    integer division.  Exposed for reference checks; the selection predicate
    itself uses the division-free equivalent.
    """
    q = cfg.signal_cone_k // max(total_pt, 1)
    return max(cfg.signal_cone_r2_min, min(cfg.signal_cone_r2_max, q))


def select_signal_candidates(
    clist: CandidateList,
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> CandidateList:
    """Keep candidates of an allowed species inside the pt-dependent cone.

    The cone test d <= clamp(k/T, lo, hi) is evaluated in the division-free
    form d <= lo OR (d <= hi AND d*T <= k), which is exactly equivalent for
    non-negative integers and replaces the divider with one multiplier.
    Order is preserved and the total pt is recomputed over the survivors.
    """
    t = max(clist.total_pt, 1)
    lo = cfg.signal_cone_r2_min
    hi = cfg.signal_cone_r2_max
    k = cfg.signal_cone_k
    kept: list[Particle] = []
    for p in clist.candidates:
        if ops is not None:
            ops.comparisons += 1
        if p.kind.species not in cfg.allowed_signal_species:
            continue
        d = delta_r2(p.pos, clist.seed.particle.pos, phi_range=cfg.phi_range, ops=ops)
        if ops is not None:
            ops.comparisons += 1
        if d <= lo:
            kept.append(p)
            continue
        if ops is not None:
            ops.comparisons += 1
        if d > hi:
            continue
        if ops is not None:
            ops.multiplications += 1
            ops.comparisons += 1
        if d * t <= k:
            kept.append(p)
    total = compute_total_pt(kept, cfg, ops)
    return CandidateList(seed=clist.seed, candidates=tuple(kept), total_pt=total)


def compute_tau_params(
    clist: CandidateList,
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> TauParams:
    """Pt-weighted average position of the signal candidates.

    eta is averaged directly; phi is averaged on wrapped offsets relative to
    the seed's phi and re-wrapped to an absolute azimuth, so groups straddling
    the periodic boundary average correctly.  Costs exactly two divisions per
    non-degenerate group; a group with zero pt sum performs none and is
    flagged invalid.
    """
    sum_pt = compute_total_pt(clist.candidates, cfg, ops)
    if sum_pt == 0:
        return TauParams(sum_pt=0, eta_w=0, phi_w=0, valid=False)
    seed_phi = clist.seed.particle.pos.phi
    num_eta = 0
    num_phi = 0
    for p in clist.candidates:
        off = wrap_delta_phi(p.pos.phi, seed_phi, cfg.phi_range)
        if ops is not None:
            ops.multiplications += 2
        num_eta += p.pt * p.pos.eta
        num_phi += p.pt * off
    if ops is not None:
        ops.divisions += 2
    eta_w = trunc_div(num_eta, sum_pt)
    phi_off = trunc_div(num_phi, sum_pt)
    phi_w = wrap_phi(seed_phi + phi_off, cfg.phi_range)
    return TauParams(sum_pt=sum_pt, eta_w=eta_w, phi_w=phi_w, valid=True)


def reconstruct_tau(
    params: TauParams,
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> Tau:
    """Threshold the averaged parameters into a tau record; no arithmetic."""
    if ops is not None:
        ops.comparisons += 1
    if params.valid and params.sum_pt >= cfg.min_tau_pt:
        return Tau(pt=params.sum_pt, pos=AngularCoord(params.eta_w, params.phi_w), valid=True)
    return INVALID_TAU


def _less_pt(taus: Sequence[Tau], i: int, j: int) -> bool:
    # Strict domination order on nearby pairs: lower pt loses; on equal pt the
    # higher slot index loses, so the lower index always wins.
    return taus[i].pt < taus[j].pt or (taus[i].pt == taus[j].pt and i > j)


def build_cleaning_matrix(
    taus: Sequence[Tau],
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> CleaningMatrix:
    """Pairwise grid m[i][j] = NearBy(i, j) AND LessPt(i, j).

    NearBy is the inclusive proximity test on squared distance; LessPt is the
    strict domination order including the lower-index tie-break.  Rows and
    columns of invalid taus stay all False; the diagonal is unused.
    """
    n = len(taus)
    if n != cfg.n_seeds:
        raise ValueError(f"cleaning expects exactly {cfg.n_seeds} tau slots, got {n}")
    rows = [[False] * n for _ in range(n)]
    for i in range(n):
        if not taus[i].valid:
            continue
        for j in range(i + 1, n):
            if not taus[j].valid:
                continue
            d = delta_r2(taus[i].pos, taus[j].pos, phi_range=cfg.phi_range, ops=ops)
            if ops is not None:
                ops.comparisons += 2
            if d > cfg.proximity_r2:
                continue
            if _less_pt(taus, i, j):
                rows[i][j] = True
            else:
                rows[j][i] = True
    return CleaningMatrix(rows=tuple(tuple(r) for r in rows))


def _cap_to_max_taus(
    survivor_slots: Sequence[int], taus: Sequence[Tau], cfg: TriggerConfig
) -> tuple[Tau, ...]:
    # Keep the highest-pt survivors (lower slot wins ties) but emit them in
    # original slot order.
    slots = list(survivor_slots)
    if len(slots) > cfg.max_taus:
        by_pt = sorted(slots, key=lambda i: (-taus[i].pt, i))[: cfg.max_taus]
        slots = sorted(by_pt)
    return tuple(taus[i] for i in slots)


def clean_solution_b(
    taus: Sequence[Tau],
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> tuple[Tau, ...]:
    """Matrix cleaning: drop every tau whose matrix row holds any True."""
    matrix = build_cleaning_matrix(taus, cfg, ops)
    survivors = [
        i for i, tau in enumerate(taus) if tau.valid and not matrix.row_any(i)
    ]
    return _cap_to_max_taus(survivors, taus, cfg)


def clean_solution_a(
    taus: Sequence[Tau],
    cfg: TriggerConfig,
    ops: OpCounter | None = None,
) -> tuple[Tau, ...]:
    """Grade-and-mark cleaning: sorted pass marking nearby lower grades.

    Taus are graded descending by pt (ascending slot on ties); each grade
    marks every later nearby grade as dropped.  Marked taus still mark others,
    which is what makes this pass agree with the matrix formulation on chains.
    """
    n = len(taus)
    if n != cfg.n_seeds:
        raise ValueError(f"cleaning expects exactly {cfg.n_seeds} tau slots, got {n}")
    graded = sorted(
        (i for i in range(n) if taus[i].valid),
        key=lambda i: (-taus[i].pt, i),
    )
    dropped: set[int] = set()
    for pos, i in enumerate(graded):
        for j in graded[pos + 1 :]:
            d = delta_r2(taus[i].pos, taus[j].pos, phi_range=cfg.phi_range, ops=ops)
            if ops is not None:
                ops.comparisons += 1
            if d <= cfg.proximity_r2:
                dropped.add(j)
    survivors = [i for i in graded if i not in dropped]
    survivors.sort()
    return _cap_to_max_taus(survivors, taus, cfg)


_CLEAN_FNS: dict[str, Callable[..., tuple[Tau, ...]]] = {
    "A": clean_solution_a,
    "B": clean_solution_b,
}


def clean_fn(solution: str) -> Callable[..., tuple[Tau, ...]]:
    try:
        return _CLEAN_FNS[solution]
    except KeyError:
        raise ValueError(f"unknown clean solution {solution!r}, expected one of {CLEAN_SOLUTIONS}")


def run_stages(
    event: Event,
    cfg: TriggerConfig,
    merge_solution: str = "B",
    clean_solution: str = "B",
    ops: OpCounter | None = None,
) -> tuple[Tau, ...]:
    """Run the seven steps sequentially and return the final tau list (<= 8).

    This is the pipeline's functional content with no timing attached; the
    dataflow engine wraps exactly these calls.
    """
    merge = merge_fn(merge_solution)
    clean = clean_fn(clean_solution)
    seeds = select_seeds(event, cfg, ops)
    blocks = partition_blocks(event, cfg)
    taus: list[Tau] = [INVALID_TAU] * cfg.n_seeds
    for si, seed in enumerate(seeds):
        lists = [filter_block(b, seed, cfg, ops) for b in blocks]
        merged = merge(lists, cfg, ops)
        total = compute_total_pt(merged.items, cfg, ops)
        clist = CandidateList(seed=seed, candidates=merged.items, total_pt=total)
        selected = select_signal_candidates(clist, cfg, ops)
        params = compute_tau_params(selected, cfg, ops)
        taus[si] = reconstruct_tau(params, cfg, ops)
    return clean(tuple(taus), cfg, ops)


def stage_cost_report(cfg: TriggerConfig) -> tuple[StageCost, ...]:
    """Measure per-unit operation counts of every stage on canonical probes.

    The numbers come from instrumented counters in the stage functions, not
    from estimates.  Grading-network comparisons inside the seeding sort are
    not modeled (the sorting network is outside this model's scope); seeding
    reports only its threshold comparisons.
    """
    from .core import make_event, make_particle

    seed_particle = make_particle(50, 0, 0)
    seed = Seed(seed_particle, 0)
    near = make_particle(10, 3, 4)

    rows: list[StageCost] = []

    ops = OpCounter()
    event = make_event(0, [seed_particle], n_input=cfg.n_input)
    select_seeds(event, cfg, ops)
    rows.append(StageCost("seeding", "qualifying particle", *ops.snapshot()))

    ops = OpCounter()
    filter_block([near], seed, cfg, ops)
    rows.append(StageCost("filtering", "particle-seed pair", *ops.snapshot()))

    ops = OpCounter()
    merge_solution_b([[near], [], [], []], cfg, ops)
    rows.append(StageCost("merging", "merge invocation", *ops.snapshot()))

    ops = OpCounter()
    one = CandidateList(seed, (near,), compute_total_pt((near,), cfg))
    select_signal_candidates(one, cfg, ops)
    rows.append(StageCost("signal_selection", "candidate", *ops.snapshot()))

    ops = OpCounter()
    compute_tau_params(one, cfg, ops)
    rows.append(StageCost("tau_parameters", "candidate group", *ops.snapshot()))

    ops = OpCounter()
    reconstruct_tau(TauParams(50, 0, 0, True), cfg, ops)
    rows.append(StageCost("tau_reconstruction", "tau", *ops.snapshot()))

    ops = OpCounter()
    taus = [INVALID_TAU] * cfg.n_seeds
    taus[0] = Tau(30, AngularCoord(0, 0), True)
    taus[1] = Tau(20, AngularCoord(3, 4), True)
    build_cleaning_matrix(taus, cfg, ops)
    rows.append(StageCost("cleaning", "valid tau pair", *ops.snapshot()))

    return tuple(rows)
