"""Population dynamics for the distributional survey fixed point.

A population of L cavity surveys stands in for the survey distribution on
the infinite random tree.  One generation rebuilds every member: draw a
Poisson(K*alpha) clause count z, for each clause draw K-1 random members
and K sign bits, form the clause warnings, fold, and normalize; z = 0
yields the all-unfrozen survey.  Zero-norm folds (contradictions) are
redrawn and counted rather than silently renormalized.

All randomness is pre-drawn onto a per-generation tape keyed by
(seed, generation), so two replicas stepped with the same seed consume
identical draws by construction; coupled runs measure the mean squared
member distance D(t), whose exponential rate is the damage-spreading
Lyapunov exponent lambda(alpha).  The tape is drawn in fixed-size halves
so that populations of sizes L, 2L, 4L ... share their common prefix of
randomness, which makes the 1/L finite-size drift directly measurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (ContradictionError, InvalidParametersError,
                     ReplicaDivergenceError)
from .rng import substream

UNIFORM_SIMPLEX = "uniform-simplex"
ALL_UNFROZEN = "all-unfrozen"
CUSTOM = "custom"


# ---------------------------------------------------------------------------
# Tape: pre-assigned randomness for one generation
# ---------------------------------------------------------------------------

@dataclass
class Tape:
    """Draws for one generation, indexed by member position.

    Member m owns rows ``ptr[m]:ptr[m+1]``; each row is one clause with
    K-1 sender picks (uniform floats, mapped to indices by the consumer's
    pool size) and K sign bits, the receiver's first.
    """

    z: np.ndarray       # (L,) clause counts
    ptr: np.ndarray     # (L+1,)
    u_idx: np.ndarray   # (sum z, K-1) uniform floats
    signs: np.ndarray   # (sum z, K) uint8

    @property
    def size(self) -> int:
        return self.z.shape[0]


def build_tape(seed: int, generation: int, size: int, alpha: float,
               arity: int = 3, n_halves: int = 1) -> Tape:
    """Tape for one generation, drawn in ``n_halves`` independent blocks.

    Block h depends only on (seed, generation, h), so a run of size
    ``size`` and a run of size ``2 * size`` built from the same seed share
    the first blocks' draws exactly.
    """
    if size % n_halves:
        raise InvalidParametersError("population size must divide into halves")
    base = size // n_halves
    zs, us, sgs = [], [], []
    for h in range(n_halves):
        gen = substream(seed, "tape", generation, h)
        z = gen.poisson(arity * alpha, size=base)
        total = int(z.sum())
        zs.append(z)
        us.append(gen.random((total, arity - 1)))
        sgs.append(gen.integers(0, 2, size=(total, arity), dtype=np.uint8))
    z = np.concatenate(zs)
    ptr = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(z, out=ptr[1:])
    return Tape(z, ptr, np.concatenate(us), np.concatenate(sgs))


# ---------------------------------------------------------------------------
# Populations
# ---------------------------------------------------------------------------

@dataclass
class Population:
    """L surveys evolving under the cavity update; immutable per generation."""

    surveys: np.ndarray  # (L, 3)
    alpha: float
    arity: int
    generation: int
    seed: int
    n_halves: int = 1
    redraws: int = 0

    @property
    def size(self) -> int:
        return self.surveys.shape[0]

    def polarization(self) -> np.ndarray:
        return self.surveys[:, 0] + self.surveys[:, 2]

    def mean_unfrozen(self) -> float:
        return float(self.surveys[:, 1].mean())

    def frozen_fraction(self, frozen_tol: float = 0.5) -> float:
        return float(np.mean(self.polarization() > frozen_tol))


def init_population(size: int, alpha: float, mode: str = UNIFORM_SIMPLEX,
                    seed: int = 0, arity: int = 3, custom=None,
                    n_halves: int = 1) -> Population:
    """Seeded initial ensemble; halves draw from independent substreams."""
    if size < 1:
        raise InvalidParametersError("population size must be at least 1")
    if size % n_halves:
        raise InvalidParametersError("population size must divide into halves")
    if mode == ALL_UNFROZEN:
        surveys = np.zeros((size, 3))
        surveys[:, 1] = 1.0
    elif mode == UNIFORM_SIMPLEX:
        base = size // n_halves
        parts = []
        for h in range(n_halves):
            raw = -np.log(substream(seed, "init", h).random((base, 3)))
            parts.append(raw / raw.sum(axis=1, keepdims=True))
        surveys = np.concatenate(parts)
    elif mode == CUSTOM:
        surveys = np.array(custom, dtype=float)
        if surveys.shape != (size, 3):
            raise InvalidParametersError("custom surveys must be (size, 3)")
        if surveys.min() < 0 or np.abs(surveys.sum(axis=1) - 1.0).max() > 1e-9:
            raise InvalidParametersError("custom surveys must lie on the simplex")
    else:
        raise InvalidParametersError(f"unknown init mode {mode!r}")
    return Population(surveys, alpha, arity, 0, seed, n_halves)


def _advance(surveys: np.ndarray, tape: Tape, alpha: float, arity: int,
             seed: int, generation: int):
    """One generation from a tape; returns (new, redraw profile, n_redraws)."""
    size = tape.size
    out = np.empty((size, 3))
    out_norm = np.empty(size)
    bad = np.empty(size, dtype=np.uint8)
    n_bad = _kernels.fold_surveys(surveys, tape.ptr, tape.u_idx, tape.signs,
                                  out, out_norm, bad)
    profile = bad.copy()
    n_redraws = 0
    attempt = 0
    while n_bad:
        attempt += 1
        if attempt > 1000:
            raise ContradictionError(
                "redraw policy failed to find consistent draws", where=None)
        n_redraws += n_bad
        members = np.nonzero(bad)[0]
        gen = substream(seed, "redraw", generation, attempt)
        z = gen.poisson(arity * alpha, size=n_bad)
        total = int(z.sum())
        ptr = np.zeros(n_bad + 1, dtype=np.int64)
        np.cumsum(z, out=ptr[1:])
        u_idx = gen.random((total, arity - 1))
        signs = gen.integers(0, 2, size=(total, arity), dtype=np.uint8)
        sub_out = np.empty((n_bad, 3))
        sub_norm = np.empty(n_bad)
        sub_bad = np.empty(n_bad, dtype=np.uint8)
        n_bad = _kernels.fold_surveys(surveys, ptr, u_idx, signs,
                                      sub_out, sub_norm, sub_bad)
        out[members] = sub_out
        bad[:] = 0
        bad[members[sub_bad.astype(bool)]] = 1
        profile[members] += sub_bad
    return out, profile, n_redraws


def step(population: Population, tape: Tape | None = None) -> Population:
    """Advance one generation.

    The tape defaults to the population's own (seed, generation) draws;
    passing an explicit tape supports coupling and equivariance tests.
    """
    if tape is None:
        tape = build_tape(population.seed, population.generation,
                          population.size, population.alpha, population.arity,
                          population.n_halves)
    if tape.size != population.size:
        raise InvalidParametersError("tape size does not match population")
    out, _, n_redraws = _advance(population.surveys, tape, population.alpha,
                                 population.arity, population.seed,
                                 population.generation)
    return Population(out, population.alpha, population.arity,
                      population.generation + 1, population.seed,
                      population.n_halves, population.redraws + n_redraws)


def evolve(population: Population, generations: int) -> Population:
    for _ in range(generations):
        population = step(population)
    return population


# ---------------------------------------------------------------------------
# Coupled replicas
# ---------------------------------------------------------------------------

@dataclass
class ReplicaPair:
    """Two populations driven by one draw stream; only values may differ."""

    first: Population
    second: Population

    def __post_init__(self):
        a, b = self.first, self.second
        if (a.size, a.alpha, a.arity, a.seed, a.generation, a.n_halves) != \
           (b.size, b.alpha, b.arity, b.seed, b.generation, b.n_halves):
            raise InvalidParametersError(
                "replicas must share size, alpha, arity, seed, and clock")


def replica_pair(size: int, alpha: float, seed: int = 0,
                 init_seeds: tuple[int, int] = (1, 2), arity: int = 3,
                 mode: str = UNIFORM_SIMPLEX) -> ReplicaPair:
    """Two independently initialized populations sharing one tape seed."""
    a = init_population(size, alpha, mode, init_seeds[0], arity)
    b = init_population(size, alpha, mode, init_seeds[1], arity)
    a.seed = seed
    b.seed = seed
    return ReplicaPair(a, b)


def population_distance(a: Population, b: Population) -> float:
    """Mean squared Euclidean distance between aligned members."""
    return float(np.sum((a.surveys - b.surveys) ** 2) / a.size)


def coupled_step(pair: ReplicaPair, tape: Tape | None = None) -> ReplicaPair:
    """Advance both replicas on one tape; diverging draws are an error."""
    a, b = pair.first, pair.second
    if tape is None:
        tape = build_tape(a.seed, a.generation, a.size, a.alpha, a.arity,
                          a.n_halves)
    out_a, prof_a, n_a = _advance(a.surveys, tape, a.alpha, a.arity,
                                  a.seed, a.generation)
    out_b, prof_b, n_b = _advance(b.surveys, tape, b.alpha, b.arity,
                                  b.seed, b.generation)
    if not np.array_equal(prof_a, prof_b):
        raise ReplicaDivergenceError(
            f"replicas consumed different redraw streams at generation "
            f"{a.generation} ({n_a} vs {n_b} redraws)")
    new_a = Population(out_a, a.alpha, a.arity, a.generation + 1, a.seed,
                       a.n_halves, a.redraws + n_a)
    new_b = Population(out_b, b.alpha, b.arity, b.generation + 1, b.seed,
                       b.n_halves, b.redraws + n_b)
    return ReplicaPair(new_a, new_b)


@dataclass
class TrajectoryRecord:
    """Per-generation observables of a coupled run."""

    generations: np.ndarray
    distance: np.ndarray        # D(t) >= 0
    mean_unfrozen: np.ndarray
    frozen_fraction: np.ndarray
    sigma_per_n: np.ndarray     # NaN when not sampled
    redraws: np.ndarray


def replica_run(pair: ReplicaPair, t_max: int, frozen_tol: float = 0.5,
                sigma_samples: int = 0, sigma_seed: int = 0
                ) -> tuple[ReplicaPair, TrajectoryRecord]:
    """Run ``t_max`` coupled generations recording D(t) after each."""
    ts, ds, mi, ff, sg, rd = [], [], [], [], [], []
    for _ in range(t_max):
        before = pair.first.redraws + pair.second.redraws
        pair = coupled_step(pair)
        ts.append(pair.first.generation)
        ds.append(population_distance(pair.first, pair.second))
        mi.append(pair.first.mean_unfrozen())
        ff.append(pair.first.frozen_fraction(frozen_tol))
        rd.append(pair.first.redraws + pair.second.redraws - before)
        if sigma_samples:
            est = population_complexity(pair.first, sigma_samples,
                                        seed=sigma_seed)
            sg.append(est.value)
        else:
            sg.append(float("nan"))
    rec = TrajectoryRecord(np.array(ts), np.array(ds), np.array(mi),
                           np.array(ff), np.array(sg), np.array(rd))
    return pair, rec


# ---------------------------------------------------------------------------
# Complexity estimate
# ---------------------------------------------------------------------------

@dataclass
class SigmaEstimate:
    """Monte Carlo estimate of the cluster log-count per variable.

    value = E[log Z_site] - (K-1) * alpha * E[log Z_edge], with sites drawn
    at Poisson(K*alpha) degree and edge overlaps drawn as one member
    against a fresh warning; the sign convention makes the clustered
    satisfiable phase positive.
    """

    value: float
    stderr: float
    site_mean: float
    edge_mean: float
    n_samples: int
    n_redraws: int


def population_complexity(population: Population, n_samples: int,
                          seed: int = 0) -> SigmaEstimate:
    if n_samples < 1:
        raise InvalidParametersError("need at least one sample")
    pool = population.surveys
    alpha, arity = population.alpha, population.arity
    gen = substream(seed, "sigma", population.generation)
    n_redraws = 0

    # site terms: full-degree folds
    z = gen.poisson(arity * alpha, size=n_samples)
    ptr = np.zeros(n_samples + 1, dtype=np.int64)
    np.cumsum(z, out=ptr[1:])
    total = int(z.sum())
    u_idx = gen.random((total, arity - 1))
    signs = gen.integers(0, 2, size=(total, arity), dtype=np.uint8)
    out = np.empty((n_samples, 3))
    norms = np.empty(n_samples)
    bad = np.empty(n_samples, dtype=np.uint8)
    n_bad = _kernels.fold_surveys(pool, ptr, u_idx, signs, out, norms, bad)
    attempt = 0
    while n_bad:
        attempt += 1
        n_redraws += n_bad
        members = np.nonzero(bad)[0]
        z2 = gen.poisson(arity * alpha, size=n_bad)
        ptr2 = np.zeros(n_bad + 1, dtype=np.int64)
        np.cumsum(z2, out=ptr2[1:])
        u2 = gen.random((int(z2.sum()), arity - 1))
        s2 = gen.integers(0, 2, size=(int(z2.sum()), arity), dtype=np.uint8)
        out2 = np.empty((n_bad, 3))
        norm2 = np.empty(n_bad)
        bad2 = np.empty(n_bad, dtype=np.uint8)
        n_bad = _kernels.fold_surveys(pool, ptr2, u2, s2, out2, norm2, bad2)
        norms[members] = norm2
        bad[:] = 0
        bad[members[bad2.astype(bool)]] = 1
    log_site = np.log(norms)

    # edge terms: one member against one fresh warning
    u_idx_e = gen.random((n_samples, arity - 1))
    signs_e = gen.integers(0, 2, size=(n_samples, arity), dtype=np.uint8)
    s_idx = gen.random(n_samples)
    norms_e = np.empty(n_samples)
    _kernels.edge_fold_norms(pool, u_idx_e, signs_e, s_idx, norms_e)
    while True:
        bad_e = norms_e <= 0.0
        n_bad_e = int(bad_e.sum())
        if not n_bad_e:
            break
        n_redraws += n_bad_e
        u2 = gen.random((n_bad_e, arity - 1))
        s2 = gen.integers(0, 2, size=(n_bad_e, arity), dtype=np.uint8)
        i2 = gen.random(n_bad_e)
        sub = np.empty(n_bad_e)
        _kernels.edge_fold_norms(pool, u2, s2, i2, sub)
        norms_e[bad_e] = sub
    log_edge = np.log(norms_e)

    coeff = (arity - 1) * alpha
    value = float(log_site.mean() - coeff * log_edge.mean())
    stderr = float(math.sqrt(log_site.var() / n_samples
                             + coeff ** 2 * log_edge.var() / n_samples))
    return SigmaEstimate(value, stderr, float(log_site.mean()),
                         float(log_edge.mean()), n_samples, n_redraws)


# ---------------------------------------------------------------------------
# Lyapunov exponent
# ---------------------------------------------------------------------------

@dataclass
class LyapunovEstimate:
    value: float
    ci: float                   # half-width, 95%
    stderr: float
    r_squared: float
    window: tuple[int, int]
    flags: list
    per_seed: list
    distance: np.ndarray | None = None


def _perturb(population: Population, size_eps: float, seed: int) -> Population:
    raw = -np.log(substream(seed, "perturb").random((population.size, 3)))
    noise = raw / raw.sum(axis=1, keepdims=True)
    mixed = (1.0 - size_eps) * population.surveys + size_eps * noise
    return Population(mixed, population.alpha, population.arity,
                      population.generation, population.seed,
                      population.n_halves, population.redraws)


def lyapunov(alpha: float, size: int, t_max: int = 250,
             fit_window: tuple[int, int] | None = None, seed: int = 0,
             seeds: Sequence[int] | None = None, equilibration: int = 150,
             perturbation: float = 1e-3, arity: int = 3,
             d_floor: float = 1e-280, d_ceiling: float = 1e-2,
             r2_threshold: float = 0.9, base_population: Population | None = None,
             keep_distance: bool = False) -> LyapunovEstimate:
    """Exponential rate of the coupled-replica distance D(t).

    One population is equilibrated, cloned with a small simplex-preserving
    perturbation, and the pair is run on a shared tape; lambda is minus
    the least-squares slope of log D(t) on the fit window (clipped where D
    underflows ``d_floor`` or saturates above ``d_ceiling``).  Positive
    lambda means boundary memory decays (unique stable solution); negative
    lambda means chaotic growth.  With several seeds the CI is the 95%
    half-width across seeds.
    """
    if seeds is not None:
        subs = [lyapunov(alpha, size, t_max, fit_window, s, None,
                         equilibration, perturbation, arity, d_floor,
                         d_ceiling, r2_threshold, None, keep_distance)
                for s in seeds]
        vals = np.array([e.value for e in subs])
        flags = sorted({f for e in subs for f in e.flags})
        ci = 1.96 * vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else float("nan")
        return LyapunovEstimate(float(vals.mean()), float(ci),
                                float(vals.std(ddof=1)) if len(vals) > 1 else float("nan"),
                                float(np.mean([e.r_squared for e in subs])),
                                subs[0].window, flags, subs,
                                subs[0].distance)
    if fit_window is None:
        fit_window = (20, t_max)
    lo, hi = fit_window
    hi = t_max if hi is None else hi
    if not (0 <= lo < hi <= t_max):
        raise InvalidParametersError("fit window must sit inside [0, t_max]")
    if base_population is None:
        pop = init_population(size, alpha, UNIFORM_SIMPLEX, seed, arity)
        pop = evolve(pop, equilibration)
    else:
        pop = base_population
    pair = ReplicaPair(pop, _perturb(pop, perturbation, seed))
    ds = np.empty(t_max)
    for t in range(t_max):
        pair = coupled_step(pair)
        ds[t] = population_distance(pair.first, pair.second)
    flags = []
    tt = np.arange(1, t_max + 1)
    mask = (tt >= lo) & (tt <= hi) & (ds > d_floor) & (ds < d_ceiling)
    if ds[(tt >= lo) & (tt <= hi)].min() <= d_floor:
        flags.append("underflow-truncated")
    if mask.sum() < 3:
        flags.append("window-too-short")
        return LyapunovEstimate(float("nan"), float("nan"), float("nan"), 0.0,
                                (lo, hi), flags, [],
                                ds if keep_distance else None)
    x = tt[mask].astype(float)
    y = np.log(ds[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 0.0
    dof = max(len(x) - 2, 1)
    sx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(float((resid ** 2).sum()) / dof / sx)
    if r2 < r2_threshold:
        flags.append("non-exponential")
    return LyapunovEstimate(-float(slope), 1.96 * stderr, stderr, r2,
                            (int(x[0]), int(x[-1])), flags, [],
                            ds if keep_distance else None)


# ---------------------------------------------------------------------------
# Alpha scan and finite-size drift
# ---------------------------------------------------------------------------

@dataclass
class ScanRow:
    alpha: float
    lam: float
    lam_ci: float
    sigma_per_n: float
    sigma_se: float
    frozen_fraction: float
    mean_unfrozen: float


@dataclass
class ScanResult:
    rows: list
    alpha_trivial: float | None      # onset of a frozen stationary state
    alpha_sigma_zero: float | None   # complexity sign change
    alpha_chaos: float | None        # lambda zero crossing

    def as_table(self) -> list[dict]:
        return [vars(r) for r in self.rows]


def _crossing(xs: np.ndarray, ys: np.ndarray, descending: bool) -> float | None:
    """First linear-interpolated zero crossing along the grid."""
    for j in range(len(xs) - 1):
        a, b = ys[j], ys[j + 1]
        if np.isnan(a) or np.isnan(b):
            continue
        if (a > 0 >= b) if descending else (a < 0 <= b):
            if a == b:
                return float(xs[j])
            return float(xs[j] + (xs[j + 1] - xs[j]) * a / (a - b))
    return None


def scan_alpha(alphas: Sequence[float], size: int, t_max: int = 250,
               seeds: Sequence[int] = (0, 1, 2, 3, 4), arity: int = 3,
               equilibration: int = 150, sigma_samples: int = 1_000_000,
               frozen_tol: float = 0.5, frozen_threshold: float = 0.01,
               fit_window: tuple[int, int] | None = None) -> ScanResult:
    """Locate the trivial onset, complexity sign change, and chaos onset.

    For each grid point and seed a population is equilibrated once and
    reused for the frozen fraction, the complexity estimate, and as the
    Lyapunov base.  Thresholds not bracketed by the grid come back None.
    """
    alphas = list(alphas)
    if any(alphas[j] >= alphas[j + 1] for j in range(len(alphas) - 1)):
        raise InvalidParametersError("alpha grid must be sorted ascending")
    rows = []
    for a in alphas:
        lams, sigmas, sig_ses, fracs, unf = [], [], [], [], []
        for s in seeds:
            pop = evolve(init_population(size, a, UNIFORM_SIMPLEX, s, arity),
                         equilibration)
            fracs.append(pop.frozen_fraction(frozen_tol))
            unf.append(pop.mean_unfrozen())
            est = population_complexity(pop, sigma_samples, seed=s)
            sigmas.append(est.value)
            sig_ses.append(est.stderr)
            lam = lyapunov(a, size, t_max, fit_window, s, arity=arity,
                           base_population=pop)
            lams.append(lam.value)
        lam_arr = np.array(lams, dtype=float)
        lam_ok = lam_arr[~np.isnan(lam_arr)]
        n_s = len(seeds)
        mc_se = math.sqrt(float(np.mean(np.square(sig_ses))) / n_s)
        between_se = (float(np.std(sigmas, ddof=1)) / math.sqrt(n_s)
                      if n_s > 1 else 0.0)
        rows.append(ScanRow(
            alpha=a,
            lam=float(lam_ok.mean()) if lam_ok.size else float("nan"),
            lam_ci=float(1.96 * lam_ok.std(ddof=1) / math.sqrt(lam_ok.size))
            if lam_ok.size > 1 else float("nan"),
            sigma_per_n=float(np.mean(sigmas)),
            sigma_se=max(mc_se, between_se),
            frozen_fraction=float(np.mean(fracs)),
            mean_unfrozen=float(np.mean(unf)),
        ))
    xs = np.array([r.alpha for r in rows])
    fr = np.array([r.frozen_fraction for r in rows])
    above = np.nonzero(fr > frozen_threshold)[0]
    alpha_trivial = float(xs[above[0]]) if above.size else None
    alpha_sigma_zero = _crossing(xs, np.array([r.sigma_per_n for r in rows]),
                                 descending=True)
    alpha_chaos = _crossing(xs, np.array([r.lam for r in rows]), descending=True)
    return ScanResult(rows, alpha_trivial, alpha_sigma_zero, alpha_chaos)


@dataclass
class DriftResult:
    sizes: list
    means: np.ndarray        # (n_seeds, n_sizes) time-averaged mean unfrozen
    deltas: np.ndarray       # (n_sizes - 1,) |m(L_j) - m(L_{j+1})| seed-averaged
    slope: float             # log-log slope of deltas vs size


def finite_size_drift(alpha: float, base_size: int,
                      factors: Sequence[int] = (1, 2, 4),
                      seeds: Sequence[int] = (0, 1, 2, 3),
                      equilibration: int = 300, measure: int = 1000,
                      arity: int = 3) -> DriftResult:
    """Finite-population drift of the mean unfrozen weight.

    Runs one population per size factor in lockstep on shared half-tapes
    (common randomness suppresses the noise of the size-to-size
    differences), time-averages mean unfrozen weight over the measurement
    window, and fits the log-log slope of consecutive-size differences;
    1/L corrections give slope -1.
    """
    factors = list(factors)
    sizes = [base_size * f for f in factors]
    means = np.empty((len(seeds), len(sizes)))
    for si, seed in enumerate(seeds):
        pops = [init_population(sz, alpha, UNIFORM_SIMPLEX, seed, arity,
                                n_halves=f)
                for sz, f in zip(sizes, factors)]
        acc = np.zeros(len(sizes))
        for t in range(equilibration + measure):
            for j, pop in enumerate(pops):
                pops[j] = step(pop)
            if t >= equilibration:
                for j, pop in enumerate(pops):
                    acc[j] += pop.mean_unfrozen()
        means[si] = acc / measure
    seed_mean = means.mean(axis=0)
    deltas = np.abs(np.diff(seed_mean))
    xs = np.log(np.array(sizes[:-1], dtype=float))
    slope = float(np.polyfit(xs, np.log(deltas), 1)[0]) if len(deltas) > 1 \
        else float("nan")
    return DriftResult(sizes, means, deltas, slope)


def geweke_z(series: np.ndarray, first: float = 0.1, last: float = 0.5) -> float:
    """Split-comparison z-score for stationarity of a scalar trajectory."""
    series = np.asarray(series, dtype=float)
    n = series.shape[0]
    a = series[: max(int(n * first), 2)]
    b = series[n - max(int(n * last), 2):]
    denom = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    if denom == 0:
        return 0.0
    return float((a.mean() - b.mean()) / denom)
