"""Scaled random walks and compound Poisson paths, and crossing-probability estimators.

The level-``c`` crossing event is ``sup_{0<=t<=1} x(t) >= c`` for the scaled
path ``x``. The tilted estimator samples from the exponentially tilted law
and reweights with the likelihood ratio, either at the endpoint or stopped
at the first crossing time.

Randomness is drawn in fixed-size blocks, each with its own stream keyed by
``(seed, scale index, block index)``, so results do not depend on how blocks
are spread over worker processes.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OutOfDomain, WrongKind
from .laws import CompoundPoisson, Law, LegendreTransform
from .pathspace import BVPath
from .ratefn import crossing_rate

FAMILIES = ("random_walk", "compound_poisson")
ESTIMATORS = ("naive", "tilted")
WEIGHTINGS = ("endpoint", "stopped")
MIN_SAMPLES = 100
BLOCK_ELEMENTS = 1 << 20  # random-walk increments per block
BLOCK_MAX = 8192  # samples per block
WORKERS_ENV = "LDPATH_WORKERS"

CSV_COLUMNS = ("family", "law", "c", "scale", "estimator", "p_hat", "std_err",
               "empirical_rate", "theoretical_rate", "seed")


def block_size(family: str, scale: float) -> int:
    if family == "random_walk":
        return int(max(1, min(BLOCK_MAX, BLOCK_ELEMENTS // int(scale))))
    return BLOCK_MAX


def block_rng(seed: int, scale_index: int, block_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(scale_index), int(block_index)))
    return np.random.Generator(np.random.PCG64(ss))


# Raw draws ------------------------------------------------------------------

def rw_increments(law: Law, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    return np.asarray(law.sample(rng, (size, n)), dtype=float).reshape(size, n)


@dataclass(frozen=True)
class CPDraws:
    """Events of ``size`` compound Poisson paths on ``[0, T]``, grouped by path."""

    counts: np.ndarray
    times: np.ndarray  # sorted within each path
    jumps: np.ndarray
    drift: float
    T: float

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.counts)[:-1]])

    def owners(self) -> np.ndarray:
        return np.repeat(np.arange(self.counts.size), self.counts)

    def right_values(self) -> np.ndarray:
        """Unscaled path values just after each event."""
        cs = np.cumsum(self.jumps)
        base = np.concatenate([[0.0], cs])[self.starts]
        return self.drift * self.times + cs - np.repeat(base, self.counts)

    def endpoints(self) -> np.ndarray:
        total = np.bincount(self.owners(), weights=self.jumps, minlength=self.counts.size)
        return total + self.drift * self.T


def cp_draws(law: CompoundPoisson, T: float, rng: np.random.Generator, size: int) -> CPDraws:
    if not isinstance(law, CompoundPoisson):
        raise WrongKind(f"compound poisson paths need a compound_poisson law, got {law.kind}")
    counts = rng.poisson(law.rate * T, size)
    total = int(counts.sum())
    times = rng.uniform(0.0, T, total)
    jumps = np.asarray(law.jump.sample(rng, total), dtype=float).reshape(total)
    owners = np.repeat(np.arange(size), counts)
    order = np.lexsort((times, owners))
    return CPDraws(counts, times[order], jumps[order], float(law.drift), float(T))


# Single paths ---------------------------------------------------------------

def rw_path(increments: np.ndarray) -> BVPath:
    n = increments.size
    vals = np.concatenate([[0.0], np.cumsum(increments)]) / n
    return BVPath(np.arange(n + 1) / n, vals, vals)


def simulate_rw(law: Law, n: int, rng: np.random.Generator) -> BVPath:
    """Scaled random walk: breakpoints ``k/n`` with values ``S_k / n``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return rw_path(rw_increments(law, int(n), rng, 1)[0])


def cp_path(draws: CPDraws, index: int = 0) -> BVPath:
    T = draws.T
    lo = int(draws.starts[index])
    hi = lo + int(draws.counts[index])
    u = draws.times[lo:hi]
    right = draws.right_values()[lo:hi]
    left = right - draws.jumps[lo:hi]
    end = float(draws.endpoints()[index])
    rows = [(0.0, 0.0, 0.0)]
    rows += [(ui / T, li / T, ri / T) for ui, li, ri in zip(u, left, right) if ui > 0.0]
    if rows[-1][0] < 1.0:
        rows.append((1.0, end / T, end / T))
    return BVPath.from_breakpoints(rows)


def simulate_cp(law: CompoundPoisson, T: float, rng: np.random.Generator) -> BVPath:
    """Scaled compound Poisson path ``xi(tT)/T`` on ``[0, 1]``."""
    if T < 1:
        raise ValueError("T must be at least 1")
    return cp_path(cp_draws(law, T, rng, 1))


# Crossing detection ---------------------------------------------------------

def rw_crossings(increments: np.ndarray, c: float):
    """``(hit, tau, s_tau, s_end)`` per row; ``tau`` is the first crossing step."""
    size, n = increments.shape
    s = np.cumsum(increments, axis=1)
    above = s / n >= c
    hit = above.any(axis=1)
    k = np.argmax(above, axis=1)
    tau = np.where(hit, k + 1, n).astype(float)
    s_tau = s[np.arange(size), k]
    if c <= 0:
        hit[:] = True
        tau[:] = 0.0
        s_tau = np.zeros(size)
    return hit, tau, s_tau, s[:, -1]


def cp_crossings(draws: CPDraws, c: float):
    """``(hit, tau, x_tau, x_end)`` per path in unscaled time and space."""
    size = draws.counts.size
    T, drift = draws.T, draws.drift
    level = c * T
    x_end = draws.endpoints()
    hit = np.zeros(size, dtype=bool)
    tau = np.full(size, T)
    x_tau = np.zeros(size)
    if c <= 0:
        return np.ones(size, dtype=bool), np.zeros(size), x_tau, x_end

    right = draws.right_values()
    left = right - draws.jumps
    starts = draws.starts
    m = right.size
    if m:
        flag = (right / T >= c) | (left / T >= c)
        idx = np.where(flag, np.arange(m), m)
        has = draws.counts > 0
        first = np.full(size, m)
        first[has] = np.minimum.reduceat(idx, starts[has])
        ends = starts + draws.counts
        found = first < ends
        f = first[found]
        cont = left[f] / T >= c  # reached during the drift piece before the jump
        prev_u = np.where(f > starts[found], draws.times[np.maximum(f - 1, 0)], 0.0)
        prev_x = np.where(f > starts[found], right[np.maximum(f - 1, 0)], 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_cont = prev_u + (level - prev_x) / drift
        hit[found] = True
        tau[found] = np.where(cont, t_cont, draws.times[f])
        x_tau[found] = np.where(cont, level, right[f])
    if drift > 0:
        # crossing on the final drift piece
        late = ~hit & (x_end / T >= c)
        if late.any():
            prev_u, prev_x = np.zeros(size), np.zeros(size)
            has = draws.counts > 0
            last = (starts + draws.counts - 1)[has]
            prev_u[has] = draws.times[last]
            prev_x[has] = right[last]
            hit[late] = True
            tau[late] = (prev_u + (level - prev_x) / drift)[late]
            x_tau[late] = level
    return hit, tau, x_tau, x_end


# Estimation -----------------------------------------------------------------

@dataclass(frozen=True)
class CrossingExperiment:
    law: Law
    family: str
    c: float
    scales: tuple
    samples: int
    estimator: str = "tilted"
    weighting: str = "endpoint"
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(self.scales))
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"unknown weighting {self.weighting!r}")
        if int(self.samples) < MIN_SAMPLES:
            raise ConfigError(f"samples must be at least {MIN_SAMPLES}")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ConfigError("scales must be positive")
        if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ConfigError("scales must be strictly increasing")
        if self.family == "random_walk" and any(float(s) != int(s) for s in self.scales):
            raise ConfigError("random walk scales must be integers")
        if self.family == "compound_poisson":
            if not isinstance(self.law, CompoundPoisson):
                raise WrongKind("the compound_poisson family needs a compound_poisson law")
            if any(s < 1 for s in self.scales):
                raise ConfigError("compound poisson scales must be at least 1")
        if self.c < 0 or not math.isfinite(self.c):
            raise ConfigError("level c must be a finite nonnegative number")
        self.law.require_centered()


@dataclass(frozen=True)
class ScaleEstimate:
    scale: float
    p_hat: float
    std_err: float
    empirical_rate: float
    theoretical_rate: float
    hits: int
    samples: int
    tilt: float = 0.0
    p_upper: float | None = None  # one-sided 95% bound when nothing hit

    @property
    def rate_std_err(self) -> float:
        """Delta-method standard error of the empirical rate."""
        if self.p_hat <= 0:
            return math.inf
        return self.std_err / (self.p_hat * self.scale)


@dataclass(frozen=True)
class EstimateResult:
    experiment: CrossingExperiment
    rows: tuple = field(default_factory=tuple)

    def to_csv(self) -> str:
        exp = self.experiment
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([exp.family, exp.law.label, _fmt(exp.c), _fmt(r.scale), exp.estimator,
                        _fmt(r.p_hat), _fmt(r.std_err), _fmt(r.empirical_rate),
                        _fmt(r.theoretical_rate), exp.seed])
        return buf.getvalue()


def _fmt(x: float) -> str:
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return repr(float(x))


def tilt_parameter(law: Law, c: float, scale: float) -> float:
    """Tilt towards the crossing slope ``c / v0``.

    When that slope sits on the support edge the maximizer is infinite; the
    slope is then pulled inside by a factor ``1 - 1/(2 scale)``.
    """
    if c <= 0:
        return 0.0
    lt = LegendreTransform(law)
    v0 = crossing_rate(lt, c).v0
    alpha = c / v0
    lam = lt(alpha)[1]
    if not (law.domain.interior(lam) and math.isfinite(lam)):
        lam = lt(alpha * (1.0 - 0.5 / scale))[1]
    if not (law.domain.interior(lam) and math.isfinite(lam)):
        edge = law.domain.lambda_plus if lam > 0 else law.domain.lambda_minus
        lam = edge * (1.0 - 1.0 / scale)
    if not law.domain.interior(lam):
        raise OutOfDomain(f"no usable tilt for {law.label} at c={c}")
    return float(lam)


def _run_block(task) -> np.ndarray:
    """Log-weights of one block; ``-inf`` for paths that did not cross."""
    family, law, lam, kappa, scale, c, weighting, seed, si, bi, size = task
    rng = block_rng(seed, si, bi)
    if family == "random_walk":
        n = int(scale)
        hit, tau, x_tau, x_end = rw_crossings(rw_increments(law, n, rng, size), c)
        horizon = float(n)
    else:
        hit, tau, x_tau, x_end = cp_crossings(cp_draws(law, scale, rng, size), c)
        horizon = float(scale)
    if lam == 0.0:
        logw = np.zeros(size)
    elif weighting == "stopped":
        logw = -lam * x_tau + tau * kappa
    else:
        logw = -lam * x_end + horizon * kappa
    return np.where(hit, logw, -np.inf)


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


def _estimate_scale(exp: CrossingExperiment, si: int, scale: float, theory: float,
                    pool: ProcessPoolExecutor | None) -> ScaleEstimate:
    law = exp.law
    lam = tilt_parameter(law, exp.c, scale) if exp.estimator == "tilted" else 0.0
    sampler = law.tilt(lam) if lam != 0.0 else law
    kappa = law.cumulant(lam) if lam != 0.0 else 0.0
    bsize = block_size(exp.family, scale)
    n_total = int(exp.samples)
    tasks = []
    for bi, lo in enumerate(range(0, n_total, bsize)):
        tasks.append((exp.family, sampler, lam, kappa, scale, exp.c, exp.weighting,
                      exp.seed, si, bi, min(bsize, n_total - lo)))
    parts = list(pool.map(_run_block, tasks)) if pool is not None else [_run_block(t) for t in tasks]
    logw = np.concatenate(parts)

    hits = int(np.isfinite(logw).sum())
    if hits == 0:
        return ScaleEstimate(float(scale), 0.0, 0.0, math.inf, theory, 0, n_total, lam,
                             p_upper=3.0 / n_total)
    shift = float(logw[np.isfinite(logw)].max())
    w = np.exp(logw - shift)
    mean = float(w.mean())
    sd = float(w.std(ddof=1)) if n_total > 1 else 0.0
    p_hat = math.exp(shift) * mean
    std_err = math.exp(shift) * sd / math.sqrt(n_total)
    log_p = shift + math.log(mean)
    if lam == 0.0:
        p_hat = min(p_hat, 1.0)
        log_p = min(log_p, 0.0)
    rate = -log_p / float(scale)
    return ScaleEstimate(float(scale), p_hat, std_err, rate, theory, hits, n_total, lam)


def estimate_crossing(exp: CrossingExperiment) -> EstimateResult:
    theory = crossing_rate(exp.law, exp.c).rate
    workers = _resolve_workers(exp.workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [_estimate_scale(exp, i, s, theory, pool) for i, s in enumerate(exp.scales)]
    else:
        rows = [_estimate_scale(exp, i, s, theory, None) for i, s in enumerate(exp.scales)]
    return EstimateResult(exp, tuple(rows))


# Rate tables ----------------------------------------------------------------

@dataclass(frozen=True)
class RateRow:
    scale: float
    empirical_rate: float
    theoretical_rate: float
    gap: float
    rate_std_err: float


@dataclass(frozen=True)
class RateTable:
    rows: tuple

    @property
    def final_gap(self) -> float:
        return self.rows[-1].gap

    def shrinking(self, slack: float = 2.0) -> bool:
        """Gaps weakly decrease, up to ``slack`` combined rate standard errors."""
        for a, b in zip(self.rows, self.rows[1:]):
            allowance = slack * math.hypot(a.rate_std_err, b.rate_std_err)
            if not b.gap <= a.gap + allowance:
                return False
        return True


def rate_table(result: EstimateResult | CrossingExperiment) -> RateTable:
    if isinstance(result, CrossingExperiment):
        result = estimate_crossing(result)
    rows = tuple(RateRow(r.scale, r.empirical_rate, r.theoretical_rate,
                         r.empirical_rate - r.theoretical_rate, r.rate_std_err)
                 for r in result.rows)
    return RateTable(rows)
