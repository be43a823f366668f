"""Disorder ensembles and scaling-exponent fits.

Realizations are independent and seeded by ``mix_seed(master_seed, index)``.
Per-realization spreading distances are collected into an index-ordered array
before any reduction, so results do not depend on the number of worker threads.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .errors import DomainError, FitError, InputError, NumericalError
from .model import DisorderSpec, LatticeSpec, build_hamiltonian, sample_disorder
from .propagate import DEFAULT_STEP_FACTOR, evolve

log = logging.getLogger(__name__)

FAILURE_BUDGET = 0.01
AVERAGING = "mean over realizations of per-realization x_c"


@dataclass
class EnsembleConfig:
    lattice: LatticeSpec
    disorder: DisorderSpec
    t0: float
    times: np.ndarray
    n_realizations: int
    propagator: str = "stepped"
    step_factor: float = DEFAULT_STEP_FACTOR
    threads: int = 1
    first_index: int = 0

    def fingerprint(self) -> str:
        payload = {
            "lengths": list(self.lattice.lengths),
            "disorder": {"kind": self.disorder.kind.name, **self.disorder.kind.params(),
                         "flavor": self.disorder.flavor, "master_seed": self.disorder.master_seed},
            "t0": self.t0,
            "times": [float(t).hex() for t in np.asarray(self.times, float)],
            "n_realizations": self.n_realizations,
            "propagator": self.propagator,
            "step_factor": self.step_factor,
            "first_index": self.first_index,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_xc: np.ndarray
    sem_xc: np.ndarray
    n_realizations: int
    n_failed: int = 0
    failed: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    samples: Optional[np.ndarray] = None

    @property
    def xc(self) -> np.ndarray:
        return self.mean_xc


def reduce_samples(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and standard error over axis 0; the error is 0 for one sample."""
    samples = np.asarray(samples, float)
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(n)


def _one(cfg: EnsembleConfig, index: int):
    field_ = sample_disorder(cfg.disorder, cfg.lattice, index)
    H = build_hamiltonian(cfg.lattice, cfg.t0, field_, cfg.disorder.flavor)
    kwargs = {"step_factor": cfg.step_factor} if cfg.propagator == "stepped" else {}
    try:
        return evolve(H, None, cfg.times, cfg.propagator, realization=index, **kwargs).xc
    except NumericalError as exc:
        return exc


def map_realizations(fn, indices, threads: int = 1) -> list:
    """``[fn(i) for i in indices]`` on a thread pool; output order follows ``indices``."""
    indices = list(indices)
    threads = max(1, int(threads))
    if threads == 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, indices))


def run_ensemble(cfg: EnsembleConfig, keep_samples: bool = False) -> EnsembleResult:
    """Evolve every realization and average x_c(t) pointwise.

    A realization that raises a numerical error is excluded and counted; the
    run fails when more than 1% of realizations fail.
    """
    if cfg.n_realizations < 1:
        raise InputError("n_realizations must be >= 1")
    indices = range(cfg.first_index, cfg.first_index + cfg.n_realizations)
    outcomes = map_realizations(lambda i: _one(cfg, i), indices, cfg.threads)

    failed = [(i, str(o)) for i, o in zip(indices, outcomes) if isinstance(o, Exception)]
    for i, msg in failed:
        log.warning("realization %d excluded: %s", i, msg)
    if len(failed) > math.floor(FAILURE_BUDGET * cfg.n_realizations):
        raise NumericalError(f"{len(failed)} of {cfg.n_realizations} realizations failed "
                             f"(budget {FAILURE_BUDGET:.0%}); first: {failed[0][1]}")
    good = np.array([o for o in outcomes if not isinstance(o, Exception)])
    mean, sem = reduce_samples(good)
    provenance = {
        "config_hash": cfg.fingerprint(),
        "master_seed": cfg.disorder.master_seed,
        "version": __version__,
        "averaging": AVERAGING,
    }
    return EnsembleResult(np.asarray(cfg.times, float), mean, sem, good.shape[0], len(failed), failed,
                          provenance, good if keep_samples else None)


# -- fits ------------------------------------------------------------------------


@dataclass
class ScalingFit:
    window: tuple[float, float]
    slope: float
    slope_stderr: float
    intercept: float
    n_points: int
    regressor: str = "ln t"

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class CrossoverFit:
    slope_early: float
    slope_late: float
    breakpoint_t: float
    sse: float
    window: tuple[float, float]
    degenerate: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _series(result) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(result, tuple):
        t, y = result
    elif hasattr(result, "mean_xc"):
        t, y = result.times, result.mean_xc
    elif hasattr(result, "xc_pred"):
        t, y = result.times, result.xc_pred
    else:
        t, y = result.times, result.xc
    return np.asarray(t, float), np.asarray(y, float)


def _select(t, y, window, min_points):
    if window is None:
        mask = np.ones(t.size, bool)
        window = (float(t[0]), float(t[-1]))
    else:
        lo, hi = window
        if not lo < hi:
            raise FitError(f"empty window {window}")
        mask = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if mask.sum() < min_points:
        raise FitError(f"window {window} holds {int(mask.sum())} points, need >= {min_points}")
    if np.any(y[mask] <= 0) or np.any(t[mask] <= 0):
        raise FitError("log-log fit needs strictly positive t and x_c")
    return t[mask], y[mask], (float(window[0]), float(window[1]))


def _ols(u, v):
    n = u.size
    A = np.vstack([u, np.ones(n)]).T
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - A @ coef
    dof = n - 2
    s2 = resid @ resid / dof if dof > 0 else 0.0
    sxx = np.sum((u - u.mean()) ** 2)
    stderr = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    return float(coef[0]), float(coef[1]), stderr


def fit_loglog_slope(result, window=None, min_points: int = 5) -> ScalingFit:
    """OLS of ln x_c on ln t over the window."""
    t, y, window = _select(*_series(result), window, min_points)
    slope, intercept, err = _ols(np.log(t), np.log(y))
    return ScalingFit(window, slope, err, intercept, t.size)


def fit_log_corrected(result, window=None, min_points: int = 5) -> ScalingFit:
    """OLS of ln x_c on ln(t / sqrt(ln t)); a unit slope matches x_c ~ t/(ln t)^(1/2)."""
    t, y, window = _select(*_series(result), window, min_points)
    if t.min() <= math.e:
        raise DomainError("log-corrected fit needs t > e throughout the window")
    u = np.log(t) - 0.5 * np.log(np.log(t))
    slope, intercept, err = _ols(u, np.log(y))
    return ScalingFit(window, slope, err, intercept, t.size, regressor="ln(t / sqrt(ln t))")


def fit_crossover(result, window=None, min_segment: int = 3) -> CrossoverFit:
    """Continuous two-segment fit in (ln t, ln x_c), breakpoint on the sample grid.

    When no breakpoint improves on a single line the slopes are reported equal
    and ``degenerate`` is set.
    """
    t, y, window = _select(*_series(result), window, 12)
    u, v = np.log(t), np.log(y)
    slope0, icpt0, _ = _ols(u, v)
    sse0 = float(np.sum((v - slope0 * u - icpt0) ** 2))
    best = None
    for k in range(min_segment - 1, u.size - min_segment + 1):
        ub = u[k]
        A = np.vstack([np.ones(u.size), np.minimum(u - ub, 0), np.maximum(u - ub, 0)]).T
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        sse = float(np.sum((v - A @ coef) ** 2))
        if best is None or sse < best[0]:
            best = (sse, k, coef)
    sse, k, coef = best
    if sse0 - sse <= 1e-12 * (1.0 + sse0):
        return CrossoverFit(slope0, slope0, float(t[k]), sse0, window, degenerate=True)
    return CrossoverFit(float(coef[1]), float(coef[2]), float(t[k]), sse, window)


# -- default windows ----------------------------------------------------------------


def early_window(result, threshold: float = 3.0, decades: float = 1.0) -> tuple[float, float]:
    """First decade of t after x_c exceeds ``threshold`` sites."""
    t, y = _series(result)
    above = np.nonzero(y > threshold)[0]
    if above.size == 0:
        raise FitError(f"x_c never exceeds {threshold}")
    lo = float(t[above[0]])
    return lo, min(lo * 10 ** decades, float(t[-1]))


def late_window(result, lattice: LatticeSpec, fraction: float = 0.25, decades: float = 1.0) -> tuple[float, float]:
    """Last decade of t before x_c exceeds ``fraction`` of the lattice half-width."""
    t, y = _series(result)
    limit = fraction * (min(lattice.lengths) - 1) / 2
    over = np.nonzero(y > limit)[0]
    hi_idx = (over[0] - 1) if over.size else t.size - 1
    if hi_idx < 1:
        raise FitError("x_c exceeds the finite-size limit immediately")
    hi = float(t[hi_idx])
    return max(hi / 10 ** decades, float(t[0])), hi


def scaling_window(result, lattice: LatticeSpec, threshold: float = 3.0, fraction: float = 0.25) -> tuple[float, float]:
    """Range between the initial transient and the onset of finite-size saturation."""
    lo = early_window(result, threshold)[0]
    hi = late_window(result, lattice, fraction)[1]
    if not lo < hi:
        raise FitError("no scaling range between transient and finite-size limit")
    return lo, hi


def local_slopes(result, width: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Running log-log slope over ``width`` consecutive samples."""
    t, y = _series(result)
    u, v = np.log(t), np.log(y)
    centers, slopes = [], []
    for k in range(t.size - width + 1):
        s, _, _ = _ols(u[k:k + width], v[k:k + width])
        centers.append(math.exp(u[k:k + width].mean()))
        slopes.append(s)
    return np.array(centers), np.array(slopes)
