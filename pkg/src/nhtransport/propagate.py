"""Wave-packet evolution under dphi/dt = -i H phi and spreading observables.

An eigenvalue ``E = eps + i lam`` contributes ``exp(-i eps t) exp(lam t)``, so a
positive imaginary part amplifies. States are always stored normalized; the
discarded growth is kept in ``log_norm``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la

from . import _kernels
from .errors import CapabilityError, ConditioningError, DomainError, NumericalBlowupError, ParameterError
from .model import Hamiltonian, LatticeSpec, resolve_origin

EXACT_CAP = 1024
DEFAULT_STEP_FACTOR = 0.05
_EPS = np.finfo(float).eps


@dataclass
class StateVector:
    amplitudes: np.ndarray
    log_norm: float = 0.0

    @classmethod
    def delta(cls, n_sites: int, site: int) -> "StateVector":
        amp = np.zeros(n_sites, dtype=complex)
        amp[site] = 1.0
        return cls(amp, 0.0)

    @classmethod
    def from_unnormalized(cls, vector, log_norm: float = 0.0) -> "StateVector":
        vector = np.asarray(vector, dtype=complex)
        nrm = np.linalg.norm(vector)
        if not (np.isfinite(nrm) and nrm > 0):
            raise NumericalBlowupError(f"cannot normalize vector with norm {nrm}")
        return cls(vector / nrm, log_norm + math.log(nrm))


@dataclass
class Trajectory:
    times: np.ndarray
    xc: np.ndarray
    log_norm: np.ndarray
    origin: int
    profiles: Optional[np.ndarray] = None
    method: str = ""

    def __len__(self):
        return self.times.size


def log_times(t_min: float, t_max: float, points: int) -> np.ndarray:
    """Log-spaced sample times including both end points."""
    if not 0 < t_min < t_max:
        raise ParameterError(f"need 0 < t_min < t_max, got {t_min}, {t_max}")
    if points < 2:
        raise ParameterError("need at least two sample times")
    return np.geomspace(t_min, t_max, points)


def intensity_profile(state: StateVector | np.ndarray) -> np.ndarray:
    amp = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    p = amp.real ** 2 + amp.imag ** 2
    return p / p.sum()


def spreading_distance(state: StateVector | np.ndarray, lattice: LatticeSpec, origin=None) -> float:
    """Intensity-weighted mean Euclidean displacement from ``origin``."""
    origin = resolve_origin(lattice, origin)
    return float(intensity_profile(state) @ lattice.distances_from(origin))


def _check_times(times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ParameterError("no sample times given")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ParameterError("times must be non-negative and sorted ascending")
    return times


def _trajectory(H: Hamiltonian, origin: int, times, states, log_norms, store_profiles, method):
    probs = states.real ** 2 + states.imag ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    xc = probs @ H.lattice.distances_from(origin)
    return Trajectory(times, xc, np.asarray(log_norms, float), origin,
                      probs if store_profiles else None, method)


# -- exact propagation by eigendecomposition ------------------------------------


def _exact_double(Hd: np.ndarray, origin: int, times: np.ndarray):
    E, R = la.eig(Hd)
    e0 = np.zeros(len(Hd), dtype=complex)
    e0[origin] = 1.0
    try:
        lu = la.lu_factor(R, check_finite=True)
    except (la.LinAlgError, ValueError) as exc:
        raise ConditioningError(f"eigenvector matrix is singular: {exc}") from exc
    c = la.lu_solve(lu, e0)
    cond = np.linalg.cond(R)
    lam_max = E.imag.max()
    # exponents are <= 0 after removing the fastest growth rate
    phase = np.exp(-1j * np.outer(E.real, times) + np.outer(E.imag - lam_max, times))
    vs = (R @ (c[:, None] * phase)).T
    norms = np.linalg.norm(vs, axis=1)
    scale = cond * np.linalg.norm(R, 2) * np.linalg.norm(c)
    with np.errstate(divide="ignore"):
        err = _EPS * scale / norms
    return vs, norms, lam_max * times, err, cond


def _exact_arb(Hd: np.ndarray, origin: int, times: np.ndarray, bits: int):
    import flint

    old = flint.ctx.prec
    flint.ctx.prec = bits
    try:
        n = len(Hd)
        A = flint.acb_mat([[flint.acb(float(z.real), float(z.imag)) for z in row] for row in Hd])
        E, R = A.eig(right=True, algorithm="approx")
        e0 = flint.acb_mat([[1 if i == origin else 0] for i in range(n)])
        c = R.solve(e0, algorithm="approx")
        lam_max = max(e.imag.mid() for e in E)
        minus_i = flint.acb(0, -1)
        vs = np.empty((times.size, n), dtype=complex)
        log_norms = np.empty(times.size)
        for k, t in enumerate(times):
            tt = flint.arb(float(t))
            w = flint.acb_mat([[c[j, 0] * (minus_i * (E[j] - flint.acb(0, lam_max)) * tt).exp()] for j in range(n)])
            v = R * w
            nrm = sum((v[i, 0].real ** 2 + v[i, 0].imag ** 2 for i in range(n)), flint.arb(0)).sqrt()
            vs[k] = [complex(float((v[i, 0].real / nrm).mid()), float((v[i, 0].imag / nrm).mid())) for i in range(n)]
            log_norms[k] = float((lam_max * tt + nrm.log()).mid())
        return vs, log_norms
    finally:
        flint.ctx.prec = old


def evolve_exact(H: Hamiltonian, origin=None, times=(0.0,), *, cap: int = EXACT_CAP,
                 store_profiles: bool = False, tol: float = 1e-11, max_bits: int = 2048,
                 realization: Optional[int] = None) -> Trajectory:
    """Evolve a site-localized packet through the full eigendecomposition of H.

    The double-precision result is accepted when its a-posteriori error
    estimate ``eps * cond(R) * |R| * |c| / |v(t)|`` stays below ``tol``. Late
    times under strong gain can push the amplitude of a far-away fast-growing
    mode below double roundoff; the solve is then repeated with ball
    arithmetic (python-flint) at enough bits to recover it.
    """
    times = _check_times(times)
    n = H.n_sites
    if n > cap:
        raise CapabilityError(f"exact propagation limited to N <= {cap}, got N = {n}")
    origin = resolve_origin(H.lattice, origin)
    Hd = H.to_dense()
    where = "" if realization is None else f" (realization {realization})"

    if not np.all(np.isfinite(Hd)):
        raise ConditioningError(f"Hamiltonian has non-finite entries{where}")
    vs, norms, shift, err, cond = _exact_double(Hd, origin, times)
    worst = float(np.max(err))
    if worst <= tol and np.all(norms > 0):
        log_norms = shift + np.log(norms)
        states = vs / norms[:, None]
        method = "exact"
    else:
        needed = 53 + max(0.0, math.log2(max(worst, 1.0) / tol)) + math.log2(max(cond, 1.0)) + 64
        bits = int(64 * math.ceil(needed / 64))
        if bits > max_bits or not np.isfinite(worst):
            raise ConditioningError(
                f"eigendecomposition too ill-conditioned{where}: error estimate {worst:.2e}, "
                f"cond(R) = {cond:.2e}")
        try:
            states, log_norms = _exact_arb(Hd, origin, times, bits)
        except ImportError as exc:
            raise ConditioningError(
                f"double precision insufficient{where} (error estimate {worst:.2e}) "
                "and python-flint is unavailable") from exc
        method = f"exact-arb{bits}"
    return _trajectory(H, origin, times, states, log_norms, store_profiles, method)


# -- stepped propagation -------------------------------------------------------


def evolve_stepped(H: Hamiltonian, origin=None, times=(0.0,), step_factor: float = DEFAULT_STEP_FACTOR,
                   *, store_profiles: bool = False, initial: Optional[StateVector] = None,
                   realization: Optional[int] = None) -> Trajectory:
    """Fixed-step RK4 with per-step renormalization, dt = step_factor / B.

    The on-site terms are first centered on the midpoint of their range; the
    removed constant only contributes a known factor ``exp(Im(c) t)`` to the
    norm and a global phase. ``B`` is the Gershgorin bound on the spectral
    radius of the centered H, so a global shift of the potential leaves the
    step sequence and the normalized state unchanged. Sample times are hit
    exactly by shrinking the last steps of each interval.
    """
    times = _check_times(times)
    if not 0 < step_factor <= 0.2:
        raise ParameterError(f"step factor must lie in (0, 0.2], got {step_factor}")
    origin = resolve_origin(H.lattice, origin)
    center = H.diagonal_center()
    bound = H.spectral_bound(center)
    dt_max = step_factor / bound if bound > 0 else max(float(times[-1]), 1.0)

    if initial is None:
        phi = np.zeros(H.n_sites, dtype=complex)
        phi[origin] = 1.0
        log0 = 0.0
    else:
        phi = np.array(initial.amplitudes, dtype=complex)
        log0 = initial.log_norm
    diag = np.ascontiguousarray(H.diagonal - center, dtype=complex)

    if H.is_stencil:
        nx, ny = H.lattice.shape2d
        states, log_norms, status = _kernels.rk4_stencil(diag, nx, ny, float(H.t0), phi, dt_max, times)
    else:
        off = H.off_diagonal().astype(complex)
        states, log_norms, status = _kernels.rk4_csr(diag, off.indptr.astype(np.int64),
                                                     off.indices.astype(np.int64), off.data, phi, dt_max, times)
    if status >= 0:
        where = "" if realization is None else f" in realization {realization}"
        raise NumericalBlowupError(f"state norm became non-finite at step {status}{where}")
    log_norms = log_norms + log0 + center.imag * times
    return _trajectory(H, origin, times, states, log_norms, store_profiles, "stepped")


def evolve(H: Hamiltonian, origin=None, times=(0.0,), method: str = "stepped", **kwargs) -> Trajectory:
    if method == "stepped":
        return evolve_stepped(H, origin, times, **kwargs)
    if method == "exact":
        kwargs.pop("step_factor", None)
        return evolve_exact(H, origin, times, **kwargs)
    raise DomainError(f"unknown propagator {method!r}")
