"""Two-point correlation dynamics of lossy bosonic lattices.

Correlations are stored as the single-particle density matrix
``G[x1, x2] = <a_x2^dag a_x1>``. With that ordering the lossy master equation
with hopping ``h`` and on-site loss rates ``gamma`` reduces to

    dG/dt = -i (H G - G H^dag),   H = h + i V,   V_x = -gamma_x / 2,

which is the same generator as the wave-packet propagator, so a rank-one
``G(0) = |0><0|`` evolves into ``|phi(t)><phi(t)|`` with ``phi`` from
:mod:`nhtransport.propagate`. (The transposed ordering ``<a_x1^dag a_x2>`` is
the complex conjugate and has the same diagonal.)

The purely dissipative model obeys ``dG/dt = H G + G H`` with a real symmetric
``H`` built from the neighbour-coupled jump operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .errors import CapabilityError, DegenerateStateError, ParameterError, ShapeError
from .model import IMAGINARY, Hamiltonian, LatticeSpec

DENSE_CAP = 2048


@dataclass
class CorrelationSeries:
    times: np.ndarray
    matrices: np.ndarray

    @property
    def traces(self) -> np.ndarray:
        return np.einsum("kii->k", self.matrices).real

    def distributions(self) -> np.ndarray:
        return np.array([surviving_distribution(G) for G in self.matrices])

    def spreading(self, lattice: LatticeSpec, origin=None) -> np.ndarray:
        from .model import resolve_origin

        r = lattice.distances_from(resolve_origin(lattice, origin))
        return self.distributions() @ r


def _as_rates(gamma, n: Optional[int] = None) -> np.ndarray:
    gamma = np.atleast_1d(np.asarray(gamma, float))
    if np.any(gamma < 0):
        raise ParameterError("loss rates must be non-negative")
    if n is not None and gamma.shape != (n,):
        raise ShapeError(f"expected {n} loss rates, got {gamma.shape}")
    return gamma


def nearest_neighbour_hopping(lattice: LatticeSpec, t0: float) -> sp.csr_matrix:
    b = lattice.bonds()
    n = lattice.n_sites
    rows = np.concatenate([b[:, 0], b[:, 1]])
    cols = np.concatenate([b[:, 1], b[:, 0]])
    return sp.csr_matrix((np.full(rows.size, float(t0)), (rows, cols)), shape=(n, n))


def build_effective_hamiltonian(h, gamma, lattice: Optional[LatticeSpec] = None) -> Hamiltonian:
    """Non-Hermitian generator ``h + i diag(-gamma / 2)`` of the lossy correlations."""
    h = sp.csr_matrix(h)
    n = h.shape[0]
    if h.shape != (n, n):
        raise ShapeError("hopping matrix must be square")
    if abs(h - h.conj().T).max() > 1e-12:
        raise ParameterError("hopping matrix must be Hermitian")
    gamma = _as_rates(gamma, n)
    lattice = lattice or LatticeSpec.chain(n)
    if lattice.n_sites != n:
        raise ShapeError("lattice size does not match hopping matrix")
    off = h - sp.diags(h.diagonal())
    onsite = h.diagonal().astype(complex) - 0.5j * gamma
    return Hamiltonian(lattice, 0.0, np.ascontiguousarray(onsite), IMAGINARY, hopping=off.tocsr())


def _dense(H) -> np.ndarray:
    Hd = H.to_dense() if isinstance(H, Hamiltonian) else np.asarray(H)
    if Hd.shape[0] > DENSE_CAP:
        raise CapabilityError(f"dense correlation evolution limited to N <= {DENSE_CAP}")
    return Hd


def _check_g0(G0, n) -> np.ndarray:
    G0 = np.asarray(G0, dtype=complex)
    if G0.ndim == 0:
        G0 = G0.reshape(1, 1)
    if G0.shape != (n, n):
        raise ShapeError(f"G0 has shape {G0.shape}, expected ({n}, {n})")
    return G0


def evolve_correlation(H, G0, times) -> CorrelationSeries:
    """G(t) = exp(-iHt) G0 exp(iH^dag t) via the eigendecomposition of H."""
    Hd = _dense(H)
    n = Hd.shape[0]
    G0 = _check_g0(G0, n)
    times = np.atleast_1d(np.asarray(times, float))
    E, R = la.eig(Hd)
    Rinv = la.inv(R)
    core = Rinv @ G0 @ Rinv.conj().T
    out = np.empty((times.size, n, n), dtype=complex)
    for k, t in enumerate(times):
        u = np.exp(-1j * E * t)
        G = R @ (u[:, None] * core * u.conj()[None, :]) @ R.conj().T
        out[k] = 0.5 * (G + G.conj().T)
    return CorrelationSeries(times, out)


def _offsets(d: int):
    units = [tuple(int(i == a) for i in range(d)) for a in range(d)]
    return units + [tuple(-c for c in u) for u in units]


def build_dissipative_hamiltonian(lattice: LatticeSpec, Gamma: float, gamma, form: str = "matrix") -> np.ndarray:
    """Real symmetric generator of the purely dissipative model with jumps
    ``z_x = a_x + sum_delta a_{x+delta}`` at rate ``Gamma`` plus local losses.

    ``form="matrix"`` uses the closed matrix form
    ``-(Gamma + gamma_x/2)`` on site, ``-Gamma/2`` per ordered (delta, -delta)
    neighbour term and ``-Gamma/2`` per ordered pair delta != delta'.
    ``form="jump"`` sums ``-(Gamma/2) c_x c_x^T`` over the truncated jump
    vectors; it differs only on the diagonal, ``-(2d+1) Gamma/2`` in the bulk,
    and is negative semidefinite by construction.
    """
    if not Gamma > 0:
        raise ParameterError("Gamma must be positive")
    n = lattice.n_sites
    gamma = _as_rates(gamma, n)
    coords = lattice.coordinates()
    lengths = np.array(lattice.lengths)
    offsets = [np.array(o) for o in _offsets(lattice.dimension)]
    H = np.zeros((n, n))

    def add(src, shift, value):
        target = coords + shift
        ok = np.all((target >= 0) & (target < lengths), axis=1)
        j = np.ravel_multi_index(target[ok].T, lattice.lengths)
        np.add.at(H, (src[ok], j), value)

    sites = np.arange(n)
    if form == "matrix":
        H[sites, sites] -= Gamma + gamma / 2
        for delta in offsets:
            add(sites, delta, -Gamma / 2)
            add(sites, -delta, -Gamma / 2)
        for a in offsets:
            for b in offsets:
                if not np.array_equal(a, b):
                    add(sites, a - b, -Gamma / 2)
    elif form == "jump":
        for x in range(n):
            members = [coords[x]] + [coords[x] + o for o in offsets]
            members = [m for m in members if np.all((m >= 0) & (m < lengths))]
            idx = np.array([np.ravel_multi_index(tuple(m), lattice.lengths) for m in members])
            H[np.ix_(idx, idx)] -= Gamma / 2
        H[sites, sites] -= gamma / 2
    else:
        raise ParameterError(f"unknown form {form!r}")
    return H


def evolve_dissipative(H, G0, times) -> CorrelationSeries:
    """G(t) = exp(Ht) G0 exp(Ht) for real symmetric H."""
    H = np.asarray(H, float)
    if not np.allclose(H, H.T, atol=1e-12):
        raise ParameterError("dissipative generator must be symmetric")
    n = H.shape[0]
    G0 = _check_g0(G0, n)
    times = np.atleast_1d(np.asarray(times, float))
    w, U = la.eigh(H)
    core = U.T @ G0 @ U
    out = np.empty((times.size, n, n), dtype=complex)
    for k, t in enumerate(times):
        e = np.exp(w * t)
        out[k] = U @ (e[:, None] * core * e[None, :]) @ U.T
    return CorrelationSeries(times, out)


def surviving_distribution(G, atol: float = 1e-300) -> np.ndarray:
    """P(x) = G[x, x] / tr G."""
    diag = np.real(np.diagonal(np.asarray(G)))
    tr = diag.sum()
    if not (np.isfinite(tr) and tr > atol):
        raise DegenerateStateError(f"correlation matrix trace {tr:.3e} too small to normalize")
    return diag / tr
