"""Lattices, reproducible disorder and tight-binding Hamiltonians.

Sites are indexed row-major: for a lattice with lengths ``(Lx, Ly)`` the
site at ``(x, y)`` has index ``x * Ly + y``. All boundaries are open.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ParameterError, ShapeError

IMAGINARY = "imaginary"
REAL = "real"
FLAVORS = (IMAGINARY, REAL)

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


def mix_seed(master_seed: int, realization_index: int) -> int:
    """Per-realization seed: SplitMix64 finalizer of ``master + golden * index``.

    For a fixed ``realization_index`` the map is a bijection of the 64-bit
    master seed, so distinct masters never collide on the same index.
    """
    if not 0 <= master_seed <= _MASK64:
        raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    if realization_index < 0:
        raise ParameterError(f"realization_index must be >= 0, got {realization_index}")
    z = (master_seed + _GOLDEN64 * (realization_index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class LatticeSpec:
    """Hypercubic lattice with open boundaries in one or two dimensions."""

    lengths: tuple[int, ...]
    boundary: str = "open"

    def __post_init__(self):
        lengths = tuple(int(n) for n in np.atleast_1d(self.lengths))
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {len(lengths)}")
        if any(n < 1 for n in lengths):
            raise ParameterError(f"lengths must be positive, got {lengths}")
        if self.boundary != "open":
            raise ParameterError("only open boundaries are supported")

    @classmethod
    def chain(cls, length: int) -> "LatticeSpec":
        return cls((length,))

    @classmethod
    def square(cls, lx: int, ly: int | None = None) -> "LatticeSpec":
        return cls((lx, lx if ly is None else ly))

    @property
    def dimension(self) -> int:
        return len(self.lengths)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.lengths))

    @property
    def shape2d(self) -> tuple[int, int]:
        """``(nx, ny)`` view used by the stencil kernels; a chain is ``(L, 1)``."""
        return (self.lengths[0], self.lengths[1] if self.dimension == 2 else 1)

    @property
    def center(self) -> tuple[int, ...]:
        return tuple(n // 2 for n in self.lengths)

    @property
    def center_index(self) -> int:
        return coords_to_index(self, self.center)

    @property
    def diameter(self) -> float:
        """Largest Euclidean distance between two sites."""
        return float(np.linalg.norm(np.array(self.lengths) - 1))

    def coordinates(self) -> np.ndarray:
        """Integer coordinates of every site, shape ``(N, d)``, in index order."""
        grids = np.indices(self.lengths).reshape(self.dimension, -1)
        return grids.T.copy()

    def distances_from(self, origin: Union[int, Sequence[int]]) -> np.ndarray:
        """Euclidean distance of every site from ``origin`` (index or coords)."""
        if np.isscalar(origin):
            origin = index_to_coords(self, int(origin))
        disp = self.coordinates() - np.asarray(origin)
        return np.sqrt((disp.astype(float) ** 2).sum(axis=1))

    def bonds(self) -> np.ndarray:
        """Undirected nearest-neighbour pairs ``(i, j)`` with ``i < j``."""
        idx = np.arange(self.n_sites).reshape(self.lengths)
        pairs = []
        for axis in range(self.dimension):
            lo = np.take(idx, np.arange(self.lengths[axis] - 1), axis=axis).ravel()
            hi = np.take(idx, np.arange(1, self.lengths[axis]), axis=axis).ravel()
            pairs.append(np.stack([lo, hi], axis=1))
        return np.concatenate(pairs, axis=0) if pairs else np.empty((0, 2), dtype=int)


def coords_to_index(lattice: LatticeSpec, coords: Iterable[int]) -> int:
    coords = tuple(int(c) for c in np.atleast_1d(coords))
    if len(coords) != lattice.dimension:
        raise IndexError(f"expected {lattice.dimension} coordinates, got {len(coords)}")
    for c, n in zip(coords, lattice.lengths):
        if not 0 <= c < n:
            raise IndexError(f"coordinates {coords} out of bounds for lengths {lattice.lengths}")
    return int(np.ravel_multi_index(coords, lattice.lengths))


def index_to_coords(lattice: LatticeSpec, index: int) -> tuple[int, ...]:
    if not 0 <= index < lattice.n_sites:
        raise IndexError(f"site index {index} out of range [0, {lattice.n_sites})")
    return tuple(int(c) for c in np.unravel_index(index, lattice.lengths))


# -- disorder distributions --------------------------------------------------


@dataclass(frozen=True)
class UniformSymmetric:
    """V uniform on [-W, W]."""

    W: float
    name = "uniform"

    def __post_init__(self):
        if not self.W > 0:
            raise ParameterError(f"W must be positive, got {self.W}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-self.W, self.W, n)

    def cdf(self, v):
        return np.clip((np.asarray(v, float) + self.W) / (2 * self.W), 0.0, 1.0)

    @property
    def std(self) -> float:
        return self.W / np.sqrt(3.0)

    def params(self) -> dict:
        return {"W": self.W}


@dataclass(frozen=True)
class Gaussian:
    """V normal with mean 0 and standard deviation sigma."""

    sigma: float
    name = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(0.0, self.sigma, n)

    def cdf(self, v):
        from scipy.special import ndtr

        return ndtr(np.asarray(v, float) / self.sigma)

    @property
    def std(self) -> float:
        return self.sigma

    def params(self) -> dict:
        return {"sigma": self.sigma}


@dataclass(frozen=True)
class TriangularRight:
    """Density (2/c)(1 - V/c) on [0, c]; the mean c/3 is deliberately not removed."""

    c: float
    name = "triangular"

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError(f"c must be positive, got {self.c}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.triangular(0.0, 0.0, self.c, n)

    def cdf(self, v):
        u = np.clip(np.asarray(v, float) / self.c, 0.0, 1.0)
        return 1.0 - (1.0 - u) ** 2

    @property
    def std(self) -> float:
        return self.c / np.sqrt(18.0)

    def params(self) -> dict:
        return {"c": self.c}


DisorderKind = Union[UniformSymmetric, Gaussian, TriangularRight]

DISORDER_KINDS = {cls.name: cls for cls in (UniformSymmetric, Gaussian, TriangularRight)}


def make_disorder_kind(name: str, **params) -> DisorderKind:
    try:
        cls = DISORDER_KINDS[name]
    except KeyError:
        raise ParameterError(f"unknown disorder kind {name!r}; expected one of {sorted(DISORDER_KINDS)}") from None
    return cls(**params)


@dataclass(frozen=True)
class DisorderSpec:
    kind: DisorderKind
    flavor: str = IMAGINARY
    master_seed: int = 0

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ParameterError(f"flavor must be one of {FLAVORS}, got {self.flavor!r}")
        mix_seed(self.master_seed, 0)  # validates the seed range


@dataclass(frozen=True)
class DisorderField:
    values: np.ndarray
    realization_index: int

    def mirrored(self, lattice: LatticeSpec) -> "DisorderField":
        """Field reflected through the lattice center along every axis."""
        flipped = self.values.reshape(lattice.lengths)[tuple(slice(None, None, -1) for _ in lattice.lengths)]
        return DisorderField(flipped.ravel().copy(), self.realization_index)

    def shifted(self, constant: float) -> "DisorderField":
        return DisorderField(self.values + constant, self.realization_index)


def sample_disorder(spec: DisorderSpec, lattice: LatticeSpec, realization_index: int) -> DisorderField:
    """Draw one i.i.d. disorder realization; identical inputs give identical bits."""
    rng = np.random.default_rng(mix_seed(spec.master_seed, realization_index))
    values = np.asarray(spec.kind.sample(rng, lattice.n_sites), dtype=float)
    values.setflags(write=False)
    return DisorderField(values, realization_index)


# -- Hamiltonian ---------------------------------------------------------------


@dataclass(frozen=True)
class Hamiltonian:
    """Hopping plus complex on-site terms.

    With ``hopping=None`` the off-diagonal part is ``t0`` on every
    nearest-neighbour bond of ``lattice`` (the fast stencil path). A custom
    Hermitian ``hopping`` matrix replaces it, which the open-system models use.
    """

    lattice: LatticeSpec
    t0: float
    diagonal: np.ndarray
    flavor: str = IMAGINARY
    hopping: sp.spmatrix | None = field(default=None, compare=False)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @property
    def is_stencil(self) -> bool:
        return self.hopping is None

    def off_diagonal(self) -> sp.csr_matrix:
        if self.hopping is not None:
            return sp.csr_matrix(self.hopping)
        n = self.n_sites
        b = self.lattice.bonds()
        rows = np.concatenate([b[:, 0], b[:, 1]])
        cols = np.concatenate([b[:, 1], b[:, 0]])
        data = np.full(rows.size, float(self.t0))
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def to_sparse(self) -> sp.csr_matrix:
        return (self.off_diagonal() + sp.diags(self.diagonal)).tocsr().astype(complex)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def diagonal_center(self) -> complex:
        """Midpoint of the ranges of the real and imaginary on-site terms."""
        d = self.diagonal
        if d.size == 0:
            return 0j
        return complex(0.5 * (d.real.max() + d.real.min()), 0.5 * (d.imag.max() + d.imag.min()))

    def spectral_bound(self, shift: complex = 0.0) -> float:
        """Gershgorin bound on the spectral radius of ``H - shift``, ``2 d t0 + max|V - shift|`` for the stencil."""
        vmax = float(np.max(np.abs(self.diagonal - shift))) if self.diagonal.size else 0.0
        if self.hopping is None:
            return 2 * self.lattice.dimension * abs(self.t0) + vmax
        rows = np.asarray(abs(sp.csr_matrix(self.hopping)).sum(axis=1)).ravel()
        return float(rows.max(initial=0.0)) + vmax


def build_hamiltonian(lattice: LatticeSpec, t0: float, field: DisorderField | np.ndarray,
                      flavor: str = IMAGINARY) -> Hamiltonian:
    """Tight-binding Hamiltonian with ``i V_x`` (imaginary) or ``V_x`` (real) on site x."""
    values = np.asarray(field.values if isinstance(field, DisorderField) else field, dtype=float)
    if values.shape != (lattice.n_sites,):
        raise ShapeError(f"disorder field has shape {values.shape}, lattice needs ({lattice.n_sites},)")
    if t0 < 0:
        raise ParameterError(f"t0 must be >= 0, got {t0}")
    if flavor not in FLAVORS:
        raise ParameterError(f"flavor must be one of {FLAVORS}, got {flavor!r}")
    diagonal = (1j * values) if flavor == IMAGINARY else values.astype(complex)
    diagonal = np.ascontiguousarray(diagonal, dtype=complex)
    diagonal.setflags(write=False)
    return Hamiltonian(lattice, float(t0), diagonal, flavor)


def resolve_origin(lattice: LatticeSpec, origin) -> int:
    """Accept ``None`` (lattice center), a site index or a coordinate tuple."""
    if origin is None:
        return lattice.center_index
    if np.isscalar(origin):
        index = int(origin)
        if not 0 <= index < lattice.n_sites:
            raise DomainError(f"origin {index} outside lattice")
        return index
    return coords_to_index(lattice, origin)
