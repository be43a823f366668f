"""Complex spectra, pooled imaginary-part densities of states and localization lengths."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg as la
from scipy.special import ndtr

from .errors import CapabilityError, DomainError, InputError
from .model import REAL, Hamiltonian, LatticeSpec

DENSE_CAP = 2048
DEFAULT_BINS = 101


@dataclass
class ComplexSpectrum:
    eigenvalues: np.ndarray
    vectors: Optional[np.ndarray] = None

    @property
    def growth_rates(self) -> np.ndarray:
        return self.eigenvalues.imag


def eigendecompose(H: Hamiltonian, vectors: bool = False, cap: int = DENSE_CAP) -> ComplexSpectrum:
    """All eigenvalues (and optionally right eigenvectors as columns) of a dense H."""
    if H.n_sites > cap:
        raise CapabilityError(f"dense eigendecomposition limited to N <= {cap}, got N = {H.n_sites}")
    Hd = H.to_dense()
    if H.flavor == REAL and np.allclose(Hd, Hd.conj().T, rtol=0, atol=0):
        if vectors:
            w, v = la.eigh(Hd)
            return ComplexSpectrum(w.astype(complex), v)
        return ComplexSpectrum(la.eigvalsh(Hd).astype(complex))
    if vectors:
        w, v = la.eig(Hd)
        return ComplexSpectrum(w, v)
    return ComplexSpectrum(la.eigvals(Hd))


@dataclass
class ImdosHistogram:
    bin_edges: np.ndarray
    density: np.ndarray
    n_samples: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    def mean(self) -> float:
        return float(np.sum(self.centers * self.density * self.widths))

    def std(self) -> float:
        mu = self.mean()
        var = np.sum(((self.centers - mu) ** 2 + self.widths ** 2 / 12) * self.density * self.widths)
        return float(np.sqrt(var))

    def cdf_at_edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.density * self.widths)])

    def survival(self) -> "SurvivalFunction":
        return survival_function(self)

    def rows(self):
        return zip(self.bin_edges[:-1], self.bin_edges[1:], self.density)


def _pool(spectra: Iterable[ComplexSpectrum | np.ndarray]) -> np.ndarray:
    parts = [np.asarray(s.eigenvalues if isinstance(s, ComplexSpectrum) else s).imag.ravel() for s in spectra]
    if not parts or sum(p.size for p in parts) == 0:
        raise InputError("no eigenvalues to histogram")
    return np.concatenate(parts)


def imdos_histogram(spectra: Sequence[ComplexSpectrum | np.ndarray], bins: int = DEFAULT_BINS,
                    span: Optional[tuple[float, float]] = None) -> ImdosHistogram:
    """Density of Im(E) pooled with equal weight over every eigenvalue given.

    Bins are equal-width over the sample range unless ``span`` is given.
    """
    if bins < 10:
        raise InputError(f"need at least 10 bins, got {bins}")
    samples = _pool(spectra)
    lo, hi = span if span is not None else (samples.min(), samples.max())
    if hi <= lo:
        pad = max(abs(lo), 1.0) * 1e-9
        lo, hi = lo - pad, hi + pad
    counts, edges = np.histogram(samples, bins=bins, range=(lo, hi))
    density = counts / (samples.size * np.diff(edges))
    return ImdosHistogram(edges, density, int(samples.size))


def imdos_asymmetry(spectra: Sequence[ComplexSpectrum | np.ndarray]) -> float:
    """(n_plus - n_minus) in units of its binomial standard error."""
    lam = _pool(spectra)
    n_plus = int(np.sum(lam > 0))
    n_minus = int(np.sum(lam < 0))
    n = n_plus + n_minus
    return 0.0 if n == 0 else (n_plus - n_minus) / np.sqrt(n)


def gaussian_ks_distance(hist: ImdosHistogram) -> float:
    """Kolmogorov-Smirnov distance between the histogram CDF and its moment-matched Gaussian."""
    mu, sd = hist.mean(), hist.std()
    model = ndtr((hist.bin_edges - mu) / sd)
    return float(np.max(np.abs(hist.cdf_at_edges() - model)))


class SurvivalFunction:
    """S(lam) = integral of rho from lam to infinity, piecewise linear within bins.

    ``quantile(p)`` returns the smallest ``lam`` with ``S(lam) <= p``.
    """

    def __init__(self, edges: np.ndarray, values: np.ndarray, n_samples: Optional[int] = None):
        self.edges = np.asarray(edges, float)
        self.values = np.asarray(values, float)
        self.n_samples = n_samples

    @property
    def support(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def __call__(self, lam):
        lam = np.asarray(lam, float)
        return np.interp(lam, self.edges, self.values, left=1.0, right=0.0)

    def quantile(self, p):
        p = np.asarray(p, float)
        if np.any((p < 0) | (p > 1)):
            raise DomainError("survival probability must lie in [0, 1]")
        s = self.values
        k = np.searchsorted(-s, -p, side="left")
        k = np.clip(k, 1, s.size - 1)
        s_hi, s_lo = s[k - 1], s[k]
        frac = np.where(s_hi > s_lo, (s_hi - p) / np.where(s_hi > s_lo, s_hi - s_lo, 1.0), 0.0)
        lam = self.edges[k - 1] + frac * (self.edges[k] - self.edges[k - 1])
        lam = np.where(p >= s[0], self.edges[0], lam)
        return lam if lam.ndim else float(lam)

    def resolution_floor(self) -> float:
        """Survival probabilities below this are not resolved by the sample."""
        return 0.0 if not self.n_samples else 1.0 / self.n_samples


def survival_function(hist: ImdosHistogram) -> SurvivalFunction:
    mass = hist.density * hist.widths
    tail = np.concatenate([np.cumsum(mass[::-1])[::-1], [0.0]])
    tail /= tail[0]
    # right-to-left accumulation can leave tiny non-monotone roundoff
    tail = np.minimum.accumulate(tail)
    return SurvivalFunction(hist.bin_edges, tail, hist.n_samples)


@dataclass
class LocalizationFit:
    xi: float
    slope: float
    n_points: int
    reliable: bool
    center: int


def estimate_localization_length(eigvec, lattice: LatticeSpec, threshold: float = 1e-12,
                                 min_points: int = 5) -> LocalizationFit:
    """Decay length from a least-squares fit of ln|psi| against distance from the peak.

    Flags the fit as unreliable (``xi = inf``) when the slope is not negative
    or fewer than ``min_points`` sites exceed ``threshold`` in |psi|^2.
    """
    psi = np.asarray(eigvec)
    prob = np.abs(psi) ** 2
    total = prob.sum()
    if not total > 0:
        return LocalizationFit(np.inf, 0.0, 0, False, -1)
    prob = prob / total
    center = int(np.argmax(prob))
    r = lattice.distances_from(center)
    keep = prob > threshold
    n = int(keep.sum())
    if n < min_points or np.ptp(r[keep]) == 0:
        return LocalizationFit(np.inf, 0.0, n, False, center)
    slope = float(np.polyfit(r[keep], 0.5 * np.log(prob[keep]), 1)[0])
    if slope >= 0:
        return LocalizationFit(np.inf, slope, n, False, center)
    return LocalizationFit(-1.0 / slope, slope, n, True, center)


def median_localization_length(spectrum: ComplexSpectrum, lattice: LatticeSpec, mid_fraction: float = 0.5) -> float:
    """Median reliable xi over the states in the middle ``mid_fraction`` of Re(E)."""
    if spectrum.vectors is None:
        raise InputError("spectrum was computed without eigenvectors")
    order = np.argsort(spectrum.eigenvalues.real)
    n = order.size
    lo = int(round(n * (1 - mid_fraction) / 2))
    chosen = order[lo:max(lo + 1, n - lo)]
    fits = [estimate_localization_length(spectrum.vectors[:, k], lattice) for k in chosen]
    xis = [f.xi for f in fits if f.reliable]
    if not xis:
        raise DomainError("no reliable localization-length fits")
    return float(np.median(xis))
