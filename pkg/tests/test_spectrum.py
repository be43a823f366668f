import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhtransport.errors import CapabilityError, DomainError, InputError
from nhtransport.model import (IMAGINARY, REAL, DisorderSpec, Gaussian, LatticeSpec, UniformSymmetric,
                               build_hamiltonian, sample_disorder)
from nhtransport.spectrum import (ImdosHistogram, eigendecompose, estimate_localization_length,
                                  gaussian_ks_distance, imdos_asymmetry, imdos_histogram,
                                  median_localization_length, survival_function)


def spectra(L, W, n, t0=1.0, seed=0, flavor=IMAGINARY, kind=None):
    lat = LatticeSpec.chain(L)
    spec = DisorderSpec(kind or UniformSymmetric(W), flavor, seed)
    return [eigendecompose(build_hamiltonian(lat, t0, sample_disorder(spec, lat, i), flavor)) for i in range(n)]


def flat_histogram(W=1.0, bins=20):
    edges = np.linspace(-W, W, bins + 1)
    return ImdosHistogram(edges, np.full(bins, 1 / (2 * W)), 10 ** 6)


def test_diagonal_spectrum():
    H = build_hamiltonian(LatticeSpec.chain(2), 0.0, np.array([0.1, 0.7]), IMAGINARY)
    assert np.allclose(np.sort_complex(eigendecompose(H).eigenvalues), [0.1j, 0.7j])


def test_two_site_closed_form():
    H = build_hamiltonian(LatticeSpec.chain(2), 1.0, np.array([0.5, -0.5]), IMAGINARY)
    E = eigendecompose(H).eigenvalues
    assert np.allclose(np.sort(E.real), [-np.sqrt(0.75), np.sqrt(0.75)])
    assert np.allclose(E.imag, 0, atol=1e-12)


def test_real_flavor_real_spectrum():
    (s,) = spectra(60, 3.0, 1, flavor=REAL)
    assert np.max(np.abs(s.eigenvalues.imag)) < 1e-10


def test_dense_cap():
    H = build_hamiltonian(LatticeSpec.chain(30), 1.0, np.zeros(30), IMAGINARY)
    with pytest.raises(CapabilityError):
        eigendecompose(H, cap=10)


def test_trace_and_bound():
    lat = LatticeSpec.chain(80)
    field = sample_disorder(DisorderSpec(UniformSymmetric(2.0), master_seed=4), lat, 0)
    E = eigendecompose(build_hamiltonian(lat, 1.0, field, IMAGINARY)).eigenvalues
    assert abs(E.sum() - 1j * field.values.sum()) < 1e-8 * 80
    assert np.all(np.abs(E.imag) <= 2.0 + 1e-12)


def test_histogram_zero_hopping_is_flat():
    hist = imdos_histogram(spectra(1000, 1.0, 100, t0=0.0), bins=20)
    assert np.sum(hist.density * hist.widths) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(hist.density, 0.5, rtol=0.06)


def test_histogram_errors():
    with pytest.raises(InputError):
        imdos_histogram([])
    with pytest.raises(InputError):
        imdos_histogram(spectra(10, 1.0, 1), bins=5)


@pytest.mark.parametrize("kind", [UniformSymmetric(3.0), Gaussian(1.0)])
def test_symmetric_disorder_gives_symmetric_imdos(kind):
    assert abs(imdos_asymmetry(spectra(100, 0, 20, kind=kind, seed=9))) < 3


def test_weak_disorder_more_gaussian():
    weak = imdos_histogram(spectra(200, 0.5, 20, seed=1))
    strong = imdos_histogram(spectra(200, 4.0, 20, seed=1))
    assert gaussian_ks_distance(weak) < gaussian_ks_distance(strong)


def test_survival_of_flat_density():
    S = survival_function(flat_histogram(W=2.0))
    assert S(0.0) == pytest.approx(0.5)
    for p in (0.1, 0.25, 0.9):
        assert S(2.0 * (1 - 2 * p)) == pytest.approx(p)
    assert S(-5.0) == 1.0 and S(5.0) == 0.0
    assert S.quantile(1.0) == -2.0


def test_survival_monotone():
    S = survival_function(imdos_histogram(spectra(100, 5.0, 10)))
    assert np.all(np.diff(S.values) <= 0)
    assert S.values[0] == 1.0 and S.values[-1] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0))
def test_quantile_round_trip(p):
    hist = imdos_histogram(spectra(60, 3.0, 5, seed=2))
    S = survival_function(hist)
    lam = S.quantile(p)
    width = hist.widths.max()
    assert S(lam) == pytest.approx(p, abs=1e-12) or abs(S.quantile(S(lam)) - lam) <= width


def test_quantile_domain():
    with pytest.raises(DomainError):
        survival_function(flat_histogram()).quantile(1.5)


def test_localization_length_exponential():
    lat = LatticeSpec.chain(101)
    psi = np.exp(-np.abs(np.arange(101) - 50) / 2.0)
    fit = estimate_localization_length(psi / np.linalg.norm(psi), lat)
    assert fit.reliable
    assert fit.xi == pytest.approx(2.0, abs=1e-6)


def test_localization_length_uniform_flagged():
    fit = estimate_localization_length(np.full(50, 50 ** -0.5), LatticeSpec.chain(50))
    assert not fit.reliable


def test_strong_disorder_short_localization():
    lat = LatticeSpec.chain(200)
    field = sample_disorder(DisorderSpec(UniformSymmetric(20.0), master_seed=3), lat, 0)
    spec = eigendecompose(build_hamiltonian(lat, 1.0, field, IMAGINARY), vectors=True)
    assert median_localization_length(spec, lat) < 1.0
