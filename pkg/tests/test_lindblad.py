import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings, strategies as st

from nhtransport.errors import DegenerateStateError, ParameterError
from nhtransport.lindblad import (build_dissipative_hamiltonian, build_effective_hamiltonian, evolve_correlation,
                                  evolve_dissipative, nearest_neighbour_hopping, surviving_distribution)
from nhtransport.model import (IMAGINARY, DisorderSpec, LatticeSpec, UniformSymmetric, build_hamiltonian,
                               sample_disorder)
from nhtransport.propagate import evolve_exact


def rank_one(n, site):
    G = np.zeros((n, n), complex)
    G[site, site] = 1.0
    return G


def lossy_instance(L, seed, index=0, gmax=4.0):
    lat = LatticeSpec.chain(L)
    rng = np.random.default_rng([seed, index])
    gamma = rng.uniform(0, gmax, L)
    H = build_effective_hamiltonian(nearest_neighbour_hopping(lat, 1.0), gamma, lat)
    return lat, gamma, H


def test_single_site_effective_hamiltonian():
    H = build_effective_hamiltonian(np.zeros((1, 1)), [2.0])
    assert H.to_dense()[0, 0] == -1j


def test_two_site_effective_hamiltonian():
    h = 0.7 * np.array([[0.0, 1.0], [1.0, 0.0]])
    H = build_effective_hamiltonian(h, [2.0, 0.0]).to_dense()
    assert np.allclose(np.diag(H), [-1j, 0])
    assert H[0, 1] == 0.7 and H[1, 0] == 0.7


def test_negative_rate_rejected():
    with pytest.raises(ParameterError):
        build_effective_hamiltonian(np.zeros((2, 2)), [1.0, -0.1])


def test_single_site_decay():
    H = build_effective_hamiltonian(np.zeros((1, 1)), [2.0])
    series = evolve_correlation(H, np.eye(1), [0.0, 1.0, 3.0])
    assert np.allclose(series.traces, np.exp(-2 * np.array([0.0, 1.0, 3.0])), rtol=1e-12)
    assert series.traces[1] == pytest.approx(0.1353, abs=1e-4)


@pytest.mark.parametrize("index", range(4))
def test_rank_one_matches_wave_packet(index):
    lat, gamma, H = lossy_instance(32, 5, index)
    times = [0.5, 2.0, 8.0]
    G = evolve_correlation(H, rank_one(32, lat.center_index), times)
    tr = evolve_exact(H, None, times, store_profiles=True)
    assert np.max(np.abs(G.distributions() - tr.profiles)) < 1e-10
    assert np.allclose(G.spreading(lat), tr.xc, atol=1e-8)


def test_lossy_matches_imaginary_disorder():
    lat = LatticeSpec.chain(32)
    field = sample_disorder(DisorderSpec(UniformSymmetric(2.0), master_seed=4), lat, 0)
    rates = 2 * (field.values.max() - field.values)
    H = build_effective_hamiltonian(nearest_neighbour_hopping(lat, 1.0), rates, lat)
    times = [1.0, 5.0]
    G = evolve_correlation(H, rank_one(32, lat.center_index), times)
    ref = evolve_exact(build_hamiltonian(lat, 1.0, field, IMAGINARY), None, times, store_profiles=True)
    assert np.max(np.abs(G.distributions() - ref.profiles)) < 1e-10


def test_uniform_loss_equals_lossless():
    lat = LatticeSpec.chain(21)
    h = nearest_neighbour_hopping(lat, 1.0)
    G0 = rank_one(21, 10)
    a = evolve_correlation(build_effective_hamiltonian(h, np.zeros(21), lat), G0, [3.0])
    b = evolve_correlation(build_effective_hamiltonian(h, np.full(21, 0.8), lat), G0, [3.0])
    assert np.allclose(a.distributions(), b.distributions(), atol=1e-12)
    assert b.traces[0] == pytest.approx(np.exp(-0.8 * 3.0))


def test_hermitian_trace_conserved():
    lat = LatticeSpec.chain(16)
    H = build_effective_hamiltonian(nearest_neighbour_hopping(lat, 1.0), np.zeros(16), lat)
    rng = np.random.default_rng(0)
    A = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    G0 = A @ A.conj().T
    series = evolve_correlation(H, G0, np.linspace(0, 10, 6))
    assert np.allclose(series.traces, np.trace(G0).real, rtol=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_hermitian_psd_preserved(seed):
    lat, _, H = lossy_instance(12, seed)
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(12, 3)) + 1j * rng.normal(size=(12, 3))
    series = evolve_correlation(H, A @ A.conj().T, [0.3, 2.0])
    for G in series.matrices:
        assert np.allclose(G, G.conj().T, atol=1e-10)
        assert la.eigvalsh(G).min() >= -1e-8 * np.trace(G).real


def test_dissipative_single_site():
    H = build_dissipative_hamiltonian(LatticeSpec.chain(1), 1.0, [3.0])
    assert H[0, 0] == -2.5
    times = np.array([0.0, 0.4, 1.0])
    series = evolve_dissipative(H, np.eye(1), times)
    assert np.allclose(series.traces, np.exp(-5 * times), rtol=1e-12, atol=0)


def test_dissipative_next_nearest_couplings():
    H = build_dissipative_hamiltonian(LatticeSpec.chain(7), 1.0, np.zeros(7))
    assert H[3, 5] == pytest.approx(-0.5) and H[3, 1] == pytest.approx(-0.5)
    assert H[3, 4] == pytest.approx(-1.0)
    assert H[3, 6] == 0
    assert np.allclose(H, H.T)


def test_dissipative_square_couplings():
    lat = LatticeSpec.square(5)
    H = build_dissipative_hamiltonian(lat, 1.0, np.zeros(25))
    c = lat.center_index
    assert H[c, c + 1] == pytest.approx(-1.0)
    assert H[c, c + 6] == pytest.approx(-1.0)
    assert H[c, c + 2] == pytest.approx(-0.5)


def test_matrix_form_differs_from_jump_form_on_diagonal_only():
    lat = LatticeSpec.chain(9)
    gamma = np.linspace(0.1, 1.0, 9)
    a = build_dissipative_hamiltonian(lat, 1.0, gamma, "matrix")
    b = build_dissipative_hamiltonian(lat, 1.0, gamma, "jump")
    off = ~np.eye(9, dtype=bool)
    assert np.allclose(a[off], b[off])
    # bulk diagonal: -(Gamma + gamma/2) versus -(2d+1) Gamma / 2 - gamma/2
    assert np.allclose((a - b).diagonal()[2:-2], 0.5)


def test_jump_form_is_dissipative():
    rng = np.random.default_rng(3)
    lat = LatticeSpec.chain(40)
    gamma = rng.uniform(1e-6, 1.0, 40)
    H = build_dissipative_hamiltonian(lat, 1.0, gamma, "jump")
    assert la.eigvalsh(H).max() < 0
    series = evolve_dissipative(H, rank_one(40, 20), np.linspace(0, 5, 11))
    assert np.all(np.diff(series.traces) <= 1e-15)


def test_matrix_form_has_positive_mode():
    H = build_dissipative_hamiltonian(LatticeSpec.chain(60), 1.0, np.full(60, 0.5), "matrix")
    assert la.eigvalsh(H).max() > 0


def test_dissipative_rank_one_factorization():
    lat = LatticeSpec.chain(15)
    H = build_dissipative_hamiltonian(lat, 0.6, np.linspace(0.2, 1.0, 15), "jump")
    G = evolve_dissipative(H, rank_one(15, 7), [1.3]).matrices[0]
    v = la.expm(1.3 * H)[:, 7]
    assert np.allclose(G, np.outer(v, v), atol=1e-13)


def test_surviving_distribution():
    assert np.allclose(surviving_distribution(np.diag([1.0, 3.0])), [0.25, 0.75])
    with pytest.raises(DegenerateStateError):
        surviving_distribution(np.zeros((2, 2)))


def test_long_loss_raises_instead_of_nan():
    H = build_effective_hamiltonian(np.zeros((1, 1)), [2.0])
    G = evolve_correlation(H, np.eye(1), [1000.0]).matrices[0]
    with pytest.raises(DegenerateStateError):
        surviving_distribution(G)
