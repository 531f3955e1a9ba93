import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridwiener.dynamics import NoiseModel
from gridwiener.errors import InstabilityError, SingularSystemError
from gridwiener.estimation import FirWienerBank, estimate_bank
from gridwiener.grid import GridGraph, generate_graph, neighbor_sets
from gridwiener.spectral import (
    FrequencyGrid,
    FrequencyResponseSet,
    ar1_noise_psd,
    block_response_stderr,
    eval_S,
    fir_frequency_response,
    indeterminate_mask,
    model_spectra,
    oracle_wiener_response,
    principal_phase,
    read_response_csv,
    wiener_from_psd,
    write_response_csv,
)

from conftest import ORACLE_RANGES

TS = 0.01
GRID = FrequencyGrid.uniform()


def unit_path3():
    return generate_graph("path", 3)


def test_default_grid():
    assert len(GRID) == 65
    np.testing.assert_allclose(GRID.points, np.pi * np.arange(65) / 64)
    full = FrequencyGrid.uniform(8, full=True)
    assert full.points[0] == -np.pi and full.points[-1] < np.pi


@pytest.mark.parametrize("pts", [[0.0, 0.0], [0.5, 0.1], [0.0, 4.0], []])
def test_grid_validation(pts):
    with pytest.raises(ValueError):
        FrequencyGrid(pts)


def test_eval_S_at_one_and_minus_one():
    g = GridGraph(2, ((0, 1),), (2.0,), (1.0, 1.0), (1.0, 1.0))
    assert eval_S(g, 0, TS, 1.0) == 2.0
    assert eval_S(g, 0, TS, -1.0) == pytest.approx(1e4 * 4 - 1e2 * 2 + 2)
    assert eval_S(g, 0, TS, -1.0) == 39802.0


@given(st.floats(0.1, 10), st.floats(-np.pi, np.pi), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_eval_S_homogeneous(c, w, seed):
    g = generate_graph("cycle", 4, seed, **ORACLE_RANGES)
    h = GridGraph(4, g.edges, c * g.susceptance, c * g.inertia, c * g.damping)
    z = np.exp(1j * w)
    for j in range(4):
        assert eval_S(h, j, TS, z) == pytest.approx(c * eval_S(g, j, TS, z), rel=1e-12)


def test_principal_phase_branch():
    ph = principal_phase(np.array([-1 + 0j, complex(-1, -0.0), 1j, -1j, 1 + 0j]))
    np.testing.assert_allclose(ph, [np.pi, np.pi, np.pi / 2, -np.pi / 2, 0.0])


def const_bank(value, n=2, F=3):
    taps = np.zeros((n, n - 1, 2 * F + 1))
    taps[:, :, F] = value
    return FirWienerBank(taps, F)


@pytest.mark.parametrize("c, phase", [(0.3, 0.0), (-1.0, np.pi)])
def test_constant_filter_response(c, phase):
    r = fir_frequency_response(const_bank(c), GRID)
    np.testing.assert_allclose(r.response(0, 1), c, atol=1e-15)
    np.testing.assert_allclose(r.phase(0, 1), phase, atol=1e-15)


def test_zero_filter_is_indeterminate():
    r = fir_frequency_response(const_bank(0.0), GRID)
    assert r.indeterminate(0, 1).all()


def test_fir_response_matches_polynomial():
    rng = np.random.default_rng(0)
    F = 4
    bank = FirWienerBank(rng.standard_normal((3, 2, 2 * F + 1)), F)
    r = fir_frequency_response(bank, GRID)
    z = GRID.z
    for j in range(3):
        for i in range(3):
            if i == j:
                continue
            h = bank.filter(j, i)
            ref = z ** (-F) * np.polyval(h[::-1], z)
            np.testing.assert_allclose(r.response(j, i), ref, rtol=1e-12, atol=1e-12)


def test_indeterminate_mask_rules():
    v = np.array([1.0, 1e-7, 0.5, 0.01])
    assert indeterminate_mask(v).tolist() == [False, True, False, False]
    se = np.full(4, 0.01)
    assert indeterminate_mask(v, se, 4.0).tolist() == [False, True, False, True]


# -- model spectra and oracle --------------------------------------------------


def test_path3_closed_form():
    """Unit path 1-2-3 with unit noise.

    The precision is ``K = L^H L``. Node 1 touches only node 2, so
    ``K_13 = conj(L_21) L_23 = 1`` and ``K_11 = |S_1|^2 + |L_21|^2``, which
    gives ``W_13 = -1 / (|S_1|^2 + 1)``.
    """
    g = unit_path3()
    r = oracle_wiener_response(g, 1.0, TS, GRID)
    S1 = eval_S(g, 0, TS, GRID.z)
    closed = -1.0 / (np.abs(S1) ** 2 + 1)
    np.testing.assert_allclose(r.response(0, 2), closed, rtol=0, atol=1e-9)
    # same value from partitioning the angle spectrum directly
    spectra = model_spectra(g, 1.0, TS, GRID)
    for k in range(1, len(GRID)):
        direct = wiener_from_psd(spectra.psd(k), 0)
        assert abs(direct[2] - closed[k]) < 1e-9 * max(1.0, abs(closed[k]))


def random_loopy(n, seed):
    return generate_graph("random_loopy", n, seed, **ORACLE_RANGES)


@given(st.integers(4, 9), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_precision_form_matches_partition(n, seed):
    g = random_loopy(n, seed)
    grid = FrequencyGrid(np.linspace(0.05, np.pi, 9))
    spectra = model_spectra(g, np.linspace(1.0, 2.0, n), TS, grid)
    r = oracle_wiener_response(g, np.linspace(1.0, 2.0, n), TS, grid)
    for k in range(len(grid)):
        phi = spectra.psd(k)
        for j in range(n):
            direct = wiener_from_psd(phi, j)
            scale = np.abs(direct).max()
            np.testing.assert_allclose(r.values[j, :, k], direct, atol=1e-7 * scale)


@given(st.integers(4, 9), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_two_hop_structure(n, seed):
    g = random_loopy(n, seed)
    ns = neighbor_sets(g)
    r = oracle_wiener_response(g, 10.0, TS, GRID)
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            v = r.response(j, i)
            if i not in ns.moral(j):
                assert np.abs(v).max() < 1e-9
            elif i in ns.strict_two_hop(j):
                assert (v.real < 0).all()
                assert (np.abs(v.imag) < 1e-9 * np.abs(v)).all()


def test_model_spectra_structure():
    g = random_loopy(7, 3)
    ns = neighbor_sets(g)
    spectra = model_spectra(g, 1.0, TS, GRID)
    for k in range(len(GRID)):
        L = spectra.operator[k]
        for j in range(7):
            off = np.count_nonzero(np.delete(L[j], j))
            assert off == len(ns.neighbors[j])
    for k in (1, 20, 64):
        phi = spectra.psd(k)
        np.testing.assert_allclose(phi, phi.conj().T, rtol=1e-10, atol=0)
        assert np.linalg.eigvalsh(phi).min() > 0
    with pytest.raises(SingularSystemError):
        spectra.psd(0)


def test_conjugate_symmetry():
    g = random_loopy(6, 11)
    w = np.linspace(0.1, 3.0, 7)
    pos = oracle_wiener_response(g, 1.0, TS, FrequencyGrid(w)).values
    neg = oracle_wiener_response(g, 1.0, TS, FrequencyGrid(-w[::-1])).values[..., ::-1]
    np.testing.assert_allclose(neg, pos.conj(), rtol=1e-12, atol=1e-15)


def test_two_node_oracle():
    g = generate_graph("path", 2)
    r = oracle_wiener_response(g, 1.0, TS, GRID)
    assert np.abs(r.response(0, 1)).min() > 0
    assert np.abs(r.response(1, 0)).min() > 0
    assert not neighbor_sets(g).strict_two_hop_pairs()


def test_triangle_has_no_negative_real_pair():
    g = GridGraph(3, ((0, 1), (1, 2), (0, 2)), (0.7, 1.3, 1.9), (1.1, 0.8, 1.5), (0.6, 1.4, 0.9))
    r = oracle_wiener_response(g, 1.0, TS, GRID)
    for j in range(3):
        for i in range(3):
            if i != j:
                dist = np.abs(np.abs(r.phase(j, i)) - np.pi)
                assert dist.max() > 0.1


def test_oracle_rejects_unstable_model():
    with pytest.raises(InstabilityError):
        oracle_wiener_response(unit_path3(), 1.0, 3.0, GRID)


def test_ar1_psd_integrates_to_variance():
    noise = NoiseModel("ar1_gaussian", 10.0, 0.6)
    full = FrequencyGrid.uniform(4096, full=True)
    psd = ar1_noise_psd(noise, 2, full)
    assert psd.shape == (4096, 2)
    assert psd[:, 0].mean() == pytest.approx(10.0, rel=1e-10)
    white = ar1_noise_psd(NoiseModel(psd_level=3.0), 2, GRID)
    assert (white == 3.0).all()


def test_noise_psd_shape_checks():
    g = unit_path3()
    with pytest.raises(ValueError):
        model_spectra(g, [1.0, 2.0], TS, GRID)
    with pytest.raises(ValueError):
        model_spectra(g, 0.0, TS, GRID)
    with pytest.raises(TypeError):
        model_spectra(g, NoiseModel(), TS, GRID)


# -- noise floor and files -----------------------------------------------------


def test_block_stderr_tracks_spread_of_null_responses():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((3, 200_000))
    F = 5
    se = block_response_stderr(x, F, GRID, blocks=16, smoothing=5, difference=0)
    assert se.shape == (3, 3, 65) and (se[0, 1] > 0).all()
    resp = fir_frequency_response(estimate_bank(x, F, difference=0), GRID)
    # true responses are zero, so |W| / se is a standardised noise magnitude
    ratio = np.abs(resp.values[0, 1]) / se[0, 1]
    assert 0.3 < np.sqrt(np.mean(ratio**2)) < 3.0


def test_response_csv_roundtrip(tmp_path):
    r = oracle_wiener_response(unit_path3(), 1.0, TS, FrequencyGrid.uniform(5))
    path = tmp_path / "r.csv"
    write_response_csv(path, r)
    lines = path.read_text().splitlines()
    assert lines[0] == "target,source,omega,re,im,magnitude,phase"
    assert len(lines) == 1 + 6 * 5
    back = read_response_csv(path)
    assert set(back) == {(j, i) for j in range(3) for i in range(3) if i != j}
    np.testing.assert_array_equal(back[(0, 2)][1], r.response(0, 2))
    assert FrequencyResponseSet(r.values, r.grid).n_nodes == 3


def test_fir_response_approaches_oracle_with_wide_window():
    """A 121-tap window covers the 4-cycle's filters; the estimate then sits near the oracle."""
    from gridwiener.dynamics import simulate

    from conftest import desk_graph

    g = desk_graph("cycle", 4, seed=0)
    panel = simulate(g, NoiseModel(seed=0), TS, 1_000_000)
    oracle = oracle_wiener_response(g, 10.0, TS, GRID).values
    errs = {F: np.abs(fir_frequency_response(estimate_bank(panel, F), GRID).values - oracle).max() for F in (30, 60)}
    assert errs[60] < errs[30]
    assert errs[60] <= 0.1 * np.abs(oracle).max()
