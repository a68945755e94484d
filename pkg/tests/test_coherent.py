import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catsim import coherent as co
from catsim import fock
from catsim.coherent import SuperposedState
from catsim.errors import DegenerateStateError, ImpossibleOutcomeError

amp = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
CUT = 40


def fock_of(state, cutoff=CUT):
    return fock.to_fock(state, cutoff)


def test_overlap_closed_form():
    a, b = 1.2 - 0.3j, -0.4 + 0.9j
    expect = np.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + np.conj(a) * b)
    assert co.coherent_overlap(a, b) == pytest.approx(expect, abs=1e-15)
    assert abs(co.coherent_overlap(2, -2)) ** 2 == pytest.approx(math.exp(-16), rel=1e-12)


@given(amp, amp)
def test_overlap_matches_fock(a, b):
    va, vb = fock.coherent_vector(a, 60), fock.coherent_vector(b, 60)
    assert co.coherent_overlap(a, b) == pytest.approx(np.vdot(va, vb), abs=1e-12)


@given(st.lists(amp, min_size=1, max_size=5))
def test_overlap_matrix_hermitian_psd(amps):
    labels = np.array(amps).reshape(-1, 1)
    G = co.overlap_matrix(labels, labels)
    assert np.allclose(G, G.conj().T)
    assert np.linalg.eigvalsh(G).min() > -1e-12
    assert np.allclose(np.diag(G), 1)


def test_make_cat_parity():
    even = fock_of(co.make_cat(1.5, 0.0))
    odd = fock_of(co.make_cat(1.5, math.pi))
    assert np.allclose(even.amps[1::2], 0, atol=1e-14)
    assert np.allclose(odd.amps[0::2], 0, atol=1e-14)
    assert even.norm() == pytest.approx(1, abs=1e-12)


def test_normalize_degenerate():
    zero = SuperposedState(np.array([1, -1]), np.array([[0.5], [0.5]]))
    with pytest.raises(DegenerateStateError):
        co.normalize(zero)


@given(amp, amp, st.floats(0, 2 * math.pi), st.sampled_from([co.REAL, co.PHASE]))
def test_beam_splitter_matches_fock(a, b, theta, conv):
    s = SuperposedState.coherent(a, b)
    lhs = fock_of(co.apply_beam_splitter(s, (0, 1), theta, conv), 45)
    rhs = fock.fock_beam_splitter(fock_of(s, 45), (0, 1), theta, conv)
    assert fock.fock_fidelity(lhs, rhs) == pytest.approx(1, abs=1e-9)


def test_beam_splitter_real_convention():
    out = co.apply_beam_splitter(SuperposedState.coherent(0, 2.0), (0, 1), math.pi / 2)
    assert np.allclose(out.labels, [[math.sqrt(2), math.sqrt(2)]])


@given(st.lists(amp, min_size=1, max_size=4), st.floats(0, 6.3))
def test_unitaries_preserve_norm(amps, theta):
    labels = np.array(amps).reshape(-1, 2) if len(amps) % 2 == 0 else np.array(amps).reshape(-1, 1)
    coeffs = np.arange(1, len(labels) + 1) + 0.5j
    s = SuperposedState(coeffs, labels)
    n0 = co.norm_squared(s)
    assert co.norm_squared(co.apply_phase_shift(s, 0, theta)) == pytest.approx(n0, rel=1e-9)
    assert co.norm_squared(co.apply_displacement(s, 0, 0.3 - 0.2j)) == pytest.approx(n0, rel=1e-9)
    if s.mode_count == 2:
        assert co.norm_squared(co.apply_beam_splitter(s, (0, 1), theta)) == pytest.approx(n0, rel=1e-9)


def test_displacement_matches_fock():
    s = co.make_cat(1.0, 0.4)
    lhs = fock_of(co.apply_displacement(s, 0, 0.7 + 0.2j))
    rhs = fock.fock_displace(fock_of(s), 0, 0.7 + 0.2j)
    assert fock.fock_inner(lhs, rhs) == pytest.approx(1, abs=1e-10)  # phase included


@given(amp, st.integers(0, 6))
def test_fock_kernel(a, n):
    v = fock.coherent_vector(a, 10)
    assert co.fock_kernel(n)(np.array([a]))[0] == pytest.approx(v[n], abs=1e-13)


@given(amp, st.floats(-3, 3))
def test_homodyne_kernel_matches_hermite(a, x):
    psi = fock.hermite_functions(x, 60)
    expect = psi @ fock.coherent_vector(a, 60)
    assert co.homodyne_kernel(x)(np.array([a]))[0] == pytest.approx(expect, abs=1e-10)


def test_parity_projection_matches_fock():
    s = co.tensor(SuperposedState.coherent(1.1 + 0.3j), co.make_cat(0.8, 0.9))
    for parity in ("even", "odd"):
        post, p = co.project_parity(s, 0, parity)
        fpost, fp = fock.fock_project_parity(fock_of(s, 25), 0, parity)
        assert p == pytest.approx(fp, abs=1e-10)
        assert fock.fock_fidelity(fock_of(post, 25), fpost) == pytest.approx(1, abs=1e-10)


def test_click_projection_matches_fock():
    s = SuperposedState(np.array([1, 0.5j]), np.array([[0.9, 0.3], [-0.9, 1.0]]))
    out, post, p = co.project_click(s, 1, "click")
    assert p == pytest.approx(fock.fock_click_probability(fock_of(s, 25), 1), abs=1e-12)
    assert co.vacuum_probability(post, 1) == pytest.approx(0, abs=1e-12)


def test_project_fock_and_homodyne_match_fock():
    s = co.tensor(co.make_cat(1.3, 0.2), SuperposedState.coherent(0.5))
    s = co.apply_beam_splitter(s, (0, 1), 1.1)
    post, p = co.project_fock(s, 0, 3)
    fpost, fp = fock.fock_project_number(fock_of(s, 30), 0, 3)
    assert p == pytest.approx(fp, abs=1e-12)
    assert fock.fock_fidelity(fock_of(post, 30), fpost) == pytest.approx(1, abs=1e-10)
    post, dens = co.project_homodyne_x(s, 1, 0.4)
    fpost, fdens = fock.fock_homodyne_x(fock_of(s, 30), 1, 0.4)
    assert dens == pytest.approx(fdens, abs=1e-10)
    assert fock.fock_fidelity(fock_of(post, 30), fpost) == pytest.approx(1, abs=1e-10)


def test_homodyne_density_integrates_to_one():
    from scipy.integrate import quad

    s = co.make_cat(1.5, 0.3)
    total = quad(lambda x: co.project_homodyne_x(s, 0, x)[1], -12, 12)[0]
    assert total == pytest.approx(1, abs=1e-9)


def test_impossible_outcome():
    with pytest.raises(ImpossibleOutcomeError):
        co.project_parity(co.make_cat(1.0, 0.0), 0, "odd")


def test_condition_all_click_eta():
    s = co.tensor(co.make_cat(1.0, 0.0), SuperposedState.coherent(1.2, 0.8))
    out1, p1 = co.condition_all_click(s, [1, 2], 1.0)
    out2, p2 = co.condition_all_click(s, [1, 2], 0.5)
    assert np.array_equal(out1.coeffs, out2.coeffs)
    expect = (1 - math.exp(-0.5 * 1.44)) * (1 - math.exp(-0.5 * 0.64))
    assert p2 == pytest.approx(expect, rel=1e-12)


def test_logical_round_trip():
    amps = [1.0, 1.0]
    v = np.array([[0.3, 0.1j], [-0.2, 0.5]])
    s = co.from_logical(v, amps)
    assert np.allclose(co.logical_amplitudes(s, amps), v)


def test_permute_and_insert():
    s = SuperposedState.coherent(1, 2, 3)
    assert np.allclose(co.permute_modes(s, [2, 0, 1]).labels, [[3, 1, 2]])
    assert np.allclose(co.insert_mode(s, 1, 0.5).labels, [[1, 0.5, 2, 3]])
