import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import poisson

from catsim import coherent as co
from catsim import fock
from catsim.coherent import SuperposedState
from catsim.errors import TruncationError


def test_choose_cutoff_is_minimal():
    for amp, eps in ((1.0, 1e-12), (2.5, 1e-10), (0.0, 1e-6)):
        n = fock.choose_cutoff(amp, 0.0, eps)
        assert poisson.sf(n, amp**2) < eps or amp == 0
        if n > 1:
            assert poisson.sf(n - 1, amp**2) >= eps


def test_to_fock_truncation_error():
    with pytest.raises(TruncationError):
        fock.to_fock(SuperposedState.coherent(3.0), 10)


def test_coherent_vector_norm():
    v = fock.coherent_vector(1.7 - 0.4j, 60)
    assert np.linalg.norm(v) == pytest.approx(1, abs=1e-13)


@given(st.floats(-0.8, 0.8))
def test_squeezed_vacuum_closed_form(s):
    vec = fock.apply_squeeze(fock.vacuum(120), 0, s)
    assert np.allclose(vec.amps, fock.squeezed_vacuum_series(s, 120), atol=1e-10)


def test_squeeze_is_unitary_and_inverse():
    start = fock.to_fock(co.make_cat(1.0, 0.5), 60)
    there = fock.apply_squeeze(start, 0, 0.4)
    back = fock.apply_squeeze(there, 0, -0.4)
    assert there.norm() == pytest.approx(1, abs=1e-10)
    assert fock.fock_fidelity(back, start) == pytest.approx(1, abs=1e-10)


def test_squeeze_truncation_reported():
    with pytest.raises(TruncationError):
        fock.apply_squeeze(fock.number_state(1, 10), 0, 1.5, epsilon=1e-12)


def test_annihilate_coherent_eigenstate():
    a = 0.8 + 0.3j
    f = fock.to_fock(SuperposedState.coherent(a), 40)
    lowered = fock.apply_annihilate(f, 0)
    assert np.allclose(lowered.amps, a * f.amps, atol=1e-10)


def test_kerr_phase():
    f = fock.number_state(3, 5)
    out = fock.kerr_evolve(f, 0, 0.2, 0.1)
    assert out.amps[3] == pytest.approx(np.exp(-1j * (0.1 * 3 + 0.2 * 9)))


def test_phase_shift_matches_coherent():
    s = co.make_cat(1.2, 0.3)
    lhs = fock.fock_phase_shift(fock.to_fock(s, 40), 0, 0.7)
    rhs = fock.to_fock(co.apply_phase_shift(s, 0, 0.7), 40)
    assert fock.fock_inner(lhs, rhs) == pytest.approx(1, abs=1e-12)


@given(st.integers(0, 4), st.integers(0, 4), st.floats(0, 6.3))
def test_beam_splitter_conserves_photons(n, m, theta):
    f = fock.tensor(fock.number_state(n, 8), fock.number_state(m, 8))
    out = fock.fock_beam_splitter(f, (0, 1), theta)
    totals = np.add.outer(np.arange(9), np.arange(9))
    assert np.sum(np.abs(out.amps[totals != n + m]) ** 2) < 1e-24
    assert out.norm() == pytest.approx(1, abs=1e-12)


def test_hong_ou_mandel():
    f = fock.tensor(fock.number_state(1, 3), fock.number_state(1, 3))
    out = fock.fock_beam_splitter(f, (0, 1), math.pi / 2)
    assert abs(out.amps[1, 1]) < 1e-14
    assert abs(out.amps[2, 0]) ** 2 == pytest.approx(0.5)


def test_hermite_orthonormal():
    from scipy.integrate import quad

    g = quad(lambda x: fock.hermite_functions(x, 6)[2] * fock.hermite_functions(x, 6)[5], -20, 20)[0]
    n = quad(lambda x: fock.hermite_functions(x, 6)[4] ** 2, -20, 20)[0]
    assert abs(g) < 1e-10 and n == pytest.approx(1, abs=1e-10)


@given(st.floats(0, 3))
def test_loss_on_coherent_state(gt):
    a = 1.3 - 0.2j
    rho = fock.density(fock.to_fock(SuperposedState.coherent(a), 40))
    out = fock.apply_loss(rho, 0, gt)
    expect = fock.density(fock.to_fock(SuperposedState.coherent(a * math.exp(-gt / 2)), 40))
    assert fock.trace_distance(out, expect) < 1e-10
    assert np.trace(fock.density_matrix(out)).real == pytest.approx(1, abs=1e-12)


def test_loss_zero_time_identity():
    rho = fock.density(fock.to_fock(co.make_cat(1.0, 1.0), 30))
    assert np.allclose(fock.apply_loss(rho, 0, 0.0), rho)
