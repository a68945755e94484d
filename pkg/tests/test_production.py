import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catsim import coherent as co
from catsim import fock
from catsim import production as pr
from catsim.errors import DegenerateStateError

PI = math.pi


def test_amplification_printed_value():
    assert pr.amplification_success(1.0, 1.0, PI, PI) == pytest.approx(0.2721177, abs=1e-7)


@pytest.mark.parametrize("a, b, f1, f2", list(itertools.product((0.8, 1.5), (1.0, 1.5), (0.0, PI), (0.0, PI))))
def test_amplify_formula_and_target(a, b, f1, f2):
    setup = pr.AmplifySetup(a, b, f1, f2)
    out, p = pr.amplify_cats(setup)
    assert p == pytest.approx(pr.amplification_success(a, b, f1, f2), abs=1e-12)
    assert co.fidelity(out, pr.amplified_target(setup)) == pytest.approx(1, abs=1e-12)


def test_odd_plus_odd_is_even():
    out, _ = pr.amplify_cats(pr.AmplifySetup(1.0, 1.0, PI, PI))
    f = fock.to_fock(out, 40)
    assert np.sum(np.abs(f.amps[1::2]) ** 2) < 1e-20


def test_amplification_large_limit():
    _, p = pr.amplify_cats(pr.AmplifySetup(4.0, 4.0))
    assert p == pytest.approx(0.5, abs=1e-6)


def test_amplify_detector_efficiency_scales():
    _, p1 = pr.amplify_cats(pr.AmplifySetup(1.0, 1.0))
    _, p2 = pr.amplify_cats(pr.AmplifySetup(1.0, 1.0, eta=0.5))
    assert p2 < p1


def test_amplify_degenerate_input():
    with pytest.raises(ValueError):
        pr.AmplifySetup(0.0, 1.0)


def test_amplify_fock_matches_coherent():
    setup = pr.AmplifySetup(0.9, 1.1, PI, 0.0)
    cut = 30
    a = fock.to_fock(co.make_cat(0.9, PI), cut).amps
    b = fock.to_fock(co.make_cat(1.1, 0.0), cut).amps
    rho, p = pr.amplify_fock([(1.0, a)], [(1.0, b)], setup, cut)
    _, p_co = pr.amplify_cats(setup)
    assert p == pytest.approx(p_co, abs=1e-10)
    assert pr.cat_fidelity_fock(rho, setup.amplitude, PI) == pytest.approx(1, abs=1e-10)


@given(st.floats(0.05, 2.0))
def test_squeezed_fidelity_matches_fock(alpha):
    s = pr.optimal_squeezing_exact(alpha)
    vec = pr.squeezed_fock(1, s)
    assert pr.cat_fidelity_fock(vec.amps, alpha, PI) == pytest.approx(pr.squeezed_photon_fidelity(s, alpha), abs=1e-10)


@given(st.floats(0.1, 2.0))
def test_optimum_is_stationary(alpha):
    s, F = pr.optimal_squeezing(alpha)
    assert s == pytest.approx(pr.optimal_squeezing_exact(alpha), abs=1e-6)
    for ds in (-1e-3, 1e-3):
        assert pr.squeezed_photon_fidelity(s + ds, alpha) <= F + 1e-15


def test_photon_subtraction_proportional():
    s = 0.3
    sub = pr.subtract_photon(s, 40)
    one = pr.squeezed_fock(1, s, 40)
    assert fock.fock_fidelity(sub, one) == pytest.approx(1, abs=1e-12)
    # the norm of a S(s)|0> is sinh s
    raw = fock.apply_annihilate(pr.squeezed_fock(0, s, 40), 0)
    assert raw.norm() == pytest.approx(math.sinh(s), abs=1e-12)


def test_subtract_from_vacuum_degenerate():
    with pytest.raises(DegenerateStateError):
        pr.subtract_photon(0.0)


def test_chain_improves_with_steps():
    rows = list(pr.chained_amplification(0.6, 2))
    assert rows[-1][1] == pytest.approx(1.2)
    assert all(0 < r[4] <= 1 for r in rows)


def test_lossy_source():
    s0 = pr.optimal_squeezing(0.5)[0]
    rows = list(pr.chained_amplification(0.5, 1, s=s0, eta_source=0.6))
    assert rows[0][3] == pytest.approx(0.6 * pr.squeezed_photon_fidelity(s0, 0.5), abs=1e-9)
    assert rows[1][3] > rows[0][3]


def test_kerr_coefficients_n2():
    assert np.allclose(pr.kerr_cat_coefficients(2), [0.5 + 0.5j, 0.5 - 0.5j])


@pytest.mark.parametrize("N", [2, 3, 4, 5, 8])
def test_kerr_fock_equals_decomposition(N):
    ev = pr.kerr_fock_state(1.5, N)
    dec = fock.to_fock(pr.kerr_multicomponent_state(1.5, N), ev.cutoffs[0])
    assert fock.fock_fidelity(ev, dec) == pytest.approx(1, abs=1e-10)


def test_kerr_conditioning_n4():
    setup = pr.KerrSetup(6.0, 4)
    out, dens, fid = pr.kerr_homodyne_condition(setup)
    w = np.abs(pr.conditioned_kerr_weights(out, setup)) ** 2
    w = w / w.sum()
    assert w[0] == pytest.approx(0.5, abs=1e-9) and w[2] == pytest.approx(0.5, abs=1e-9)
    assert fid == pytest.approx(1, abs=1e-10)
    assert 0 < pr.kerr_window_probability(setup) < 1


def test_kerr_target_nan_when_not_multiple_of_4():
    setup = pr.KerrSetup(6.0, 3)
    out, _, fid = pr.kerr_homodyne_condition(setup)
    assert math.isnan(fid)


@pytest.mark.parametrize("sign", [1, -1])
def test_cross_kerr_pi(sign):
    out, p = pr.cross_kerr_cat(3.0, PI, sign)
    assert co.fidelity(out, co.make_cat(3.0, 0.0 if sign > 0 else PI)) == pytest.approx(1, abs=1e-12)
    assert 0 < p < 1


@given(st.floats(0.2, 3.0), st.sampled_from([1, -1]))
def test_symmetrization(theta, sign):
    out, _ = pr.cross_kerr_cat(2.0, theta, sign)
    sym, a_prime = pr.symmetrize(out, 2.0, theta)
    assert a_prime == pytest.approx(2.0 * math.sin(theta / 2), abs=1e-12)
    assert co.fidelity(sym, pr.symmetric_target(2.0, theta, sign)) == pytest.approx(1, abs=1e-10)
