"""The fourteen acceptance checks, each returning a :class:`Criterion`."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import coherent as co
from . import fock
from . import production as pr
from . import purification as pu
from . import qubits as qb
from .coherent import SuperposedState

PI = math.pi


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def _random_qubit(rng, alpha):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return qb.encode_qubit(v[0], v[1], alpha)


def check_overlap() -> Criterion:
    worst = 0.0
    for a in (0.3, 1.0, 1.7 + 0.4j, 2.0):
        val = abs(co.coherent_overlap(a, -a)) ** 2
        worst = max(worst, abs(val / math.exp(-4 * abs(a) ** 2) - 1))
    at2 = abs(co.coherent_overlap(2.0, -2.0)) ** 2
    ok = worst < 1e-12 and abs(at2 / math.exp(-16) - 1) < 1e-12
    return Criterion(1, "overlap", ok, f"|<2|-2>|^2={at2:.6e}, max rel err {worst:.2e}")


def check_readout(seed: int = 1) -> Criterion:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for alpha in (1.0, 2.0):
        for _ in range(50):
            q = _random_qubit(rng, alpha)
            # coefficients of the normalized physical state
            A, B = q.state.coeffs if q.state.labels[0, 0].real > 0 else q.state.coeffs[::-1]
            p = qb.readout_probabilities(q)["FAIL"]
            worst = max(worst, abs(p - abs(A + B) ** 2 * math.exp(-2 * alpha**2)))
    odd = max(qb.readout_probabilities(qb.encode_qubit(1, -1, a))["FAIL"] for a in (1.0, 2.0))
    ok = worst < 1e-12 and odd < 1e-12
    return Criterion(2, "readout", ok, f"max |P(FAIL) - closed form| {worst:.2e}, odd-cat P(FAIL) {odd:.2e}")


def check_bell() -> Criterion:
    wrong = fail_err = 0.0
    for alpha in (0.8, 1.5, 2.0):
        closed = 2 * math.exp(-2 * alpha**2) / (1 + math.exp(-4 * alpha**2))
        for which in qb.BELL_LABELS:
            probs = qb.bell_outcome_probabilities(qb.make_bell_cat(which, alpha), (0, 1))
            wrong = max(wrong, sum(v for k, v in probs.items() if k not in (which, qb.Bell.FAIL)))
            expect = closed if which in (qb.Bell.PHI_PLUS, qb.Bell.PSI_PLUS) else 0.0
            fail_err = max(fail_err, abs(probs[qb.Bell.FAIL] - expect))
    ok = wrong < 1e-12 and fail_err < 1e-10
    return Criterion(3, "bell discrimination", ok, f"max wrong-label prob {wrong:.2e}, Fail err {fail_err:.2e}")


def check_teleport(seed: int = 3) -> Criterion:
    rng = np.random.default_rng(seed)
    worst, fails, n = 0.0, 0, 0
    for alpha in (0.8, 1.5, 2.0):
        for _ in range(100):
            q = _random_qubit(rng, alpha)
            res, out = qb.teleport(q, rng=rng)
            if out is None:
                fails += 1
                continue
            n += 1
            worst = max(worst, 1 - co.fidelity(qb.apply_frame(out).state, q.state))
    ok = worst < 1e-10
    return Criterion(4, "teleportation", ok, f"{n} teleported, {fails} Fail, max infidelity {worst:.2e}")


def check_hr_preparation() -> Criterion:
    alpha = 2.0
    theta = PI / (4 * alpha**2)
    hr = qb.make_hr_resource(alpha)
    p_err, worst = 0.0, 0.0
    closed = qb.hr_closed_form_success(alpha, theta)
    for labels in itertools.product(qb.BELL_LABELS, repeat=2):
        state, p = qb.prepare_hr_via_bs(alpha, theta, outcomes=labels)
        p_err = max(p_err, abs(p - closed))
        worst = max(worst, 1 - co.fidelity(qb.hr_local_equivalent(state, alpha), hr))
    ok = p_err < 1e-6 and worst < 1e-9
    return Criterion(5, "|HR> preparation", ok,
                     f"success {p:.6f} vs {closed:.6f} (err {p_err:.2e}), max infidelity {worst:.2e}")


def _enumerate(run, ideal, keys, labels_per_key):
    """Min fidelity over every outcome combination of a gate."""
    worst = 1.0
    for combo in itertools.product(*labels_per_key):
        out = run(dict(zip(keys, combo)))
        worst = min(worst, co.fidelity(qb.apply_frame(out).state, co.normalize(ideal)))
    return worst


def check_gates(seed: int = 6) -> Criterion:
    a, theta = 2.0, 0.3
    rng = np.random.default_rng(seed)
    bells = qb.BELL_LABELS
    fids = {}
    for bit in (0, 1):
        q = qb.encode_qubit(1 - bit, bit, a)
        fids.setdefault("H", []).append(_enumerate(
            lambda o: qb.gate_hadamard(q, outcome=o["h"]), qb.ideal_hadamard(q.state, 0, a), ["h"], [bells]))
        fids.setdefault("R", []).append(_enumerate(
            lambda o: qb.gate_phase_rotation(q, theta, outcomes=o), qb.ideal_rotation(q.state, 0, a, theta),
            ["phase", "restore"], [("+", "-"), bells]))
        fids.setdefault("HH", []).append(_enumerate(
            lambda o: qb.gate_hadamard(qb.gate_hadamard(q, outcome=o["1"]), outcome=o["2"]), q.state,
            ["1", "2"], [bells, bells]))
    # basis inputs hide the Loewdin deviation of R; an equal superposition shows it
    plus = qb.encode_qubit(1, 1, a)
    fids["R(+)"] = [_enumerate(
        lambda o: qb.gate_phase_rotation(plus, theta, outcomes=o), qb.ideal_rotation(plus.state, 0, a, theta),
        ["phase", "restore"], [("+", "-"), bells])]
    keys = ["hadamard", "fusion", "restore_control", "restore_target"]
    for bits in itertools.product((0, 1), repeat=2):
        q = qb.join(*(qb.encode_qubit(1 - b, b, a) for b in bits))
        fids.setdefault("CS", []).append(_enumerate(
            lambda o: qb.gate_control_sign(q, outcomes=o), qb.ideal_control_sign(q.state, (0, 1), a),
            keys, [bells] * 4))
        # CS twice on randomly drawn heralded (non-Fail) outcomes
        for _ in range(8):
            o1, o2 = ({k: bells[i] for k, i in zip(keys, rng.integers(0, 4, 4))} for _ in range(2))
            twice = qb.gate_control_sign(qb.gate_control_sign(q, outcomes=o1), outcomes=o2)
            fids.setdefault("CSCS", []).append(co.fidelity(qb.apply_frame(twice).state, q.state))
    worst = {k: min(v) for k, v in fids.items()}
    ok = all(f >= 1 - 5e-4 for f in worst.values())
    detail = ", ".join(f"{k} {1 - f:.1e}" for k, f in worst.items())
    return Criterion(6, "gate set", ok, "max infidelity " + detail)


def check_purification() -> Criterion:
    alpha = 3.0
    f_err = amp_err = 0.0
    for F in (0.55, 0.6, 0.75, 0.9):
        rows = list(pu.purification_sequence(F, alpha, 2))
        expect = F
        for k, amp, Fk, _ in rows:
            if k:
                expect = pu.fidelity_recursion(expect)
            f_err = max(f_err, abs(Fk - expect))
            amp_err = max(amp_err, abs(amp - alpha * 2 ** (k / 2)))
    psi1 = qb.make_bell_cat(qb.Bell.PHI_PLUS, alpha)
    psi2 = qb.make_bell_cat(qb.Bell.PSI_PLUS, alpha)
    same = True
    for p1, p2 in ((psi1, psi1), (psi1, psi2), (psi2, psi2)):
        s1, _ = pu.purify_pair(p1, p2, alpha, 1.0)
        s2, _ = pu.purify_pair(p1, p2, alpha, 0.3)
        if (s1 is None) != (s2 is None):
            same = False
        elif s1 is not None:
            same &= np.array_equal(s1.coeffs, s2.coeffs) and np.array_equal(s1.labels, s2.labels)
    ok = f_err < 1e-10 and amp_err < 1e-12 and same
    return Criterion(7, "purification", ok,
                     f"max |F' - recursion| {f_err:.2e}, amplitude err {amp_err:.1e}, eta=0.3 identical: {same}")


def check_decoherence() -> Criterion:
    t_err = 0.0
    for alpha in (0.5, 1.0, 2.0):
        t_err = max(t_err, abs(pu.purification_threshold(alpha) - math.log(2)))
        t_err = max(t_err, abs(pu.channel_fidelity(alpha, math.log(2)) - 0.5))
    dist = 0.0
    for alpha, gt in ((0.8, 0.3), (1.2, 0.7)):
        rho = pu.LabelDensity.from_pure(qb.make_bell_cat(qb.Bell.PHI_MINUS, alpha))
        cutoff = max(30, fock.choose_cutoff(alpha, 0.0, 1e-16))
        oracle = pu.density_to_fock(rho, cutoff)
        for m in (0, 1):
            oracle = fock.apply_loss(oracle, m, gt)
        dist = max(dist, fock.trace_distance(oracle, pu.density_to_fock(pu.decohere(rho, gt), cutoff)))
    ok = t_err < 1e-9 and dist < 1e-8
    return Criterion(8, "decoherence threshold", ok, f"threshold err {t_err:.2e}, Kraus trace distance {dist:.2e}")


def check_amplification() -> Criterion:
    p_err, worst = 0.0, 0.0
    grid = (0.8, 1.0, 1.5)
    for a, b, f1, f2 in itertools.product(grid, grid, (0.0, PI), (0.0, PI)):
        setup = pr.AmplifySetup(a, b, f1, f2)
        out, p = pr.amplify_cats(setup)
        p_err = max(p_err, abs(p - pr.amplification_success(a, b, f1, f2)))
        worst = max(worst, 1 - co.fidelity(out, pr.amplified_target(setup)))
    _, p4 = pr.amplify_cats(pr.AmplifySetup(4.0, 4.0))
    ok = p_err < 1e-6 and abs(p4 - 0.5) < 1e-3 and worst < 1e-9
    return Criterion(9, "amplification", ok,
                     f"max |P - formula| {p_err:.2e}, P(4,4)={p4:.6f}, max infidelity {worst:.2e}")


def check_squeezed_optimum() -> Criterion:
    points = ((0.5, 0.083, 0.99999, 1e-5), (1 / math.sqrt(2), 0.164, 0.9998, 1e-4), (1.0, 0.313, 0.997, 1e-3))
    ok, parts = True, []
    for alpha, s_ref, f_ref, f_tol in points:
        s, F = pr.optimal_squeezing(alpha)
        F_fock = pr.cat_fidelity_fock(pr.squeezed_fock(1, s).amps, alpha, PI)
        ok &= abs(s - s_ref) <= 0.005 and abs(F - f_ref) <= f_tol and abs(F - F_fock) < 1e-9
        parts.append(f"({alpha:.3f}, {s:.4f}, {F:.6f})")
    return Criterion(10, "squeezed-photon optimum", ok, " ".join(parts))


def check_chained() -> Criterion:
    s, rows = pr.chained_production(2.5, 4)
    final = rows[-1]
    s0 = pr.optimal_squeezing(0.5)[0]
    lossy = list(pr.chained_amplification(0.5, 1, s=s0, eta_source=0.6))
    f0, f1 = lossy[0][3], lossy[1][3]
    ok = final[3] > 0.99 - 0.005 and abs(f0 - 0.60) <= 0.02 and abs(f1 - 0.89) <= 0.02
    return Criterion(11, "chained production", ok,
                     f"F={final[3]:.5f} at alpha={final[1]:.3f} (s={s:.4f}); lossy source {f0:.4f} -> {f1:.4f}")


def check_kerr() -> Criterion:
    worst = 0.0
    for N in (2, 3, 4, 8):
        ev = pr.kerr_fock_state(1.5, N)
        dec = fock.to_fock(pr.kerr_multicomponent_state(1.5, N), ev.cutoffs[0])
        worst = max(worst, 1 - fock.fock_fidelity(ev, dec))
    setup = pr.KerrSetup(6.0, 4)
    out, _, _ = pr.kerr_homodyne_condition(setup, 0.0)
    w = np.abs(pr.conditioned_kerr_weights(out, setup)) ** 2
    w = w / w.sum()
    on13 = w[0] + w[2]
    ok = worst <= 1e-8 and on13 > 1 - 1e-9
    return Criterion(12, "Kerr", ok, f"max infidelity {worst:.2e}, weight on n in {{1,3}} {on13:.12f}")


def check_cross_kerr() -> Criterion:
    cat_err = sym_err = 0.0
    for sign in (1, -1):
        out, _ = pr.cross_kerr_cat(3.0, PI, sign)
        cat_err = max(cat_err, 1 - co.fidelity(out, co.make_cat(3.0, 0.0 if sign > 0 else PI)))
        for theta in (PI / 2, PI / 4, 0.7):
            out, _ = pr.cross_kerr_cat(3.0, theta, sign)
            sym, _ = pr.symmetrize(out, 3.0, theta)
            sym_err = max(sym_err, 1 - co.fidelity(sym, pr.symmetric_target(3.0, theta, sign)))
    ok = cat_err < 1e-10 and sym_err < 1e-9
    return Criterion(13, "cross-Kerr", ok, f"cat infidelity {cat_err:.2e}, symmetrized infidelity {sym_err:.2e}")


def random_superposition(rng, max_labels=16, max_modes=3, max_amp=2.5) -> SuperposedState:
    k = int(rng.integers(1, max_labels + 1))
    m = int(rng.integers(1, max_modes + 1))
    r = max_amp * np.sqrt(rng.uniform(size=(k, m)))
    labels = r * np.exp(2j * PI * rng.uniform(size=(k, m)))
    coeffs = rng.normal(size=k) + 1j * rng.normal(size=k)
    return SuperposedState(coeffs, labels)


def check_backend_oracle(seed: int = 14, count: int = 200) -> Criterion:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        s1 = random_superposition(rng)
        s2 = SuperposedState(rng.normal(size=len(s1)) + 0j, s1.labels[rng.permutation(len(s1))] * 0.9)
        cutoff = fock.choose_cutoff(2.5, 0.0, 1e-14)
        f_fock = fock.fock_fidelity(fock.to_fock(s1, cutoff), fock.to_fock(s2, cutoff))
        worst = max(worst, abs(co.fidelity(s1, s2) - f_fock))
    ok = worst < 1e-8
    return Criterion(14, "backend oracle", ok, f"max |F_coherent - F_fock| {worst:.2e} over {count} pairs")


CHECKS = (
    check_overlap,
    check_readout,
    check_bell,
    check_teleport,
    check_hr_preparation,
    check_gates,
    check_purification,
    check_decoherence,
    check_amplification,
    check_squeezed_optimum,
    check_chained,
    check_kerr,
    check_cross_kerr,
    check_backend_oracle,
)


def run_all(callback=None) -> list[Criterion]:
    results = []
    for check in CHECKS:
        res = check()
        results.append(res)
        if callback:
            callback(res)
    return results
