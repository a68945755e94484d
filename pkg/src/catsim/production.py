"""Cat-state production: linear-optics amplification, squeezed single photons,
photon subtraction, Kerr evolution with homodyne conditioning and cross-Kerr
conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from . import coherent as co
from . import fock
from .coherent import SuperposedState
from .errors import DegenerateStateError, ImpossibleOutcomeError, TruncationError
from .fock import FockVector


# ---------------------------------------------------------------- amplification


@dataclass(frozen=True)
class AmplifySetup:
    alpha: float
    beta: float
    phi1: float = np.pi
    phi2: float = np.pi
    eta: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("degenerate amplification input: alpha and beta must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("detector efficiency must lie in (0, 1]")

    @property
    def amplitude(self) -> float:
        return float(np.hypot(self.alpha, self.beta))

    @property
    def t1(self) -> float:
        return self.alpha / self.amplitude

    @property
    def r1(self) -> float:
        return self.beta / self.amplitude

    @property
    def gamma_anc(self) -> float:
        return 2 * self.alpha * self.beta / self.amplitude

    @property
    def bs1_theta(self) -> float:
        """Real-convention angle with ``cos(theta/2) = t1``, ``sin(theta/2) = r1``."""
        return float(2 * np.arctan2(self.r1, self.t1))


def amplification_success(alpha: float, beta: float, phi1: float, phi2: float) -> float:
    """Closed-form heralding probability of one amplification step."""
    a2, b2 = alpha**2, beta**2
    num = (-np.expm1(-2 * a2 * b2 / (a2 + b2))) ** 2 * (1 + np.cos(phi1 + phi2) * np.exp(-2 * (a2 + b2)))
    den = 2 * (1 + np.cos(phi1) * np.exp(-2 * a2)) * (1 + np.cos(phi2) * np.exp(-2 * b2))
    return float(num / den)


def _amplifier_modes(state: SuperposedState, setup: AmplifySetup) -> SuperposedState:
    """Modes (a, b) -> (f, d1, d2): BS1, then g against the ancilla on a 50:50 splitter."""
    s = co.apply_beam_splitter(state, (0, 1), setup.bs1_theta, co.REAL)  # f, g
    s = co.tensor(s, SuperposedState.coherent(setup.gamma_anc))
    return co.apply_beam_splitter(s, (1, 2), np.pi / 2, co.REAL)


def amplify_cats(setup: AmplifySetup):
    """Mix two cats and condition on both BS2 detectors clicking.

    Returns ``(out, success_prob)``; ``out`` is the normalized mode-f state.
    """
    cats = co.tensor(co.make_cat(setup.alpha, setup.phi1), co.make_cat(setup.beta, setup.phi2))
    out, p = co.condition_all_click(_amplifier_modes(cats, setup), [1, 2], setup.eta)
    if out is None:
        raise ImpossibleOutcomeError("amplification cannot herald on this input")
    return out, p


def amplified_target(setup: AmplifySetup) -> SuperposedState:
    return co.make_cat(setup.amplitude, setup.phi1 + setup.phi2)


# Fock-level amplification, used for inputs that are not exact cats


def _pad(vec: np.ndarray, cutoff: int) -> np.ndarray:
    out = np.zeros(cutoff + 1, complex)
    n = min(len(vec), cutoff + 1)
    out[:n] = vec[:n]
    return out


def amplify_fock(branches_a, branches_b, setup: AmplifySetup, cutoff: int | None = None):
    """Amplification step on mixed single-mode inputs in the number basis.

    ``branches_*`` are lists of ``(weight, amplitude vector)``.  Returns the
    conditioned density matrix of mode f (normalized) and the heralding
    probability.  Detectors are on/off with efficiency ``setup.eta``.
    """
    if cutoff is None:
        cutoff = fock.choose_cutoff(max(setup.amplitude, np.sqrt(2) * setup.gamma_anc), 0.0, 1e-13)
    anc = fock.coherent_vector(setup.gamma_anc, cutoff)
    n = np.arange(cutoff + 1)
    click = 1.0 - (1.0 - setup.eta) ** n
    rho = np.zeros((cutoff + 1, cutoff + 1), complex)
    total = 0.0
    for wa, va in branches_a:
        for wb, vb in branches_b:
            amps = np.multiply.outer(np.multiply.outer(_pad(va, cutoff), _pad(vb, cutoff)), anc)
            f = fock.fock_beam_splitter(FockVector(amps), (0, 1), setup.bs1_theta, co.REAL)
            f = fock.fock_beam_splitter(f, (1, 2), np.pi / 2, co.REAL)
            w = f.amps * np.sqrt(click)[None, :, None] * np.sqrt(click)[None, None, :]
            mat = w.reshape(cutoff + 1, -1)
            part = mat @ mat.conj().T
            norm_in = np.vdot(amps, amps).real
            rho += wa * wb * part / norm_in
            total += wa * wb * np.trace(part).real / norm_in
    if total <= 0:
        raise ImpossibleOutcomeError("amplification cannot herald on this input")
    return rho / total, total


def density_branches(rho: np.ndarray, rel_tol: float = 1e-13):
    """Eigen-decomposition of a density matrix as ``[(weight, vector)]``."""
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    keep = w > rel_tol * w.max()
    w = w[keep]
    return [(float(x / w.sum()), v[:, i]) for x, i in zip(w, np.flatnonzero(keep))]


def cat_fidelity_fock(rho_or_vec: np.ndarray, alpha: float, phase: float) -> float:
    """``<cat|rho|cat>`` (or ``|<cat|psi>|^2``) for the cat of the given amplitude and phase."""
    dim = rho_or_vec.shape[0]
    cat = fock.coherent_vector(alpha, dim - 1) + np.exp(1j * phase) * fock.coherent_vector(-alpha, dim - 1)
    cat = cat / np.linalg.norm(cat)
    if rho_or_vec.ndim == 1:
        v = rho_or_vec / np.linalg.norm(rho_or_vec)
        return float(abs(np.vdot(cat, v)) ** 2)
    return float((cat.conj() @ rho_or_vec @ cat).real / np.trace(rho_or_vec).real)


# ---------------------------------------------------------------- squeezed single photons


def squeezed_photon_fidelity(s: float, alpha: float) -> float:
    """``|<odd cat(alpha)| S(s)|1>|^2`` in closed form."""
    if s < 0 or alpha <= 0:
        raise ValueError("need s >= 0 and alpha > 0")
    a2 = alpha**2
    return float(2 * a2 * np.exp(a2 * (np.tanh(s) - 1)) / (np.cosh(s) ** 3 * -np.expm1(-2 * a2)))


def optimal_squeezing(alpha: float, tol: float = 1e-10):
    """Maximize :func:`squeezed_photon_fidelity` over s; returns ``(s_star, F_star)``."""
    grid = np.linspace(0.0, 4.0, 81)
    k = int(np.argmax([squeezed_photon_fidelity(s, alpha) for s in grid]))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda s: -squeezed_photon_fidelity(s, alpha),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": tol},
    )
    s = float(res.x)
    return s, squeezed_photon_fidelity(s, alpha)


def optimal_squeezing_exact(alpha: float) -> float:
    """Stationary point of F(s, alpha): ``sinh(2s) = 2 alpha^2 / 3``."""
    return float(np.arcsinh(2 * alpha**2 / 3) / 2)


def squeezed_fock(n: int, s: float, cutoff: int | None = None, epsilon: float = 1e-12) -> FockVector:
    """``S(s)|n>`` in the number basis, truncated to ``cutoff``."""
    work = max(40, n + 10)
    while True:
        try:
            full = fock.apply_squeeze(fock.number_state(n, work), 0, s, epsilon=epsilon / 10)
            break
        except TruncationError:
            work *= 2
    if cutoff is None:
        return full
    amps = np.zeros(cutoff + 1, complex)
    keep = min(cutoff, work) + 1
    amps[:keep] = full.amps[:keep]
    lost = float(np.sum(np.abs(full.amps[keep:]) ** 2))
    if lost > epsilon:
        raise TruncationError(f"S({s})|{n}> leaves {lost:.3g} beyond cutoff {cutoff}")
    return FockVector(amps, full.tail + lost)


def subtract_photon(s: float, cutoff: int | None = None) -> FockVector:
    """Normalized ``a S(s)|0>``."""
    if s <= 0:
        raise DegenerateStateError("annihilating the vacuum gives zero; need s > 0")
    vac = squeezed_fock(0, s, cutoff)
    return fock.apply_annihilate(vac, 0).normalized()


def squeezed_mixture(s: float, eta_source: float, cutoff: int | None = None):
    """A single-photon source of efficiency ``eta_source`` after squeezing, as branches."""
    one = squeezed_fock(1, s, cutoff).amps
    zero = squeezed_fock(0, s, len(one) - 1).amps
    branches = [(eta_source, one)]
    if eta_source < 1:
        branches.append((1 - eta_source, zero))
    return branches


def chained_amplification(alpha0: float, steps: int, s: float | None = None, eta_source: float = 1.0, eta_det: float = 1.0):
    """Amplify squeezed-photon approximations of odd cats ``steps`` times.

    Each step mixes two identical copies of the previous output.  Yields
    ``(step, nominal amplitude, phase, fidelity, success_prob)``.
    """
    if s is None:
        s = optimal_squeezing(alpha0)[0]
    amp, phase = alpha0, np.pi
    final = alpha0 * 2 ** (steps / 2)
    cutoff = max(fock.choose_cutoff(final * np.sqrt(2), 0.0, 1e-13), 40)
    while True:
        try:
            branches = squeezed_mixture(s, eta_source, cutoff)
            break
        except TruncationError:
            cutoff += 10
    rho = sum(w * np.outer(v, v.conj()) for w, v in branches)
    yield 0, amp, phase, cat_fidelity_fock(rho, amp, phase), 1.0
    for k in range(1, steps + 1):
        setup = AmplifySetup(amp, amp, phase, phase, eta_det)
        rho, p = amplify_fock(branches, branches, setup, cutoff=len(branches[0][1]) - 1)
        amp, phase = setup.amplitude, (2 * phase) % (2 * np.pi)
        branches = density_branches(rho)
        yield k, amp, phase, cat_fidelity_fock(rho, amp, phase), p


def chained_production(target: float, steps: int, eta_det: float = 1.0):
    """Reach cat amplitude ``target`` in ``steps`` doublings of the mean photon number.

    The squeezing of the seed photons is chosen to maximize the fidelity of
    the final state.  Returns ``(s, rows)`` with rows as in
    :func:`chained_amplification`.
    """
    alpha0 = target / 2 ** (steps / 2)
    s0 = optimal_squeezing(alpha0)[0]

    def final_infidelity(s):
        *_, last = chained_amplification(alpha0, steps, s=s, eta_det=eta_det)
        return 1.0 - last[3]

    res = minimize_scalar(final_infidelity, bounds=(0.5 * s0, 1.3 * s0), method="bounded", options={"xatol": 1e-6})
    s = float(res.x)
    return s, list(chained_amplification(alpha0, steps, s=s, eta_det=eta_det))


# ---------------------------------------------------------------- Kerr


@dataclass(frozen=True)
class KerrSetup:
    alpha_i: float
    N: int
    x_center: float = 0.0
    x_halfwidth: float = 0.05

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.x_halfwidth <= 0:
            raise ValueError("homodyne window halfwidth must be positive")

    @property
    def lambda_tau(self) -> float:
        return np.pi / self.N


def kerr_cat_coefficients(N: int) -> np.ndarray:
    """``C_{n,N}`` for ``n = 1..N``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    k = np.arange(N)
    n = np.arange(1, N + 1)[:, None]
    return np.sum((-1.0) ** k * np.exp(-1j * np.pi * k / N * (2 * n - k)), axis=1) / N


def kerr_labels(alpha: float, N: int) -> np.ndarray:
    return -alpha * np.exp(2j * np.pi * np.arange(1, N + 1) / N)


def kerr_multicomponent_state(alpha: float, N: int) -> SuperposedState:
    """Circular superposition reached by ``|alpha>`` after Kerr time ``pi / (lambda N)``."""
    return co.normalize(SuperposedState(kerr_cat_coefficients(N), kerr_labels(alpha, N).reshape(-1, 1)))


def kerr_fock_state(alpha: float, N: int, cutoff: int | None = None) -> FockVector:
    """``|alpha>`` evolved in the number basis to Kerr time ``pi / (lambda N)``.

    The propagator is ``exp(+i lambda tau n^2)``; this is the sign under
    which the circular decomposition above holds (the same ``exp(+iHt)``
    convention as :func:`cross_kerr_interaction`).
    """
    if cutoff is None:
        cutoff = fock.choose_cutoff(alpha, 0.0, 1e-15)
    start = fock.to_fock(SuperposedState.coherent(alpha), cutoff)
    return fock.kerr_evolve(start, 0, -np.pi / N)


def kerr_split_state(setup: KerrSetup) -> SuperposedState:
    """The circular superposition mixed with vacuum on a 50:50 splitter."""
    psi = kerr_multicomponent_state(setup.alpha_i, setup.N)
    two = co.insert_mode(psi, 0, 0.0)
    return co.apply_beam_splitter(two, (0, 1), np.pi / 2, co.REAL)


def kerr_homodyne_condition(setup: KerrSetup, x: float | None = None):
    """Measure X on one output of the split state and keep the other.

    Returns ``(out, density_at_x, cat_fidelity)``.  The fidelity is with the
    two-component cat built from the ``n = N/4`` and ``n = 3N/4`` terms of
    the conditioned state (only defined for ``N`` divisible by 4; NaN
    otherwise).
    """
    x = setup.x_center if x is None else x
    out, dens = co.project_homodyne_x(kerr_split_state(setup), 1, x)
    return out, dens, kerr_target_fidelity(out, setup)


def conditioned_kerr_weights(out: SuperposedState, setup: KerrSetup) -> np.ndarray:
    """Coefficient of every circle component in the conditioned state (index n-1)."""
    labels = kerr_labels(setup.alpha_i / np.sqrt(2), setup.N)
    w = np.zeros(setup.N, complex)
    for c, lab in zip(out.coeffs, out.labels[:, 0]):
        w[int(np.argmin(np.abs(labels - lab)))] += c
    return w


def kerr_target_fidelity(out: SuperposedState, setup: KerrSetup) -> float:
    N = setup.N
    if N % 4:
        return float("nan")
    w = conditioned_kerr_weights(out, setup)
    labels = kerr_labels(setup.alpha_i / np.sqrt(2), N)
    keep = [N // 4 - 1, 3 * N // 4 - 1]
    target = SuperposedState(w[keep], labels[keep].reshape(-1, 1))
    return co.fidelity(out, target)


def kerr_window_probability(setup: KerrSetup) -> float:
    """Probability that the homodyne result falls inside the acceptance window."""
    state = kerr_split_state(setup)

    def dens(x):
        return co.norm_squared(co.contract_mode(state, 1, co.homodyne_kernel(x))) / co.norm_squared(state)

    lo, hi = setup.x_center - setup.x_halfwidth, setup.x_center + setup.x_halfwidth
    return float(quad(dens, lo, hi, epsabs=1e-13)[0])


# ---------------------------------------------------------------- cross-Kerr


@dataclass(frozen=True)
class HybridState:
    """Mode 1 in span{|0>, |1>} (number basis), mode 2 a coherent superposition.

    ``branches[j]`` is the (unnormalized) mode-2 state paired with ``|j>``.
    """

    branches: tuple

    def norm_squared(self) -> float:
        return float(sum(co.norm_squared(b) for b in self.branches if not b.is_empty))


def cross_kerr_interaction(alpha: complex, theta: float) -> HybridState:
    """``(|0>|alpha> + |1>|alpha e^{i theta}>)/sqrt2``."""
    s = 1 / np.sqrt(2)
    return HybridState(
        (
            SuperposedState(np.array([s]), np.array([[alpha]])),
            SuperposedState(np.array([s]), np.array([[alpha * np.exp(1j * theta)]])),
        )
    )


def project_qubit_mode(h: HybridState, sign: int):
    """Project mode 1 on ``(|0> + sign |1>)/sqrt2``; returns ``(mode-2 state, prob)``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    b0, b1 = h.branches
    post = co.compact(
        SuperposedState(
            np.concatenate([b0.coeffs, sign * b1.coeffs]) / np.sqrt(2),
            np.concatenate([b0.labels, b1.labels]),
        )
    )
    n_out = co.norm_squared(post) if not post.is_empty else 0.0
    prob = n_out / h.norm_squared()
    if prob <= 1e-300 or co._is_degenerate(post, n_out):
        raise ImpossibleOutcomeError(f"impossible outcome: sign {sign:+d}")
    return post.scaled(1 / np.sqrt(n_out)), prob


def cross_kerr_cat(alpha: float, theta: float, sign: int = 1):
    """Conditioned mode-2 state ``~ |alpha> + sign |alpha e^{i theta}>`` and its probability."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return project_qubit_mode(cross_kerr_interaction(alpha, theta), sign)


def symmetrize(state: SuperposedState, alpha: float, theta: float):
    """Displace ``|alpha> +- |alpha e^{i theta}>`` to ``|a'> +- e^{i chi} |-a'>`` with real ``a' >= 0``.

    Returns ``(state, a_prime)``.
    """
    delta = -alpha * (1 + np.exp(1j * theta)) / 2
    shifted = co.apply_displacement(state, 0, delta)
    centre = alpha * (1 - np.exp(1j * theta)) / 2
    rotated = co.apply_phase_shift(shifted, 0, -np.angle(centre)) if abs(centre) > 0 else shifted
    return rotated, float(abs(centre))


def symmetric_target(alpha: float, theta: float, sign: int) -> SuperposedState:
    """``|a'> + sign e^{i chi} |-a'>`` with the displacement phase ``chi`` worked out directly."""
    delta = -alpha * (1 + np.exp(1j * theta)) / 2
    b0, b1 = alpha, alpha * np.exp(1j * theta)
    # D(delta)|b> = exp(i Im(delta conj(b))) |b + delta>
    chi = np.imag(delta * np.conj(b1)) - np.imag(delta * np.conj(b0))
    a_prime = abs(alpha * (1 - np.exp(1j * theta)) / 2)
    return co.normalize(SuperposedState(np.array([1.0, sign * np.exp(1j * chi)]), np.array([[a_prime], [-a_prime]])))
