"""Truncated number-basis backend.

Used for the non-Gaussian operations (squeezing, Kerr evolution, photon
subtraction) and as an independent check of the coherent-label algebra.
Amplitudes live in a dense tensor with one axis per mode; axis ``m`` has
length ``cutoffs[m] + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import poisson

from .coherent import SuperposedState, _CONVENTION_ALIASES, PHASE, REAL
from .errors import DegenerateStateError, ImpossibleOutcomeError, TruncationError

DEFAULT_EPSILON = 1e-12


@dataclass(frozen=True)
class TruncationBudget:
    epsilon: float = DEFAULT_EPSILON
    n_max: int = 1

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")


@dataclass(frozen=True)
class FockVector:
    """Dense amplitude tensor; ``tail`` bounds the probability discarded so far."""

    amps: np.ndarray
    tail: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        object.__setattr__(self, "amps", amps)

    @property
    def mode_count(self) -> int:
        return self.amps.ndim

    @property
    def cutoffs(self) -> tuple[int, ...]:
        return tuple(d - 1 for d in self.amps.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "FockVector":
        n = self.norm()
        if n == 0:
            raise DegenerateStateError("zero Fock vector")
        return FockVector(self.amps / n, self.tail)


def number_state(n: int, cutoff: int) -> FockVector:
    v = np.zeros(cutoff + 1, complex)
    v[n] = 1.0
    return FockVector(v)


def vacuum(cutoff: int, modes: int = 1) -> FockVector:
    v = np.zeros((cutoff + 1,) * modes, complex)
    v[(0,) * modes] = 1.0
    return FockVector(v)


def tensor(*vecs: FockVector) -> FockVector:
    out = vecs[0].amps
    tail = vecs[0].tail
    for v in vecs[1:]:
        out = np.multiply.outer(out, v.amps)
        tail += v.tail
    return FockVector(out, tail)


def poisson_tail(mean: float, n_max: int) -> float:
    """``P(N > n_max)`` for a Poisson distribution."""
    if mean == 0:
        return 0.0
    return float(poisson.sf(n_max, mean))


def choose_cutoff(max_amp: float, s_max: float = 0.0, epsilon: float = DEFAULT_EPSILON) -> int:
    """Smallest ``n_max`` whose Poisson tail for amplitude ``max_amp e^{s_max}`` is below epsilon."""
    if max_amp < 0 or not 0 < epsilon < 1:
        raise ValueError("need max_amp >= 0 and epsilon in (0, 1)")
    mean = (max_amp * np.exp(s_max)) ** 2
    n = int(np.ceil(mean + 10 * np.sqrt(mean + 1) + 10))
    while poisson_tail(mean, n) >= epsilon:
        n += 1
    while n > 1 and poisson_tail(mean, n - 1) < epsilon:
        n -= 1
    return max(n, 1)


def coherent_vector(alpha: complex, n_max: int) -> np.ndarray:
    """Truncated expansion ``exp(-|a|^2/2) a^n / sqrt(n!)``."""
    v = np.empty(n_max + 1, complex)
    v[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, n_max + 1):
        v[n] = v[n - 1] * alpha / np.sqrt(n)
    return v


def to_fock(state: SuperposedState, budget: TruncationBudget | int) -> FockVector:
    """Expand a coherent superposition in the number basis."""
    if isinstance(budget, int):
        budget = TruncationBudget(DEFAULT_EPSILON, budget)
    n_max = budget.n_max
    worst = 0.0
    for label in state.labels:
        tail = 1.0 - np.prod([1.0 - poisson_tail(abs(a) ** 2, n_max) for a in label])
        if tail >= budget.epsilon:
            raise TruncationError(
                f"label {np.round(label, 6).tolist()} has tail {tail:.3g} beyond n_max={n_max}"
            )
        worst = max(worst, tail)
    m = state.mode_count
    amps = np.zeros((n_max + 1,) * m, complex)
    for c, label in zip(state.coeffs, state.labels):
        term = np.array(c, dtype=complex)
        for a in label:
            term = np.multiply.outer(term, coherent_vector(a, n_max))
        amps += term
    return FockVector(amps, worst * len(state) ** 2)


def fock_inner(f1: FockVector, f2: FockVector) -> complex:
    if f1.amps.shape != f2.amps.shape:
        raise ValueError(f"shape mismatch {f1.amps.shape} vs {f2.amps.shape}")
    return complex(np.vdot(f1.amps, f2.amps))


def fock_fidelity(f1: FockVector, f2: FockVector) -> float:
    n1 = np.vdot(f1.amps, f1.amps).real
    n2 = np.vdot(f2.amps, f2.amps).real
    if n1 == 0 or n2 == 0:
        raise DegenerateStateError("fidelity with a zero Fock vector")
    return abs(fock_inner(f1, f2)) ** 2 / (n1 * n2)


# ---------------------------------------------------------------- single-mode maps


def _apply_on_axis(amps: np.ndarray, mode: int, matrix: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(amps, mode, 0)
    out = np.tensordot(matrix, moved, axes=(1, 0))
    return np.moveaxis(out, 0, mode)


def _diag_on_axis(amps: np.ndarray, mode: int, diag: np.ndarray) -> np.ndarray:
    shape = [1] * amps.ndim
    shape[mode] = -1
    return amps * diag.reshape(shape)


def lowering(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


@lru_cache(maxsize=64)
def _squeeze_matrix(dim: int, s: float, pad: int) -> np.ndarray:
    a = lowering(dim + pad)
    gen = 0.5 * s * (a.conj().T @ a.conj().T - a @ a)
    return expm(gen)[:, :dim]


def apply_squeeze(f: FockVector, mode: int, s: float, epsilon: float = DEFAULT_EPSILON) -> FockVector:
    """Squeezing unitary ``exp[(s/2)(a^dag^2 - a^2)]``.

    With this sign ``S(s)|0>`` has non-negative amplitudes on ``|2n>``, which
    is the orientation in which squeezed single photons approximate odd cats
    of real positive amplitude.
    """
    if s == 0:
        return f
    dim = f.amps.shape[mode]
    pad = max(60, dim)
    full = _apply_on_axis(f.amps, mode, _squeeze_matrix(dim, float(s), pad))
    kept = np.take(full, range(dim), axis=mode)
    lost = float(np.sum(np.abs(full) ** 2) - np.sum(np.abs(kept) ** 2))
    if lost > epsilon:
        raise TruncationError(f"squeezing by s={s} pushes {lost:.3g} beyond cutoff {dim - 1}")
    return FockVector(kept, f.tail + max(lost, 0.0))


def squeezed_vacuum_series(s: float, n_max: int) -> np.ndarray:
    """Closed-form ``S(s)|0>`` amplitudes via the two-step recurrence."""
    v = np.zeros(n_max + 1, complex)
    v[0] = 1 / np.sqrt(np.cosh(s))
    th = np.tanh(s)
    for n in range(2, n_max + 1, 2):
        v[n] = v[n - 2] * th * np.sqrt((n - 1) / n)
    return v


def apply_annihilate(f: FockVector, mode: int) -> FockVector:
    """Unnormalized ``a`` on ``mode``."""
    dim = f.amps.shape[mode]
    return FockVector(_apply_on_axis(f.amps, mode, lowering(dim)), f.tail)


def apply_create(f: FockVector, mode: int) -> FockVector:
    dim = f.amps.shape[mode]
    top = float(np.sum(np.abs(np.take(f.amps, [dim - 1], axis=mode)) ** 2))
    return FockVector(_apply_on_axis(f.amps, mode, lowering(dim).T), f.tail + top * dim)


def kerr_evolve(f: FockVector, mode: int, lambda_tau: float, omega_tau: float = 0.0) -> FockVector:
    """``exp(-i (omega n + lambda n^2) tau)`` on ``mode``."""
    n = np.arange(f.amps.shape[mode])
    phase = np.exp(-1j * (omega_tau * n + lambda_tau * n.astype(float) ** 2))
    return FockVector(_diag_on_axis(f.amps, mode, phase), f.tail)


def fock_phase_shift(f: FockVector, mode: int, phi: float) -> FockVector:
    n = np.arange(f.amps.shape[mode])
    return FockVector(_diag_on_axis(f.amps, mode, np.exp(1j * phi * n)), f.tail)


@lru_cache(maxsize=64)
def _displacement_matrix(dim: int, delta: complex, pad: int) -> np.ndarray:
    a = lowering(dim + pad)
    return expm(delta * a.conj().T - np.conj(delta) * a)[:dim, :dim]


def fock_displace(f: FockVector, mode: int, delta: complex) -> FockVector:
    dim = f.amps.shape[mode]
    mat = _displacement_matrix(dim, complex(delta), max(60, dim))
    out = _apply_on_axis(f.amps, mode, mat)
    lost = max(f.norm() ** 2 - float(np.sum(np.abs(out) ** 2)), 0.0)
    return FockVector(out, f.tail + lost)


# ---------------------------------------------------------------- beam splitter


@lru_cache(maxsize=4096)
def _bs_block(total: int, theta: float, convention: str) -> np.ndarray:
    k = np.arange(total)
    up = np.zeros((total + 1, total + 1))
    up[k + 1, k] = np.sqrt((k + 1) * (total - k))  # a^dag b on |k, total-k>
    if convention == REAL:
        gen = up - up.T
    else:
        gen = 1j * (up + up.T)
    return expm(0.5 * theta * gen)


def fock_beam_splitter(f: FockVector, modes: Sequence[int], theta: float, convention: str = REAL) -> FockVector:
    """Two-mode beam splitter applied block by block in total photon number.

    Matches :func:`catsim.coherent.apply_beam_splitter` on coherent inputs.
    """
    conv = _CONVENTION_ALIASES.get(convention)
    if conv not in (REAL, PHASE):
        raise ValueError(f"unknown beam-splitter convention {convention!r}")
    i, j = modes
    if i == j:
        raise ValueError("beam-splitter modes must be distinct")
    ci, cj = f.amps.shape[i] - 1, f.amps.shape[j] - 1
    if ci != cj:
        raise ValueError("beam splitter needs matching cutoffs on both modes")
    c = ci
    arr = np.moveaxis(f.amps, (i, j), (0, 1))
    out = np.zeros_like(arr)
    for total in range(2 * c + 1):
        lo, hi = max(0, total - c), min(total, c)
        ks = np.arange(lo, hi + 1)
        block = _bs_block(total, float(theta), conv)[np.ix_(ks, ks)]
        vec = arr[ks, total - ks]
        out[ks, total - ks] = np.tensordot(block, vec, axes=(1, 0))
    out = np.moveaxis(out, (0, 1), (i, j))
    lost = max(f.norm() ** 2 - float(np.sum(np.abs(out) ** 2)), 0.0)
    return FockVector(out, f.tail + lost)


def fock_mode_transform(f: FockVector, modes, theta, convention=REAL) -> FockVector:
    return fock_beam_splitter(f, modes, theta, convention)


# ---------------------------------------------------------------- measurements


def _finish(f: FockVector, post: np.ndarray, what: str):
    n_in = np.vdot(f.amps, f.amps).real
    n_out = np.vdot(post, post).real
    if n_out <= 1e-300 or n_out / n_in < 1e-28:
        raise ImpossibleOutcomeError(f"impossible outcome: {what}")
    return FockVector(post / np.sqrt(n_out), f.tail), n_out / n_in


def fock_project_parity(f: FockVector, mode: int, parity: str):
    n = np.arange(f.amps.shape[mode])
    mask = (n % 2 == (0 if parity == "even" else 1)).astype(float)
    return _finish(f, _diag_on_axis(f.amps, mode, mask), f"{parity} parity")


def fock_project_number(f: FockVector, mode: int, n: int):
    """Condition on ``n`` photons; the mode is removed."""
    post = np.take(f.amps, n, axis=mode)
    return _finish(f, post, f"{n} photons")


def fock_click_probability(f: FockVector, mode: int) -> float:
    vac = np.take(f.amps, 0, axis=mode)
    return 1.0 - np.vdot(vac, vac).real / np.vdot(f.amps, f.amps).real


def hermite_functions(x: float, n_max: int) -> np.ndarray:
    """``<x|n>`` for ``n = 0..n_max`` by the stable three-term recurrence."""
    psi = np.zeros(n_max + 1)
    psi[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = np.sqrt(2.0 / (n + 1)) * x * psi[n] - np.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def fock_homodyne_x(f: FockVector, mode: int, x: float):
    """Condition on quadrature ``x``; returns ``(reduced vector, density)``."""
    psi = hermite_functions(x, f.amps.shape[mode] - 1)
    post = np.tensordot(psi, np.moveaxis(f.amps, mode, 0), axes=(0, 0))
    n_in = np.vdot(f.amps, f.amps).real
    n_out = np.vdot(post, post).real
    return FockVector(post / np.sqrt(n_out), f.tail), n_out / n_in


# ---------------------------------------------------------------- densities


def density(f: FockVector) -> np.ndarray:
    """``|f><f|`` with shape ``dims + dims``."""
    return np.multiply.outer(f.amps, f.amps.conj())


def apply_loss(rho: np.ndarray, mode: int, gamma_tau: float) -> np.ndarray:
    """Amplitude damping of one mode by the Kraus sum over photon-loss events.

    ``K_k = sum_n sqrt(C(n, k)) t^(n-k) (1-t^2)^(k/2) |n-k><n|`` with
    ``t = exp(-gamma_tau/2)``.
    """
    m = rho.ndim // 2
    dim = rho.shape[mode]
    t2 = np.exp(-gamma_tau)
    n = np.arange(dim)
    rho = np.moveaxis(rho, (mode, m + mode), (0, 1))
    out = np.zeros_like(rho)
    for k in range(dim):
        nn = n[: dim - k]
        # log of sqrt(C(nn+k, k)) t^nn (1-t^2)^(k/2)
        logw = 0.5 * (gammaln(nn + k + 1) - gammaln(nn + 1) - gammaln(k + 1)) + 0.5 * nn * np.log(t2)
        if k:
            if t2 >= 1.0:
                break
            logw = logw + 0.5 * k * np.log1p(-t2)
        w = np.exp(logw)
        shape = (len(nn), len(nn)) + (1,) * (rho.ndim - 2)
        out[: dim - k, : dim - k] += np.outer(w, w).reshape(shape) * rho[k:, k:]
    return np.moveaxis(out, (0, 1), (mode, m + mode))


def density_matrix(rho: np.ndarray) -> np.ndarray:
    """Flatten a ``dims + dims`` tensor to a square matrix."""
    m = rho.ndim // 2
    d = int(np.prod(rho.shape[:m]))
    return rho.reshape(d, d)


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    diff = density_matrix(rho1) - density_matrix(rho2)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
