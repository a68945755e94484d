"""Exact algebra of finite superpositions of multimode coherent states.

A state is stored as a list of terms ``c_k |L_k>`` where each label ``L_k`` is
a vector of complex coherent amplitudes, one per mode.  Nothing here truncates
the number basis: inner products come from the closed-form overlap

    <a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)

and every Gaussian-linear operation (beam splitters, phase shifts,
displacements) maps labels to labels.  Measurements that are not Gaussian are
handled by contracting the measured mode against the appropriate kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    DegenerateStateError,
    GramInconsistencyError,
    ImpossibleOutcomeError,
    SpanError,
)

MERGE_TOL = 1e-10
REAL = "real"
PHASE = "phase"
_CONVENTION_ALIASES = {
    "real": REAL,
    "real_5050_style": REAL,
    "phase": PHASE,
    "phase_style": PHASE,
}


@dataclass(frozen=True)
class SuperposedState:
    """Pure state ``sum_k coeffs[k] |labels[k]>``; not necessarily normalized."""

    coeffs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        labels = np.array(self.labels, dtype=complex)
        if labels.ndim == 1:
            labels = labels.reshape(len(coeffs), -1) if len(coeffs) else labels.reshape(0, 0)
        if labels.ndim != 2 or labels.shape[0] != coeffs.shape[0]:
            raise ValueError(
                f"labels shape {labels.shape} does not match {coeffs.shape[0]} coefficients"
            )
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(labels))):
            raise ValueError("coefficients and amplitudes must be finite")
        coeffs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "labels", labels)

    @property
    def mode_count(self) -> int:
        return self.labels.shape[1]

    @property
    def is_empty(self) -> bool:
        return len(self.coeffs) == 0

    def __len__(self):
        return len(self.coeffs)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, Sequence[complex]]]) -> "SuperposedState":
        terms = list(terms)
        if not terms:
            raise ValueError("use SuperposedState.empty(mode_count) for an empty state")
        coeffs = [c for c, _ in terms]
        labels = [np.atleast_1d(np.asarray(lab, dtype=complex)) for _, lab in terms]
        if len({len(lab) for lab in labels}) != 1:
            raise ValueError("all labels must have the same number of modes")
        return cls(np.array(coeffs), np.array(labels))

    @classmethod
    def coherent(cls, *amps: complex) -> "SuperposedState":
        """Product coherent state ``|amps[0]> |amps[1]> ...``."""
        return cls(np.array([1.0 + 0j]), np.array([amps], dtype=complex))

    @classmethod
    def empty(cls, mode_count: int) -> "SuperposedState":
        return cls(np.zeros(0, complex), np.zeros((0, mode_count), complex))

    def scaled(self, factor: complex) -> "SuperposedState":
        return SuperposedState(self.coeffs * factor, self.labels)


@dataclass(frozen=True)
class MeasurementRecord:
    kind: str  # parity | fock | vacuum_click | homodyne_x | phase_basis | bell
    outcome: object
    probability_or_density: float

    def __post_init__(self):
        p = self.probability_or_density
        if p < -1e-12 or (self.kind != "homodyne_x" and p > 1 + 1e-9):
            raise ValueError(f"invalid probability {p} for {self.kind} record")


# ---------------------------------------------------------------- overlaps


def coherent_overlap(a: complex, b: complex) -> complex:
    """Single-mode overlap ``<a|b>``."""
    a = complex(a)
    b = complex(b)
    return complex(np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + a.conjugate() * b))


def overlap_matrix(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Matrix of multimode overlaps ``<left_i|right_j>`` (product over modes)."""
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    expo = (
        -0.5 * np.sum(np.abs(left) ** 2, axis=1)[:, None]
        - 0.5 * np.sum(np.abs(right) ** 2, axis=1)[None, :]
        + left.conj() @ right.T
    )
    return np.exp(expo)


def inner(s1: SuperposedState, s2: SuperposedState) -> complex:
    """``<s1|s2>`` without normalization."""
    if s1.mode_count != s2.mode_count:
        raise ValueError(f"mode counts differ: {s1.mode_count} vs {s2.mode_count}")
    if s1.is_empty or s2.is_empty:
        return 0j
    return complex(s1.coeffs.conj() @ overlap_matrix(s1.labels, s2.labels) @ s2.coeffs)


def norm_squared(state: SuperposedState) -> float:
    if state.is_empty:
        return 0.0
    value = inner(state, state)
    scale = float(np.sum(np.abs(state.coeffs))) ** 2
    if abs(value.imag) > 1e-12 * max(scale, 1.0) + 1e-12 * abs(value.real):
        raise GramInconsistencyError(f"squared norm has imaginary part {value.imag:g}")
    if value.real < -1e-9 * max(scale, 1.0):
        raise GramInconsistencyError(f"squared norm is negative: {value.real:g}")
    return max(value.real, 0.0)


def norm(state: SuperposedState) -> float:
    """Gram-matrix norm of a non-empty state."""
    if state.is_empty:
        raise DegenerateStateError("norm of an empty state")
    return float(np.sqrt(norm_squared(state)))


def _is_degenerate(state: SuperposedState, n2: float | None = None) -> bool:
    if state.is_empty:
        return True
    if n2 is None:
        n2 = norm_squared(state)
    scale = float(np.sum(np.abs(state.coeffs))) ** 2
    return n2 <= 1e-20 * scale or n2 == 0.0


def normalize(state: SuperposedState, what: str = "state") -> SuperposedState:
    n2 = norm_squared(state)
    if _is_degenerate(state, n2):
        raise DegenerateStateError(f"degenerate {what}: zero norm")
    return state.scaled(1.0 / np.sqrt(n2))


def fidelity(s1: SuperposedState, s2: SuperposedState) -> float:
    """``|<s1|s2>|^2 / (||s1||^2 ||s2||^2)``."""
    n1 = norm_squared(s1)
    n2 = norm_squared(s2)
    if _is_degenerate(s1, n1) or _is_degenerate(s2, n2):
        raise DegenerateStateError("fidelity with a zero-norm state")
    return abs(inner(s1, s2)) ** 2 / (n1 * n2)


# ---------------------------------------------------------------- bookkeeping


def prune(state: SuperposedState, tol: float = MERGE_TOL) -> SuperposedState:
    """Merge labels closer than ``tol`` and drop terms with negligible weight.

    Terms are dropped when ``|c| <= tol * max|c|``; an exact cancellation
    leaves an empty state (``is_empty`` is True).
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    merged = _merge(state, tol)
    if merged.is_empty:
        return merged
    mags = np.abs(merged.coeffs)
    keep = mags > tol * mags.max() if mags.max() > 0 else np.zeros(len(mags), bool)
    return SuperposedState(merged.coeffs[keep], merged.labels[keep])


def _merge(state: SuperposedState, tol: float) -> SuperposedState:
    k = len(state)
    if k == 0:
        return state
    labels = state.labels
    if state.mode_count == 0:
        total = state.coeffs.sum()
        if total == 0:
            return SuperposedState.empty(0)
        return SuperposedState(np.array([total]), np.zeros((1, 0), complex))
    dist = np.max(np.abs(labels[:, None, :] - labels[None, :, :]), axis=2)
    group = -np.ones(k, dtype=int)
    reps = []
    for i in range(k):
        if group[i] >= 0:
            continue
        members = np.flatnonzero((dist[i] <= tol) & (group < 0))
        group[members] = len(reps)
        reps.append(i)
    coeffs = np.zeros(len(reps), complex)
    np.add.at(coeffs, group, state.coeffs)
    keep = coeffs != 0
    return SuperposedState(coeffs[keep], labels[reps][keep])


def compact(state: SuperposedState) -> SuperposedState:
    """Merge duplicate labels and drop exact zeros (lossless housekeeping)."""
    return _merge(state, MERGE_TOL)


def tensor(*states: SuperposedState) -> SuperposedState:
    """Product state; the modes of the arguments are concatenated in order."""
    out = states[0]
    for nxt in states[1:]:
        coeffs = np.outer(out.coeffs, nxt.coeffs).reshape(-1)
        left = np.repeat(out.labels, len(nxt), axis=0)
        right = np.tile(nxt.labels, (len(out), 1))
        out = SuperposedState(coeffs, np.concatenate([left, right], axis=1))
    return out


def permute_modes(state: SuperposedState, order: Sequence[int]) -> SuperposedState:
    """Return the state whose mode ``i`` is the input's mode ``order[i]``."""
    order = list(order)
    if sorted(order) != list(range(state.mode_count)):
        raise ValueError(f"{order} is not a permutation of {state.mode_count} modes")
    return SuperposedState(state.coeffs, state.labels[:, order])


def insert_mode(state: SuperposedState, position: int, amp: complex = 0.0) -> SuperposedState:
    """Insert an unentangled mode in coherent state ``|amp>`` at ``position``."""
    col = np.full((len(state), 1), amp, dtype=complex)
    labels = np.concatenate([state.labels[:, :position], col, state.labels[:, position:]], axis=1)
    return SuperposedState(state.coeffs, labels)


def _check_mode(state: SuperposedState, mode: int):
    if not 0 <= mode < state.mode_count:
        raise IndexError(f"mode {mode} out of range for {state.mode_count}-mode state")


# ---------------------------------------------------------------- states


def make_cat(alpha: complex, rel_phase: float = 0.0) -> SuperposedState:
    """Normalized ``|alpha> + e^{i rel_phase} |-alpha>``."""
    raw = SuperposedState(np.array([1.0, np.exp(1j * rel_phase)]), np.array([[alpha], [-alpha]]))
    return normalize(compact(raw), "cat")


# ---------------------------------------------------------------- Gaussian unitaries


def beam_splitter_matrix(theta: float, convention: str = REAL) -> np.ndarray:
    """2x2 map applied to the amplitude pair of the two modes."""
    conv = _CONVENTION_ALIASES.get(convention)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if conv == REAL:
        return np.array([[c, s], [-s, c]], dtype=complex)
    if conv == PHASE:
        return np.array([[c, 1j * s], [1j * s, c]], dtype=complex)
    raise ValueError(f"unknown beam-splitter convention {convention!r}")


def apply_mode_transform(state: SuperposedState, modes: Sequence[int], matrix: np.ndarray) -> SuperposedState:
    """Apply a linear (passive) map to the amplitudes of ``modes``."""
    modes = list(modes)
    for m in modes:
        _check_mode(state, m)
    if len(set(modes)) != len(modes):
        raise ValueError("beam-splitter modes must be distinct")
    labels = state.labels.copy()
    labels[:, modes] = labels[:, modes] @ np.asarray(matrix).T
    return compact(SuperposedState(state.coeffs, labels))


def apply_beam_splitter(
    state: SuperposedState, modes: Sequence[int], theta: float, convention: str = REAL
) -> SuperposedState:
    """Two-mode beam splitter.

    ``real``: ``(g, b) -> (cos(theta/2) g + sin(theta/2) b, cos(theta/2) b - sin(theta/2) g)``,
    so ``theta = pi/2`` is the 50:50 splitter ``((g+b)/sqrt2, (b-g)/sqrt2)``.
    ``phase``: ``(g, b) -> (cos(theta/2) g + i sin(theta/2) b, cos(theta/2) b + i sin(theta/2) g)``.
    """
    return apply_mode_transform(state, modes, beam_splitter_matrix(theta, convention))


def apply_phase_shift(state: SuperposedState, mode: int, phi: float) -> SuperposedState:
    _check_mode(state, mode)
    labels = state.labels.copy()
    labels[:, mode] *= np.exp(1j * phi)
    return compact(SuperposedState(state.coeffs, labels))


def apply_displacement(state: SuperposedState, mode: int, delta: complex) -> SuperposedState:
    _check_mode(state, mode)
    a = state.labels[:, mode]
    phase = np.exp(0.5 * (delta * a.conj() - np.conj(delta) * a))
    labels = state.labels.copy()
    labels[:, mode] = a + delta
    return compact(SuperposedState(state.coeffs * phase, labels))


# ---------------------------------------------------------------- measurements


def contract_mode(state: SuperposedState, mode: int, kernel: Callable[[np.ndarray], np.ndarray]) -> SuperposedState:
    """Contract ``mode`` against a bra; ``kernel(amps)`` returns ``<phi|amp>``.

    The result is unnormalized and has one mode fewer.
    """
    _check_mode(state, mode)
    weights = np.asarray(kernel(state.labels[:, mode]), dtype=complex)
    labels = np.delete(state.labels, mode, axis=1)
    return compact(SuperposedState(state.coeffs * weights, labels))


def superposition_kernel(bra: SuperposedState) -> Callable[[np.ndarray], np.ndarray]:
    """Kernel for contracting a mode against a single-mode superposed state."""
    if bra.mode_count != 1:
        raise ValueError("kernel state must be single-mode")

    def kernel(amps):
        return bra.coeffs.conj() @ overlap_matrix(bra.labels, np.asarray(amps).reshape(-1, 1))

    return kernel


def fock_kernel(n: int) -> Callable[[np.ndarray], np.ndarray]:
    """``<n|a> = exp(-|a|^2/2) a^n / sqrt(n!)``."""
    if n < 0:
        raise ValueError("photon number must be non-negative")

    def kernel(amps):
        amps = np.asarray(amps, dtype=complex)
        out = np.zeros(amps.shape, complex)
        nz = amps != 0
        if n == 0:
            out[~nz] = 1.0
        a = amps[nz]
        out[nz] = np.exp(-0.5 * np.abs(a) ** 2 + n * np.log(a) - 0.5 * gammaln(n + 1))
        return out

    return kernel


def homodyne_kernel(x: float) -> Callable[[np.ndarray], np.ndarray]:
    """``<x|b>`` for the quadrature ``X = (a + a^dag)/sqrt2``."""

    def kernel(amps):
        b = np.asarray(amps, dtype=complex)
        return np.pi ** -0.25 * np.exp(
            -0.5 * x**2 + np.sqrt(2) * b * x - 0.5 * b**2 - 0.5 * np.abs(b) ** 2
        )

    return kernel


def _conditioned(state: SuperposedState, post: SuperposedState, what: str):
    n_in = norm_squared(state)
    n_out = norm_squared(post)
    if _is_degenerate(state, n_in):
        raise DegenerateStateError("measurement on a zero-norm state")
    prob = n_out / n_in
    if post.is_empty or prob <= 1e-300 or _is_degenerate(post, n_out):
        raise ImpossibleOutcomeError(f"impossible outcome: {what}")
    return post.scaled(1.0 / np.sqrt(n_out)), prob


def parity_projector_apply(state: SuperposedState, mode: int, parity: str) -> SuperposedState:
    """Unnormalized ``Pi_even`` / ``Pi_odd`` on ``mode``: ``|a> -> (|a> +- |-a>)/2``."""
    _check_mode(state, mode)
    sign = {"even": 1.0, "odd": -1.0}.get(parity)
    if sign is None:
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    flipped = state.labels.copy()
    flipped[:, mode] *= -1
    coeffs = np.concatenate([state.coeffs / 2, sign * state.coeffs / 2])
    return compact(SuperposedState(coeffs, np.concatenate([state.labels, flipped])))


def project_parity(state: SuperposedState, mode: int, parity: str):
    """Condition on the photon-number parity of ``mode``; returns ``(state, prob)``."""
    post = parity_projector_apply(state, mode, parity)
    return _conditioned(state, post, f"{parity} parity on mode {mode}")


def project_fock(state: SuperposedState, mode: int, n: int):
    """Condition on ``n`` photons in ``mode``; the mode is removed. Returns ``(state, prob)``."""
    post = contract_mode(state, mode, fock_kernel(n))
    return _conditioned(state, post, f"{n} photons on mode {mode}")


def click_projector_apply(state: SuperposedState, mode: int) -> SuperposedState:
    """Unnormalized ``(I - |0><0|)`` on ``mode`` (mode is kept)."""
    _check_mode(state, mode)
    vac = state.labels.copy()
    vac[:, mode] = 0
    weights = np.exp(-0.5 * np.abs(state.labels[:, mode]) ** 2)
    coeffs = np.concatenate([state.coeffs, -state.coeffs * weights])
    return compact(SuperposedState(coeffs, np.concatenate([state.labels, vac])))


def vacuum_probability(state: SuperposedState, mode: int) -> float:
    post = contract_mode(state, mode, fock_kernel(0))
    return norm_squared(post) / norm_squared(state)


def choose_outcome(probs: dict, outcome=None, rng: np.random.Generator | None = None):
    """Pick an outcome: the requested one, a sample from ``rng``, or the most likely."""
    if outcome is not None:
        if outcome not in probs:
            raise ValueError(f"unknown outcome {outcome!r}; expected one of {list(probs)}")
        return outcome
    keys = list(probs)
    p = np.clip(np.array([probs[k] for k in keys], dtype=float), 0, None)
    if rng is not None:
        return keys[int(rng.choice(len(keys), p=p / p.sum()))]
    return keys[int(np.argmax(p))]


def project_click(state: SuperposedState, mode: int, outcome: str | None = None, rng=None):
    """On/off detection of ``mode``. Returns ``(outcome, state, prob)``.

    The mode is kept: a ``no_click`` leaves it in vacuum, a ``click`` applies
    ``I - |0><0|``.
    """
    p_none = vacuum_probability(state, mode)
    probs = {"no_click": p_none, "click": 1.0 - p_none}
    chosen = choose_outcome(probs, outcome, rng)
    if chosen == "no_click":
        reduced = contract_mode(state, mode, fock_kernel(0))
        post = insert_mode(reduced, mode, 0.0)
    else:
        post = click_projector_apply(state, mode)
    post, prob = _conditioned(state, post, f"{chosen} on mode {mode}")
    return chosen, post, prob


VACUUM_TOL = 1e-9


def condition_all_click(state: SuperposedState, modes: Sequence[int], eta: float = 1.0):
    """Condition on every detector in ``modes`` clicking; the modes are traced out.

    Labels with a (round-off) vacuum amplitude at any detector can never fire
    it and drop out exactly.  The surviving labels must agree on every
    detector amplitude, so the detectors factor out, the conditioned state
    stays pure and ``eta`` only enters the probability.  Returns
    ``(state | None, prob)``.
    """
    if not 0 < eta <= 1:
        raise ValueError("detector efficiency must lie in (0, 1]")
    state = compact(state)
    modes = list(modes)
    det = state.labels[:, modes]
    scale = max(1.0, float(np.max(np.abs(state.labels)))) if len(state) else 1.0
    alive = np.all(np.abs(det) > VACUUM_TOL * scale, axis=1)
    rest = [m for m in range(state.mode_count) if m not in modes]
    if not np.any(alive):
        return None, 0.0
    kept = det[alive]
    if np.max(np.abs(kept - kept[0])) > 1e-9 * scale:
        raise ValueError("surviving detector amplitudes differ; conditioned state would be mixed")
    out = compact(SuperposedState(state.coeffs[alive], state.labels[alive][:, rest]))
    if out.is_empty or _is_degenerate(out):
        return None, 0.0
    p_click = float(np.prod(-np.expm1(-eta * np.abs(kept[0]) ** 2)))
    return normalize(out), norm_squared(out) / norm_squared(state) * p_click


def project_homodyne_x(state: SuperposedState, mode: int, x: float):
    """Condition on quadrature value ``x``; returns ``(state, density)``."""
    post = contract_mode(state, mode, homodyne_kernel(x))
    n_in = norm_squared(state)
    n_out = norm_squared(post)
    density = n_out / n_in
    if _is_degenerate(post, n_out):
        raise ImpossibleOutcomeError(f"zero homodyne density at x={x}")
    return post.scaled(1.0 / np.sqrt(n_out)), density


# ---------------------------------------------------------------- logical maps


def qubit_indices(state: SuperposedState, mode: int, amp: complex, tol: float = 1e-9) -> np.ndarray:
    """0 for labels ``+amp`` and 1 for ``-amp`` on ``mode``; raises outside that span."""
    _check_mode(state, mode)
    a = state.labels[:, mode]
    plus = np.abs(a - amp) <= tol * max(1.0, abs(amp))
    minus = np.abs(a + amp) <= tol * max(1.0, abs(amp))
    if not np.all(plus | minus):
        bad = a[~(plus | minus)][0]
        raise SpanError(f"mode {mode} label {bad:.6g} is not +-{amp:.6g}")
    return np.where(plus, 0, 1)


def apply_logical_map(state: SuperposedState, mode: int, amp: complex, matrix: np.ndarray) -> SuperposedState:
    """Linear map defined on the non-orthogonal basis ``{|amp>, |-amp>}`` of one mode.

    ``matrix[i, j]`` is the coefficient of basis label ``i`` in the image of
    basis label ``j`` (0 is ``+amp``, 1 is ``-amp``).
    """
    matrix = np.asarray(matrix, dtype=complex)
    idx = qubit_indices(state, mode, amp)
    coeffs, labels = [], []
    for out_i, sign in ((0, 1.0), (1, -1.0)):
        lab = state.labels.copy()
        lab[:, mode] = sign * amp
        coeffs.append(state.coeffs * matrix[out_i, idx])
        labels.append(lab)
    return compact(SuperposedState(np.concatenate(coeffs), np.concatenate(labels)))


def logical_z(state: SuperposedState, mode: int, amp: complex) -> SuperposedState:
    """Sign flip of the ``-amp`` branch of ``mode``."""
    idx = qubit_indices(state, mode, amp)
    return SuperposedState(state.coeffs * np.where(idx == 1, -1.0, 1.0), state.labels)


def logical_x(state: SuperposedState, mode: int) -> SuperposedState:
    """Bit flip, physically the phase shift ``P(pi)``."""
    return apply_phase_shift(state, mode, np.pi)


def logical_amplitudes(state: SuperposedState, amps: Sequence[complex]) -> np.ndarray:
    """Coefficient tensor over the computational labels ``(+-amps[0], +-amps[1], ...)``.

    Every mode must lie in its ``{|a>, |-a>}`` span; the returned array has
    shape ``(2,) * mode_count``.
    """
    out = np.zeros((2,) * state.mode_count, complex)
    idx = np.stack([qubit_indices(state, m, a) for m, a in enumerate(amps)], axis=1)
    for row, c in zip(idx, state.coeffs):
        out[tuple(row)] += c
    return out


def from_logical(amplitudes: np.ndarray, amps: Sequence[complex]) -> SuperposedState:
    """Inverse of :func:`logical_amplitudes` (unnormalized)."""
    amplitudes = np.asarray(amplitudes, dtype=complex)
    amps = np.asarray(amps, dtype=complex)
    coeffs, labels = [], []
    for index in np.ndindex(amplitudes.shape):
        if amplitudes[index] == 0:
            continue
        coeffs.append(amplitudes[index])
        labels.append(amps * np.where(np.array(index) == 0, 1.0, -1.0))
    if not coeffs:
        return SuperposedState.empty(len(amps))
    return SuperposedState(np.array(coeffs), np.array(labels))
