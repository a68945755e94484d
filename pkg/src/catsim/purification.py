"""Amplitude-damping decoherence of entangled coherent states and the
purification-with-amplification protocol.

A decohered pair is kept as a :class:`LabelDensity` (sum of
``c |ket><bra|`` over coherent labels) until it is decomposed into a rank-2
mixture of dynamic Bell-cat states.  Purification works on
:class:`PureMixture` objects, i.e. classical mixtures of pure states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import coherent as co
from . import fock
from .coherent import SuperposedState
from .errors import CatsimError, DegenerateStateError
from .qubits import Bell, ideal_hadamard, make_bell_cat


# ---------------------------------------------------------------- containers


@dataclass(frozen=True)
class LabelDensity:
    """``rho = sum_k c_k |kets_k><bras_k|`` over multimode coherent labels."""

    coeffs: np.ndarray
    kets: np.ndarray
    bras: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        k = np.asarray(self.kets, dtype=complex)
        b = np.asarray(self.bras, dtype=complex)
        if k.ndim == 1:
            k = k.reshape(len(c), -1)
        if b.ndim == 1:
            b = b.reshape(len(c), -1)
        if k.shape != b.shape or k.shape[0] != len(c):
            raise ValueError("kets/bras must have shape (K, M) matching coeffs")
        for name, arr in (("coeffs", c), ("kets", k), ("bras", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def mode_count(self) -> int:
        return self.kets.shape[1]

    def __len__(self):
        return len(self.coeffs)

    @classmethod
    def from_pure(cls, state: SuperposedState) -> "LabelDensity":
        K = len(state)
        i, j = np.meshgrid(np.arange(K), np.arange(K), indexing="ij")
        i, j = i.ravel(), j.ravel()
        return cls(state.coeffs[i] * state.coeffs[j].conj(), state.labels[i], state.labels[j])

    @classmethod
    def from_mixture(cls, mixture: "PureMixture") -> "LabelDensity":
        parts = [cls.from_pure(s) for _, s in mixture.branches]
        return cls(
            np.concatenate([w * p.coeffs for (w, _), p in zip(mixture.branches, parts)]),
            np.concatenate([p.kets for p in parts]),
            np.concatenate([p.bras for p in parts]),
        )

    def trace(self) -> complex:
        b, k = self.bras, self.kets
        ov = np.exp(np.sum(-0.5 * np.abs(b) ** 2 - 0.5 * np.abs(k) ** 2 + b.conj() * k, axis=1))
        return complex(np.sum(self.coeffs * ov))

    def normalized(self) -> "LabelDensity":
        tr = self.trace().real
        if tr <= 0:
            raise DegenerateStateError("density with non-positive trace")
        return LabelDensity(self.coeffs / tr, self.kets, self.bras)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return label_trace_distance(self, self.adjoint()) <= tol

    def adjoint(self) -> "LabelDensity":
        return LabelDensity(self.coeffs.conj(), self.bras, self.kets)

    def expectation(self, state: SuperposedState) -> complex:
        """``<psi| rho |psi>``."""
        a = state.coeffs.conj() @ _multi_overlap(state.labels, self.kets)  # <psi|ket_k>
        b = _multi_overlap(self.bras, state.labels) @ state.coeffs  # <bra_k|psi>
        return complex(np.sum(self.coeffs * a * b))

    def to_fock(self, cutoff: int) -> np.ndarray:
        """Dense ``dims + dims`` tensor in a truncated Fock basis."""
        M = self.mode_count
        vec = lambda labels: _product_vector(labels, cutoff)  # noqa: E731
        rho = np.zeros((cutoff + 1,) * (2 * M), complex)
        for c, k, b in zip(self.coeffs, self.kets, self.bras):
            rho += c * np.multiply.outer(vec(k), vec(b).conj())
        return rho


def _multi_overlap(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """``prod_m <left_i,m | right_j,m>`` for label arrays (I, M) and (J, M)."""
    return co.overlap_matrix(left, right)


def _product_vector(labels: np.ndarray, cutoff: int) -> np.ndarray:
    out = np.array(1.0 + 0j)
    for amp in labels:
        out = np.multiply.outer(out, fock.coherent_vector(amp, cutoff))
    return out


def _mode_basis(labels: np.ndarray, tol: float = 1e-12):
    """Distinct labels of one mode and their coordinates in an orthonormal basis."""
    distinct: list = []
    index = np.empty(len(labels), int)
    for n, lab in enumerate(labels):
        for i, d in enumerate(distinct):
            if abs(lab - d) <= tol:
                index[n] = i
                break
        else:
            index[n] = len(distinct)
            distinct.append(lab)
    L = np.array(distinct)[:, None]
    gram = co.overlap_matrix(L, L)
    w, v = np.linalg.eigh(gram)
    keep = w > 1e-14 * w.max()
    coords = np.diag(np.sqrt(w[keep])) @ v[:, keep].conj().T  # column k: label k
    return coords, index


def span_matrices(*rhos: LabelDensity) -> list[np.ndarray]:
    """Matrices of several densities in one shared orthonormal basis of their label span."""
    M = rhos[0].mode_count
    allk = np.concatenate([np.concatenate([r.kets, r.bras]) for r in rhos])
    per_mode = [_mode_basis(allk[:, m]) for m in range(M)]
    out, offset = [], 0
    for r in rhos:
        K = len(r)
        dim = int(np.prod([c.shape[0] for c, _ in per_mode]))
        mat = np.zeros((dim, dim), complex)
        for k in range(K):
            ket, bra = np.array(1.0 + 0j), np.array(1.0 + 0j)
            for m, (coords, index) in enumerate(per_mode):
                ket = np.kron(ket, coords[:, index[offset + k]])
                bra = np.kron(bra, coords[:, index[offset + K + k]])
            mat += r.coeffs[k] * np.outer(ket, bra.conj())
        out.append(mat)
        offset += 2 * K
    return out


def label_trace_distance(r1: LabelDensity, r2: LabelDensity) -> float:
    """Trace distance computed in the (finite) span of the coherent labels."""
    a, b = span_matrices(r1, r2)
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2))))


def hilbert_schmidt_distance(r1: LabelDensity, r2: LabelDensity) -> float:
    """``||r1 - r2||_HS`` evaluated exactly with coherent overlaps."""
    d = LabelDensity(
        np.concatenate([r1.coeffs, -r2.coeffs]),
        np.concatenate([r1.kets, r2.kets]),
        np.concatenate([r1.bras, r2.bras]),
    )
    kk = _multi_overlap(d.kets, d.kets)
    bb = _multi_overlap(d.bras, d.bras)
    val = np.einsum("k,l,kl,lk->", d.coeffs.conj(), d.coeffs, kk, bb)
    return float(np.sqrt(max(val.real, 0.0)))


@dataclass(frozen=True)
class PureMixture:
    """Classical mixture ``sum_i w_i |psi_i><psi_i|`` of normalized pure states."""

    branches: tuple

    def __post_init__(self):
        branches = tuple((float(w), co.normalize(s)) for w, s in self.branches)
        weights = np.array([w for w, _ in branches])
        if np.any(weights < -1e-15):
            raise ValueError("mixture weights must be non-negative")
        if abs(weights.sum() - 1) > 1e-12:
            raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "branches", branches)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.branches])

    def fidelity(self, target: SuperposedState) -> float:
        return float(sum(w * co.fidelity(s, target) for w, s in self.branches))


@dataclass(frozen=True)
class ChannelParams:
    gamma_tau: float

    def __post_init__(self):
        if self.gamma_tau < 0:
            raise ValueError("gamma_tau must be non-negative")

    @property
    def t(self) -> float:
        return float(np.exp(-self.gamma_tau / 2))

    def Gamma(self, alpha: float) -> float:
        return float(np.exp(-4 * (1 - self.t**2) * abs(alpha) ** 2))


# ---------------------------------------------------------------- decoherence


def decohere(rho: LabelDensity, gamma_tau: float) -> LabelDensity:
    """Zero-temperature amplitude damping of every mode for time ``gamma_tau``."""
    t = ChannelParams(gamma_tau).t
    k, b = rho.kets, rho.bras
    expo = (1 - t**2) * (k * b.conj() - (np.abs(k) ** 2 + np.abs(b) ** 2) / 2)
    return LabelDensity(rho.coeffs * np.exp(expo.sum(axis=1)), t * k, t * b)


def dynamic_bell_states(alpha: float, gamma_tau: float) -> dict:
    """Bell-cat states at the damped amplitude ``t alpha``."""
    t = ChannelParams(gamma_tau).t
    return {b: make_bell_cat(b, t * alpha) for b in (Bell.PHI_PLUS, Bell.PHI_MINUS, Bell.PSI_PLUS, Bell.PSI_MINUS)}


def channel_fidelity(alpha: float, gamma_tau: float) -> float:
    """Weight of ``|Phi~_->`` in the decohered ``|Phi_->`` channel.

    ``F = (1 + Gamma)(1 - exp(-4 t^2 a^2)) / (2 (1 - exp(-4 a^2)))``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    p = ChannelParams(gamma_tau)
    a2 = abs(alpha) ** 2
    return float((1 + p.Gamma(alpha)) * -np.expm1(-4 * p.t**2 * a2) / (2 * -np.expm1(-4 * a2)))


def dynamic_bell_decompose(rho: LabelDensity, alpha: float, gamma_tau: float, tol: float = 1e-9):
    """Write ``rho`` as ``F |Phi~_-><Phi~_-| + (1-F) |Phi~_+><Phi~_+|``.

    Returns ``(F, PureMixture)``.  Raises if the reconstruction misses by more
    than ``tol`` in trace distance.
    """
    rho = rho.normalized()
    states = dynamic_bell_states(alpha, gamma_tau)
    minus, plus = states[Bell.PHI_MINUS], states[Bell.PHI_PLUS]
    F = rho.expectation(minus).real
    mixture = PureMixture(((F, minus), (1 - F, plus))) if F < 1 - 1e-15 else PureMixture(((1.0, minus),))
    err = label_trace_distance(rho, LabelDensity.from_mixture(mixture))
    if err > tol:
        raise CatsimError(f"state is not a decohered Phi- channel (residual {err:.3g})")
    return F, mixture


def purification_threshold(alpha: float, tol: float = 1e-9) -> float:
    """Decay time where the channel fidelity drops to 1/2 (bisection)."""
    lo, hi = 0.0, 1.0
    while channel_fidelity(alpha, hi) > 0.5:
        hi *= 2
        if hi > 1e3:
            raise CatsimError("no crossing of F = 1/2 found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if channel_fidelity(alpha, mid) > 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- purification


def fidelity_recursion(F: float) -> float:
    if not 0 <= F <= 1:
        raise ValueError("F must lie in [0, 1]")
    return F**2 / (F**2 + (1 - F) ** 2)


def bilateral_hadamard(state: SuperposedState) -> SuperposedState:
    amp = float(np.max(np.abs(state.labels)))
    out = ideal_hadamard(ideal_hadamard(state, 0, amp), 1, amp)
    return co.normalize(out)


def to_distillable_form(mixture: PureMixture) -> PureMixture:
    """Apply the logical Hadamard to both halves of every branch."""
    return PureMixture(tuple((w, bilateral_hadamard(s)) for w, s in mixture.branches))


def werner_like(F: float, alpha: float, good: Bell = Bell.PHI_PLUS, bad: Bell = Bell.PSI_PLUS) -> PureMixture:
    """``F |good><good| + (1-F) |bad><bad|`` at amplitude alpha."""
    branches = [(F, make_bell_cat(good, alpha))]
    if F < 1:
        branches.append((1 - F, make_bell_cat(bad, alpha)))
    return PureMixture(tuple(branches))


def _apparatus(psi1: SuperposedState, psi2: SuperposedState, alpha: float):
    """Both parties' splitters; returns the 6-mode state ``(f, g, tA1, tA2, tB1, tB2)``."""
    # modes: a, b, a', b'
    s = co.tensor(psi1, psi2)
    s = co.apply_beam_splitter(s, (0, 2), np.pi / 2, co.REAL)  # a, a' -> f, f'
    s = co.apply_beam_splitter(s, (1, 3), np.pi / 2, co.REAL)  # b, b' -> g, g'
    aux = co.SuperposedState.coherent(np.sqrt(2) * alpha, np.sqrt(2) * alpha)
    s = co.tensor(s, aux)  # f, g, f', g', auxA, auxB
    s = co.apply_beam_splitter(s, (2, 4), np.pi / 2, co.REAL)  # f', auxA -> tA1, tA2
    s = co.apply_beam_splitter(s, (3, 5), np.pi / 2, co.REAL)  # g', auxB -> tB1, tB2
    return co.permute_modes(s, [0, 1, 2, 4, 3, 5])


def purify_pair(psi1: SuperposedState, psi2: SuperposedState, alpha: float, eta: float = 1.0):
    """Run the apparatus on one pure branch pair.

    Returns ``(conditioned (f, g) state or None, success probability)``.
    """
    try:
        return co.condition_all_click(_apparatus(psi1, psi2, alpha), [2, 3, 4, 5], eta)
    except ValueError as exc:
        raise CatsimError(f"input not of the expected form: {exc}") from None


def purify_step(pair: Sequence[PureMixture], alpha: float, eta: float = 1.0):
    """One round of purification on two copies; returns ``(PureMixture, success_prob)``.

    Branch pairs that cannot fire all four detectors get weight exactly 0.
    """
    m1, m2 = pair
    amps = {float(np.max(np.abs(s.labels))) for m in (m1, m2) for _, s in m.branches}
    if any(abs(a - alpha) > 1e-12 for a in amps):
        raise ValueError("both inputs must have amplitude alpha")
    out, total = [], 0.0
    for w1, s1 in m1.branches:
        for w2, s2 in m2.branches:
            state, p = purify_pair(s1, s2, alpha, eta)
            if state is None or p == 0:
                continue
            out.append((w1 * w2 * p, state))
            total += w1 * w2 * p
    if total <= 0:
        raise CatsimError("purification cannot succeed on this input")
    return PureMixture(tuple((w / total, s) for w, s in _merge_branches(out))), total


def _merge_branches(branches):
    """Combine branches that are the same pure state (fidelity 1)."""
    merged: list = []
    for w, s in branches:
        for i, (w0, s0) in enumerate(merged):
            if co.fidelity(s, s0) > 1 - 1e-13:
                merged[i] = (w0 + w, s0)
                break
        else:
            merged.append((w, s))
    return merged


def purification_sequence(F0: float, alpha: float, rounds: int, eta: float = 1.0):
    """Iterate :func:`purify_step` on identical copies.

    Yields ``(round, amplitude, F, success_prob)``; F is the weight of the
    ``Phi_+`` branch at the current amplitude.
    """
    mix = werner_like(F0, alpha)
    amp = alpha
    yield 0, amp, F0, 1.0
    for k in range(1, rounds + 1):
        mix, p = purify_step((mix, mix), amp, eta)
        amp = np.sqrt(2) * amp
        yield k, amp, mix.fidelity(make_bell_cat(Bell.PHI_PLUS, amp)), p


def density_to_fock(rho: LabelDensity, cutoff: int | None = None) -> np.ndarray:
    if cutoff is None:
        amp = float(max(np.max(np.abs(rho.kets)), np.max(np.abs(rho.bras))))
        cutoff = fock.choose_cutoff(amp, 0.0, 1e-14)
    return rho.to_fock(cutoff)


def min_eigenvalue(rho: LabelDensity, cutoff: int | None = None) -> float:
    mat = fock.density_matrix(density_to_fock(rho, cutoff))
    return float(np.min(np.linalg.eigvalsh((mat + mat.conj().T) / 2)))
