"""Coherent-state qubits: encoding, readout, Bell-cat measurement, teleportation
and the gate set {H, R(theta), CS} built from teleportation.

Logical basis: ``|0_L> = |alpha>``, ``|1_L> = |-alpha>``.  A register of n
qubits is one :class:`SuperposedState` with n modes.  Every teleportation
based step leaves a Pauli correction that depends only on the measurement
outcome; it is tracked in a :class:`PauliFrame` with the convention

    physical state = X^x Z^z (ideal state)      (per qubit, up to global phase)

Bit flips are corrected actively with ``P(pi)``; phase flips are left pending
and pushed through later gates (H turns them into bit flips).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import coherent as co
from .coherent import SuperposedState
from .errors import (
    DegenerateStateError,
    ImpossibleOutcomeError,
    NonBellInputError,
    ProtocolFailure,
    SpanError,
)
from .fock import choose_cutoff


class Bell(str, enum.Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"
    FAIL = "Fail"


BELL_LABELS = (Bell.PHI_PLUS, Bell.PHI_MINUS, Bell.PSI_PLUS, Bell.PSI_MINUS)
BOTH = "both"  # photons at both Bell detectors; impossible inside the Bell-cat span


@dataclass(frozen=True)
class BellOutcome:
    which: Bell
    photon_count: int = 0
    mode: str = ""  # "f", "g", or "" for Fail
    probability: float = 0.0

    def __post_init__(self):
        if (self.which == Bell.FAIL) != (self.photon_count == 0):
            raise ValueError("Fail iff no photons were counted")


@dataclass(frozen=True)
class PauliFrame:
    bit_flip: tuple[bool, ...]
    phase_flip: tuple[bool, ...]

    @classmethod
    def identity(cls, n: int) -> "PauliFrame":
        return cls((False,) * n, (False,) * n)

    def __len__(self):
        return len(self.bit_flip)

    @property
    def is_identity(self) -> bool:
        return not any(self.bit_flip) and not any(self.phase_flip)

    def flip(self, qubit: int, x: bool = False, z: bool = False) -> "PauliFrame":
        """Compose with ``X^x Z^z`` on ``qubit`` (modulo global phase)."""
        bits, phases = list(self.bit_flip), list(self.phase_flip)
        bits[qubit] ^= bool(x)
        phases[qubit] ^= bool(z)
        return PauliFrame(tuple(bits), tuple(phases))

    def set(self, qubit: int, x: bool, z: bool) -> "PauliFrame":
        bits, phases = list(self.bit_flip), list(self.phase_flip)
        bits[qubit], phases[qubit] = bool(x), bool(z)
        return PauliFrame(tuple(bits), tuple(phases))

    def compose(self, other: "PauliFrame") -> "PauliFrame":
        return PauliFrame(
            tuple(a ^ b for a, b in zip(self.bit_flip, other.bit_flip)),
            tuple(a ^ b for a, b in zip(self.phase_flip, other.phase_flip)),
        )

    def __getitem__(self, qubit) -> tuple[bool, bool]:
        return self.bit_flip[qubit], self.phase_flip[qubit]


@dataclass(frozen=True)
class LogicalQubit:
    """A register of coherent-state qubits (one mode per qubit).

    ``success_prob`` accumulates the probability of the heralded (non-Fail)
    branch that produced this state; ``records`` lists every measurement.
    """

    state: SuperposedState
    alpha: float
    frame: PauliFrame
    success_prob: float = 1.0
    records: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.frame) != self.state.mode_count:
            raise ValueError("frame size must equal the number of qubit modes")
        for m in range(self.state.mode_count):
            co.qubit_indices(self.state, m, self.alpha)

    @property
    def n_qubits(self) -> int:
        return self.state.mode_count

    def logical(self) -> np.ndarray:
        """Coefficients on the (non-orthogonal) computational labels."""
        return co.logical_amplitudes(self.state, [self.alpha] * self.n_qubits)


# ---------------------------------------------------------------- encoding / readout


def encode_qubit(A: complex, B: complex, alpha: float) -> LogicalQubit:
    """Normalized ``A|alpha> + B|-alpha>``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if A == 0 and B == 0:
        raise DegenerateStateError("degenerate qubit: A = B = 0")
    raw = co.compact(SuperposedState(np.array([A, B]), np.array([[alpha], [-alpha]])))
    return LogicalQubit(co.normalize(raw, "qubit"), alpha, PauliFrame.identity(1))


def join(*qubits: LogicalQubit) -> LogicalQubit:
    alphas = {q.alpha for q in qubits}
    if len(alphas) != 1:
        raise ValueError("registers must share alpha")
    frame = PauliFrame(
        sum((q.frame.bit_flip for q in qubits), ()), sum((q.frame.phase_flip for q in qubits), ())
    )
    return LogicalQubit(
        co.tensor(*(q.state for q in qubits)),
        qubits[0].alpha,
        frame,
        float(np.prod([q.success_prob for q in qubits])),
    )


def physical_norm_squared(A: complex, B: complex, alpha: float) -> float:
    """``||A|alpha> + B|-alpha>||^2`` including the ``<alpha|-alpha>`` overlap."""
    s = np.exp(-2 * alpha**2)
    return float(abs(A) ** 2 + abs(B) ** 2 + 2 * s * (np.conj(A) * B).real)


def readout_probabilities(q: LogicalQubit, qubit: int = 0) -> dict:
    """Exact click-pattern probabilities of the beam-splitter readout."""
    work = co.insert_mode(q.state, qubit + 1, q.alpha)
    work = co.apply_beam_splitter(work, (qubit, qubit + 1), np.pi / 2, co.REAL)
    n0 = co.norm_squared(work)
    a, b = qubit, qubit + 1
    p = {}
    for ca in (False, True):
        for cb in (False, True):
            s = work
            # clicks are (I - P0); use inclusion-exclusion through vacuum contractions
            p[(ca, cb)] = _click_pattern_prob(s, (a, b), (ca, cb)) / n0
    return {
        "ZERO": p[(True, False)],
        "ONE": p[(False, True)],
        "FAIL": p[(False, False)],
        "BOTH": p[(True, True)],
    }


def _click_pattern_prob(state: SuperposedState, modes: Sequence[int], pattern: Sequence[bool]) -> float:
    """Unnormalized weight of a click/no-click pattern on several modes."""
    vec = state
    for offset, (m, click) in enumerate(sorted(zip(modes, pattern), reverse=True)):
        if click:
            vec = co.click_projector_apply(vec, m)
        else:
            vec = co.insert_mode(co.contract_mode(vec, m, co.fock_kernel(0)), m, 0.0)
    return co.norm_squared(vec)


def readout_bs(q: LogicalQubit, qubit: int = 0, rng=None):
    """Unambiguous computational-basis readout; returns ``(outcome, prob)``.

    Without ``rng`` the most likely outcome is reported.
    """
    probs = readout_probabilities(q, qubit)
    if probs["BOTH"] > 1e-12:
        raise SpanError("readout input is outside the qubit span")
    probs = {k: v for k, v in probs.items() if k != "BOTH"}
    outcome = co.choose_outcome(probs, None, rng)
    return outcome, probs[outcome]


# ---------------------------------------------------------------- Bell-cat states


def make_bell_cat(which: Bell | str, alpha: complex, alpha2: complex | None = None) -> SuperposedState:
    """Normalized Bell-cat state; ``alpha2`` allows the asymmetric variant."""
    which = Bell(which)
    b = alpha if alpha2 is None else alpha2
    sign = 1.0 if which in (Bell.PHI_PLUS, Bell.PSI_PLUS) else -1.0
    if which in (Bell.PHI_PLUS, Bell.PHI_MINUS):
        labels = [[alpha, b], [-alpha, -b]]
    elif which in (Bell.PSI_PLUS, Bell.PSI_MINUS):
        labels = [[alpha, -b], [-alpha, b]]
    else:
        raise ValueError("Fail is not a Bell state")
    return co.normalize(SuperposedState(np.array([1.0, sign]), np.array(labels)), f"{which.value} state")


def bell_outcome_probabilities(state: SuperposedState, modes: Sequence[int]) -> dict:
    """Exact probabilities of the Bell-cat measurement outcomes on ``modes``.

    The two modes are mixed on a real 50:50 splitter (outputs f, g) and each
    output is photon counted.  Keys are the Bell labels, ``Bell.FAIL`` and
    ``"both"``.
    """
    f, g = modes
    mixed = co.apply_beam_splitter(state, (f, g), np.pi / 2, co.REAL)
    total = co.norm_squared(mixed)
    probs = {}
    for counted, empty, even_label, odd_label in ((f, g, Bell.PHI_PLUS, Bell.PHI_MINUS), (g, f, Bell.PSI_PLUS, Bell.PSI_MINUS)):
        # keep indices valid after removing the empty mode
        u = co.contract_mode(mixed, empty, co.fock_kernel(0))
        c = counted if counted < empty else counted - 1
        vac = co.norm_squared(co.contract_mode(u, c, co.fock_kernel(0))) if not u.is_empty else 0.0
        even = co.norm_squared(co.parity_projector_apply(u, c, "even")) if not u.is_empty else 0.0
        odd = co.norm_squared(co.parity_projector_apply(u, c, "odd")) if not u.is_empty else 0.0
        probs[even_label] = max(even - vac, 0.0) / total
        probs[odd_label] = odd / total
    both_vac = co.contract_mode(co.contract_mode(mixed, max(f, g), co.fock_kernel(0)), min(f, g), co.fock_kernel(0))
    probs[Bell.FAIL] = co.norm_squared(both_vac) / total
    probs[BOTH] = max(1.0 - sum(probs.values()), 0.0)
    return probs


def _photon_distribution(state: SuperposedState, mode: int, parity: int, rng) -> int:
    """Sample a photon count of the given parity (>= 1) for ``mode``."""
    amp = float(np.max(np.abs(state.labels[:, mode]))) if len(state) else 0.0
    n_max = choose_cutoff(amp, 0.0, 1e-14)
    ns = [n for n in range(1, n_max + 1) if n % 2 == parity]
    weights = np.array([co.norm_squared(co.contract_mode(state, mode, co.fock_kernel(n))) for n in ns])
    return int(ns[int(rng.choice(len(ns), p=weights / weights.sum()))])


def bell_measure(
    state: SuperposedState,
    modes: Sequence[int],
    outcome: Bell | str | None = None,
    photon_count: int | None = None,
    rng: np.random.Generator | None = None,
):
    """Bell-cat measurement; returns ``(BellOutcome, post_state, prob)``.

    ``prob`` is the probability of the outcome label.  The post state is
    conditioned on a definite photon count: ``photon_count`` if given, else a
    sample from ``rng``, else the smallest count compatible with the label.
    Both measured modes are removed; the remaining modes keep their order.
    """
    probs = bell_outcome_probabilities(state, modes)
    if outcome is None and rng is None:
        candidates = {k: v for k, v in probs.items() if k != BOTH}
        chosen = co.choose_outcome(candidates)
    else:
        wanted = None if outcome is None else (BOTH if outcome == BOTH else Bell(outcome))
        chosen = co.choose_outcome(probs, wanted, rng)
    if chosen == BOTH:
        raise NonBellInputError("non-Bell input: photons at both detectors")
    chosen = Bell(chosen)
    prob = probs[chosen]
    if prob <= 1e-300:
        raise ImpossibleOutcomeError(f"impossible outcome: {chosen.value}")
    f, g = modes
    mixed = co.apply_beam_splitter(state, (f, g), np.pi / 2, co.REAL)
    if chosen == Bell.FAIL:
        post = co.contract_mode(co.contract_mode(mixed, max(f, g), co.fock_kernel(0)), min(f, g), co.fock_kernel(0))
        return BellOutcome(Bell.FAIL, 0, "", prob), co.normalize(post), prob
    counted, empty, name = (f, g, "f") if chosen in (Bell.PHI_PLUS, Bell.PHI_MINUS) else (g, f, "g")
    parity = 0 if chosen in (Bell.PHI_PLUS, Bell.PSI_PLUS) else 1
    u = co.contract_mode(mixed, empty, co.fock_kernel(0))
    c = counted if counted < empty else counted - 1
    if photon_count is None:
        photon_count = _photon_distribution(u, c, parity, rng) if rng is not None else (2 if parity == 0 else 1)
    if photon_count < 1 or photon_count % 2 != parity:
        raise ValueError(f"photon count {photon_count} incompatible with {chosen.value}")
    post = co.contract_mode(u, c, co.fock_kernel(photon_count))
    if post.is_empty:
        raise ImpossibleOutcomeError(f"impossible outcome: {photon_count} photons")
    return BellOutcome(chosen, photon_count, name, prob), co.normalize(post), prob


# ---------------------------------------------------------------- frames

# Corrections (x, z) after each Bell outcome, derived by `derive_frame_table`
# and frozen here.  Checked against a fresh derivation in the test suite.
TELEPORT_FRAMES = {
    Bell.PHI_PLUS: (True, True),
    Bell.PHI_MINUS: (True, False),
    Bell.PSI_PLUS: (False, True),
    Bell.PSI_MINUS: (False, False),
}
# Bell measurement against one half of |HR>; frame relative to H|input>.
HADAMARD_FRAMES = {
    Bell.PHI_PLUS: (False, False),
    Bell.PHI_MINUS: (True, False),
    Bell.PSI_PLUS: (False, True),
    Bell.PSI_MINUS: (True, True),
}
# Teleportation through the asymmetric channel |a>|A> + |-a>|-A>.
RESTORE_FRAMES = {
    Bell.PHI_PLUS: (False, False),
    Bell.PHI_MINUS: (False, True),
    Bell.PSI_PLUS: (True, False),
    Bell.PSI_MINUS: (True, True),
}
# Fusion step of the CS gate: phase flips on (control, target).
CS_FUSION_FRAMES = {
    Bell.PHI_PLUS: (False, False),
    Bell.PHI_MINUS: (False, True),
    Bell.PSI_PLUS: (True, False),
    Bell.PSI_MINUS: (True, True),
}


def apply_pauli(state: SuperposedState, mode: int, amp: float, x: bool, z: bool) -> SuperposedState:
    if z:
        state = co.logical_z(state, mode, amp)
    if x:
        state = co.logical_x(state, mode)
    return state


def apply_frame(q: LogicalQubit) -> LogicalQubit:
    """Apply every pending correction and clear the frame."""
    state = q.state
    for m in range(q.n_qubits):
        x, z = q.frame[m]
        state = apply_pauli(state, m, q.alpha, x, z)
    return replace(q, state=state, frame=PauliFrame.identity(q.n_qubits))


def correct_bit_flips(q: LogicalQubit) -> LogicalQubit:
    state, frame = q.state, q.frame
    for m in range(q.n_qubits):
        if frame.bit_flip[m]:
            state = co.logical_x(state, m)
            frame = frame.flip(m, x=True)
    return replace(q, state=state, frame=frame)


def commute_frame(frame: PauliFrame, gate: str, qubits: Sequence[int] = (0,)) -> PauliFrame:
    """Push a pending frame through an ideal gate: ``G P = P' G``.

    ``H`` swaps bit and phase flips; ``R`` leaves the frame unchanged (a
    pending bit flip instead negates the rotation angle, see
    :func:`rotation_angle_for_frame`); ``CS`` maps ``X_c -> X_c Z_t`` and
    ``X_t -> X_t Z_c``.
    """
    gate = gate.upper()
    if gate == "H":
        (q,) = qubits[:1]
        x, z = frame[q]
        return frame.set(q, z, x)
    if gate in ("R", "R(THETA)"):
        return frame
    if gate == "CS":
        c, t = qubits
        xc, zc = frame[c]
        xt, zt = frame[t]
        return frame.set(c, xc, zc ^ xt).set(t, xt, zt ^ xc)
    raise ValueError(f"unknown gate {gate!r}")


def rotation_angle_for_frame(frame: PauliFrame, qubit: int, theta: float) -> float:
    """``R(theta) X = X R(-theta)``: the angle to apply when a bit flip is pending."""
    return -theta if frame.bit_flip[qubit] else theta


# ---------------------------------------------------------------- workspace helper


class _Work:
    """Named-mode scratch space for multi-step protocols."""

    def __init__(self, state: SuperposedState, names: Sequence[str]):
        self.state = state
        self.names = list(names)
        self.success = 1.0
        self.records: list = []

    def idx(self, name):
        return self.names.index(name)

    def add(self, state: SuperposedState, names: Sequence[str]):
        self.state = co.tensor(self.state, state)
        self.names.extend(names)

    def split(self, name: str, new: str, theta: float = np.pi / 2):
        """Insert vacuum ``new`` in front of ``name`` and mix: ``(0, g) -> (s g, c g)``."""
        i = self.idx(name)
        self.state = co.insert_mode(self.state, i, 0.0)
        self.names.insert(i, new)
        self.state = co.apply_beam_splitter(self.state, (i, i + 1), theta, co.REAL)

    def bell(self, m1, m2, outcome=None, rng=None, what="Bell measurement"):
        i, j = self.idx(m1), self.idx(m2)
        res, post, prob = bell_measure(self.state, (i, j), outcome=outcome, rng=rng)
        self.records.append(co.MeasurementRecord("bell", res.which.value, prob))
        if res.which == Bell.FAIL:
            raise ProtocolFailure(f"{what} failed (no photons)", prob)
        self.success *= 1.0 - bell_outcome_probabilities(self.state, (i, j))[Bell.FAIL]
        self.state = post
        for name in sorted((m1, m2), key=self.names.index, reverse=True):
            self.names.remove(name)
        return res

    def rename(self, old, new):
        self.names[self.idx(old)] = new

    def ordered(self, names):
        return co.permute_modes(self.state, [self.idx(n) for n in names])


# ---------------------------------------------------------------- teleportation


def teleport(
    q: LogicalQubit,
    qubit: int = 0,
    outcome: Bell | str | None = None,
    rng: np.random.Generator | None = None,
    photon_count: int | None = None,
    channel_alpha: float | None = None,
):
    """Teleport one qubit through ``|Psi_->``; returns ``(BellOutcome, LogicalQubit | None)``.

    On ``Fail`` the output is None; ``BellOutcome.probability`` carries the
    outcome probability either way.  The frame update depends only on the
    Bell label.
    """
    a = q.alpha if channel_alpha is None else channel_alpha
    if abs(a - q.alpha) > 1e-12:
        raise ValueError("input alpha must match the channel alpha")
    names = [f"q{m}" for m in range(q.n_qubits)]
    state = co.tensor(q.state, make_bell_cat(Bell.PSI_MINUS, a))
    names += ["b", "c"]
    i, j = names.index(f"q{qubit}"), names.index("b")
    res, post, prob = bell_measure(state, (i, j), outcome=outcome, rng=rng, photon_count=photon_count)
    if res.which == Bell.FAIL:
        return res, None
    p_ok = 1.0 - bell_outcome_probabilities(state, (i, j))[Bell.FAIL]
    rest = [n for n in names if n not in (f"q{qubit}", "b")]
    rest[rest.index("c")] = f"q{qubit}"
    post = co.permute_modes(post, [rest.index(n) for n in names if n not in ("b", "c")])
    x, z = TELEPORT_FRAMES[res.which]
    rec = co.MeasurementRecord("bell", res.which.value, prob)
    return res, LogicalQubit(
        post, q.alpha, q.frame.flip(qubit, x, z), q.success_prob * p_ok, q.records + (rec,)
    )


def correct_phase_flip_physically(q: LogicalQubit, qubit: int = 0, rng=None, max_attempts: int = 20):
    """Close a pending phase flip by re-teleporting until the frame's z bit clears.

    Bit flips are fixed with ``P(pi)`` along the way.  Returns the corrected
    register and the number of teleportations used.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    q = correct_bit_flips(q)
    attempts = 0
    while q.frame.phase_flip[qubit]:
        if attempts >= max_attempts:
            raise ProtocolFailure(f"phase flip still pending after {max_attempts} teleportations")
        res, out = teleport(q, qubit, rng=rng)
        attempts += 1
        if out is None:
            raise ProtocolFailure("teleporter failed during phase-flip correction", res.probability)
        q = correct_bit_flips(out)
    return q, attempts


# ---------------------------------------------------------------- resources


def make_hr_resource(alpha: float) -> SuperposedState:
    """Normalized ``|a,a> + |a,-a> + |-a,a> - |-a,-a>``."""
    labels = [[alpha, alpha], [alpha, -alpha], [-alpha, alpha], [-alpha, -alpha]]
    return co.normalize(SuperposedState(np.array([1, 1, 1, -1.0]), np.array(labels)))


def make_asymmetric_channel(alpha: float) -> SuperposedState:
    """``|alpha> |alpha/sqrt2> + |-alpha> |-alpha/sqrt2>`` from an even cat on a 1/3 : 2/3 splitter.

    Mode 0 carries amplitude alpha (the output side), mode 1 carries
    ``alpha/sqrt2`` (the side that is Bell measured).
    """
    cat = make_cat_state(np.sqrt(1.5) * alpha)
    two = co.insert_mode(cat, 0, 0.0)
    theta = 2 * np.arccos(np.sqrt(1 / 3))  # cos^2(theta/2) = 1/3
    return co.apply_beam_splitter(two, (0, 1), theta, co.REAL)


def make_cat_state(alpha: float, phase: float = 0.0) -> SuperposedState:
    return co.make_cat(alpha, phase)


# ---------------------------------------------------------------- phase-basis measurement


def phase_basis(alpha_eff: float, eps: float) -> list[SuperposedState]:
    """Loewdin-orthonormalized ``{|a> + e^{i eps}|-a>, |a> - e^{i eps}|-a>}``."""
    us = [
        SuperposedState(np.array([1.0, sgn * np.exp(1j * eps)]), np.array([[alpha_eff], [-alpha_eff]]))
        for sgn in (1.0, -1.0)
    ]
    gram = np.array([[co.inner(u, v) for v in us] for u in us])
    w, v = np.linalg.eigh(gram)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
    out = []
    for j in range(2):
        coeffs = sum(inv_sqrt[i, j] * us[i].coeffs for i in range(2))
        out.append(SuperposedState(coeffs, us[0].labels))
    return out


def measure_phase_basis(
    state: SuperposedState,
    mode: int,
    alpha_eff: float,
    eps: float,
    outcome: str | None = None,
    rng: np.random.Generator | None = None,
):
    """Projective measurement of ``mode`` in the phase-superposition basis.

    Returns ``(sign, post, prob)`` with ``sign`` in ``{"+", "-"}``; the
    measured mode is removed.
    """
    co.qubit_indices(state, mode, alpha_eff)
    basis = phase_basis(alpha_eff, eps)
    total = co.norm_squared(state)
    posts = {}
    probs = {}
    for sign, w in zip("+-", basis):
        post = co.contract_mode(state, mode, co.superposition_kernel(w))
        posts[sign] = post
        probs[sign] = co.norm_squared(post) / total if not post.is_empty else 0.0
    if abs(sum(probs.values()) - 1) > 1e-9:
        raise SpanError("state leaves the measured span")
    sign = co.choose_outcome(probs, outcome, rng)
    if probs[sign] <= 1e-300:
        raise ImpossibleOutcomeError(f"impossible phase-basis outcome {sign}")
    return sign, co.normalize(posts[sign]), probs[sign]


# ---------------------------------------------------------------- ideal gates


def ideal_hadamard(state: SuperposedState, mode: int, alpha: float) -> SuperposedState:
    return co.apply_logical_map(state, mode, alpha, [[1, 1], [1, -1]])


def ideal_rotation(state: SuperposedState, mode: int, alpha: float, theta: float) -> SuperposedState:
    return co.apply_logical_map(state, mode, alpha, np.diag([np.exp(1j * theta), np.exp(-1j * theta)]))


def ideal_control_sign(state: SuperposedState, modes: Sequence[int], alpha: float) -> SuperposedState:
    i = co.qubit_indices(state, modes[0], alpha)
    j = co.qubit_indices(state, modes[1], alpha)
    return SuperposedState(state.coeffs * np.where((i == 1) & (j == 1), -1.0, 1.0), state.labels)


# ---------------------------------------------------------------- gates


def _restore(work: _Work, name: str, alpha: float, outcome=None, rng=None) -> tuple[bool, bool]:
    """Teleport mode ``name`` (amplitude alpha/sqrt2) onto a fresh mode of amplitude alpha."""
    work.add(make_asymmetric_channel(alpha), [f"{name}.out", f"{name}.in"])
    res = work.bell(name, f"{name}.in", outcome=outcome, rng=rng, what="amplitude restoration")
    work.rename(f"{name}.out", name)
    return RESTORE_FRAMES[res.which]


def _finish(q: LogicalQubit, work: _Work, frame: PauliFrame, fix_bits: bool) -> LogicalQubit:
    names = [f"q{m}" for m in range(q.n_qubits)]
    out = LogicalQubit(
        co.normalize(work.ordered(names)),
        q.alpha,
        frame,
        q.success_prob * work.success,
        q.records + tuple(work.records),
    )
    return correct_bit_flips(out) if fix_bits else out


def gate_hadamard(
    q: LogicalQubit, qubit: int = 0, outcome=None, rng=None, fix_bits: bool = True
) -> LogicalQubit:
    """Hadamard by Bell-measuring the qubit against one half of ``|HR>``."""
    frame = commute_frame(q.frame, "H", (qubit,))
    names = [f"q{m}" for m in range(q.n_qubits)]
    work = _Work(q.state, names)
    work.add(make_hr_resource(q.alpha), ["hr.x", "hr.y"])
    res = work.bell(f"q{qubit}", "hr.x", outcome=outcome, rng=rng, what="Hadamard teleporter")
    work.rename("hr.y", f"q{qubit}")
    frame = frame.flip(qubit, *HADAMARD_FRAMES[res.which])
    return _finish(q, work, frame, fix_bits)


# Sign of the phase-basis angle relative to the rotation angle.  With
# eps = +2 theta the surviving mode carries R(theta); eps = -2 theta gives
# R(-theta) for the bra/ket convention used here.
PHASE_EPS_SIGN = +1.0


def gate_phase_rotation(
    q: LogicalQubit,
    theta: float,
    qubit: int = 0,
    outcomes: dict | None = None,
    rng=None,
    fix_bits: bool = True,
) -> LogicalQubit:
    """``R(theta)``: split, phase-basis measurement, amplitude restoration.

    ``outcomes`` may fix ``{"phase": "+"|"-", "restore": Bell label}``.
    """
    outcomes = outcomes or {}
    alpha = q.alpha
    a = alpha / np.sqrt(2)
    angle = rotation_angle_for_frame(q.frame, qubit, theta)
    frame = commute_frame(q.frame, "R", (qubit,))
    name = f"q{qubit}"
    work = _Work(q.state, [f"q{m}" for m in range(q.n_qubits)])
    work.split(name, "split")
    sign, post, prob = measure_phase_basis(
        work.state, work.idx("split"), a, PHASE_EPS_SIGN * 2 * angle, outcomes.get("phase"), rng
    )
    work.records.append(co.MeasurementRecord("phase_basis", sign, prob))
    work.state = post
    work.names.remove("split")
    if sign == "-":
        frame = frame.flip(qubit, z=True)
    x, z = _restore(work, name, alpha, outcomes.get("restore"), rng)
    frame = frame.flip(qubit, x, z)
    return _finish(q, work, frame, fix_bits)


def gate_control_sign(
    q: LogicalQubit,
    control: int = 0,
    target: int = 1,
    outcomes: dict | None = None,
    rng=None,
    fix_bits: bool = True,
) -> LogicalQubit:
    """Control-sign on two qubits of a register.

    Both qubits are split on 50:50 splitters, one half of the control is
    Hadamard-teleported and Bell-measured with one half of the target, and
    the two remaining halves are restored to amplitude alpha.  ``outcomes``
    may fix ``"hadamard"``, ``"fusion"``, ``"restore_control"`` and
    ``"restore_target"``.
    """
    outcomes = outcomes or {}
    alpha = q.alpha
    a = alpha / np.sqrt(2)
    frame = commute_frame(q.frame, "CS", (control, target))
    c, t = f"q{control}", f"q{target}"
    work = _Work(q.state, [f"q{m}" for m in range(q.n_qubits)])
    # control -> (c, c.h), target -> (t.f, t)
    work.split(c, "c.h")
    i = work.idx(c)
    work.state = co.permute_modes(work.state, _swap(len(work.names), i - 1, i))
    work.names[i - 1], work.names[i] = work.names[i], work.names[i - 1]
    work.split(t, "t.f")
    # Hadamard on c.h through |HR> at amplitude alpha/sqrt2; fix its frame at once
    work.add(make_hr_resource(a), ["hr.x", "hr.y"])
    res = work.bell("c.h", "hr.x", outcome=outcomes.get("hadamard"), rng=rng, what="Hadamard teleporter")
    work.rename("hr.y", "c.h")
    hx, hz = HADAMARD_FRAMES[res.which]
    work.state = apply_pauli(work.state, work.idx("c.h"), a, hx, hz)
    res = work.bell("c.h", "t.f", outcome=outcomes.get("fusion"), rng=rng, what="CS fusion")
    zc, zt = CS_FUSION_FRAMES[res.which]
    frame = frame.flip(control, z=zc).flip(target, z=zt)
    x, z = _restore(work, c, alpha, outcomes.get("restore_control"), rng)
    frame = frame.flip(control, x, z)
    x, z = _restore(work, t, alpha, outcomes.get("restore_target"), rng)
    frame = frame.flip(target, x, z)
    return _finish(q, work, frame, fix_bits)


def control_sign(q1: LogicalQubit, q2: LogicalQubit, outcomes: dict | None = None, rng=None) -> LogicalQubit:
    """CS on two single-qubit registers; the entangled result is one two-qubit register."""
    if abs(q1.alpha - q2.alpha) > 1e-12:
        raise ValueError("CS needs equal alphas")
    return gate_control_sign(join(q1, q2), 0, 1, outcomes, rng)


def _swap(n, i, j):
    order = list(range(n))
    order[i], order[j] = order[j], order[i]
    return order


# ---------------------------------------------------------------- frame derivation


PAULIS = ((False, False), (True, False), (False, True), (True, True))


def identify_pauli(actual: SuperposedState, ideal: SuperposedState, alpha: float, mode: int = 0, tol: float = 1e-8):
    """Every ``(x, z)`` with ``X^x Z^z ideal ~ actual``."""
    return frozenset(
        (x, z) for x, z in PAULIS if co.fidelity(apply_pauli(ideal, mode, alpha, x, z), actual) > 1 - tol
    )


def probe_states(alpha: float) -> list[SuperposedState]:
    return [
        encode_qubit(A, B, alpha).state
        for A, B in ((1, 0), (0, 1), (1, 1), (1, 1j), (0.6, -0.8j))
    ]


def derive_frame_table(kind: str, alpha: float = 1.5) -> dict:
    """Re-derive an outcome -> (x, z) table by running the protocol on probe states.

    ``kind`` is ``"teleport"``, ``"hadamard"``, ``"restore"`` or ``"fusion"``.
    """
    table = {}
    for label in BELL_LABELS:
        fits = []
        for probe in probe_states(alpha):
            if kind == "teleport":
                state = co.tensor(probe, make_bell_cat(Bell.PSI_MINUS, alpha))
                _, post, _ = bell_measure(state, (0, 1), outcome=label)
                ideal = probe
            elif kind == "hadamard":
                state = co.tensor(probe, make_hr_resource(alpha))
                _, post, _ = bell_measure(state, (0, 1), outcome=label)
                ideal = ideal_hadamard(probe, 0, alpha)
            elif kind == "restore":
                a = alpha / np.sqrt(2)
                small = SuperposedState(probe.coeffs, probe.labels / np.sqrt(2))
                state = co.tensor(small, make_asymmetric_channel(alpha))
                _, post, _ = bell_measure(state, (0, 2), outcome=label)
                ideal = probe
            elif kind == "fusion":
                return _derive_fusion(alpha)
            else:
                raise ValueError(kind)
            fits.append(identify_pauli(post, ideal, alpha))
        common = frozenset.intersection(*fits)
        if len(common) != 1:
            raise AssertionError(f"{kind}/{label.value}: no unique frame, candidates {sorted(common)}")
        table[label] = next(iter(common))
    return table


def _derive_fusion(alpha: float) -> dict:
    a = alpha / np.sqrt(2)
    rng = np.random.default_rng(7)
    table = {}
    for label in BELL_LABELS:
        fits = set()
        for _ in range(3):
            v = rng.normal(size=4) + 1j * rng.normal(size=4)
            two = co.normalize(co.from_logical(v.reshape(2, 2), [a, a]))
            # split both qubits: modes (c, c.h, t.f, t)
            state = co.permute_modes(
                co.from_logical(_split_logical(v.reshape(2, 2)), [a] * 4), [0, 1, 2, 3]
            )
            state = ideal_hadamard(state, 1, a)
            _, post, _ = bell_measure(state, (1, 2), outcome=label)
            ideal = ideal_control_sign(two, (0, 1), a)
            found = None
            for xc, zc in PAULIS:
                for xt, zt in PAULIS:
                    cand = apply_pauli(apply_pauli(ideal, 0, a, xc, zc), 1, a, xt, zt)
                    if co.fidelity(cand, post) > 1 - 1e-8:
                        found = (zc, zt) if not (xc or xt) else ("x", xc, xt)
            fits.add(found)
        if len(fits) != 1 or None in fits:
            raise AssertionError(f"fusion/{label.value}: inconsistent frames {fits}")
        table[label] = fits.pop()
    return table


def _split_logical(v: np.ndarray) -> np.ndarray:
    """Logical amplitudes after splitting each qubit into two perfectly correlated halves."""
    out = np.zeros((2, 2, 2, 2), complex)
    for i in range(2):
        for j in range(2):
            out[i, i, j, j] = v[i, j]
    return out


# ---------------------------------------------------------------- |HR> preparation


def projective_bell_basis(alpha: float) -> dict:
    """Loewdin-orthonormalized Bell-cat basis (ideal projective Bell measurement)."""
    states = [make_bell_cat(b, alpha) for b in BELL_LABELS]
    gram = np.array([[co.inner(u, v) for v in states] for u in states])
    w, v = np.linalg.eigh(gram)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
    basis = {}
    for j, b in enumerate(BELL_LABELS):
        coeffs = np.concatenate([inv_sqrt[i, j] * s.coeffs for i, s in enumerate(states)])
        labels = np.concatenate([s.labels for s in states])
        basis[b] = co.compact(SuperposedState(coeffs, labels))
    return basis


def _contract_two(state: SuperposedState, modes: Sequence[int], bra: SuperposedState) -> SuperposedState:
    """Contract two modes against a two-mode superposed bra (modes removed)."""
    i, j = modes
    rest = [m for m in range(state.mode_count) if m not in (i, j)]
    ov = co.overlap_matrix(bra.labels, state.labels[:, [i, j]])  # (Kb, Ks)
    weights = bra.coeffs.conj() @ ov
    return co.compact(SuperposedState(state.coeffs * weights, state.labels[:, rest]))


def projective_teleport_probabilities(state: SuperposedState, mode: int, alpha: float) -> tuple[dict, dict]:
    """Ideal Bell-cat projection of ``mode`` with one half of a fresh ``|Psi_->`` channel.

    Returns ``(probabilities, unnormalized post states)``; the channel's
    output half takes the place of ``mode``.
    """
    full = co.tensor(state, make_bell_cat(Bell.PSI_MINUS, alpha))
    n = state.mode_count
    total = co.norm_squared(full)
    probs, posts = {}, {}
    for label, bra in projective_bell_basis(alpha).items():
        post = _contract_two(full, (mode, n), bra)
        order = list(range(post.mode_count))
        # the channel output is the last mode; move it into `mode`'s slot
        order = order[:mode] + [post.mode_count - 1] + order[mode:-1]
        post = co.permute_modes(post, order)
        posts[label] = post
        probs[label] = co.norm_squared(post) / total
    return probs, posts


def prepare_hr_via_bs(
    alpha: float,
    theta: float | None = None,
    outcomes: Sequence[Bell | str] | None = None,
    rng=None,
):
    """Two even cats on the ``exp[i theta/2 (a b^dag + a^dag b)]`` splitter, both outputs teleported.

    The teleporters are modeled as ideal projective Bell-cat measurements, and
    their Pauli corrections are applied.  Returns ``(state, success_prob)``
    where ``state`` is the raw two-mode output and ``success_prob`` the
    probability that neither teleporter leaves the Bell-cat span.
    """
    if theta is None:
        theta = np.pi / (4 * alpha**2)
    cats = co.tensor(co.make_cat(alpha), co.make_cat(alpha))
    mixed = co.apply_beam_splitter(cats, (0, 1), theta, co.PHASE)
    state = mixed
    success = 1.0
    for mode in (0, 1):
        probs, posts = projective_teleport_probabilities(state, mode, alpha)
        p_ok = sum(probs.values())
        if outcomes is not None:
            label = Bell(outcomes[mode])
        elif rng is not None:
            label = co.choose_outcome({k: v / p_ok for k, v in probs.items()}, None, rng)
        else:
            label = max(probs, key=probs.get)
        success *= p_ok
        post = co.normalize(posts[label])
        x, z = TELEPORT_FRAMES[label]
        state = apply_pauli(post, mode, alpha, x, z)
    return state, success


def hr_local_equivalent(state: SuperposedState, alpha: float) -> SuperposedState:
    """Apply the fixed local rotation ``diag(1, i)`` to both modes.

    For the splitter angle with ``2 alpha^2 sin(theta/2) = pi/4`` this maps
    the teleported output exactly onto ``|HR>`` (up to global phase).
    """
    out = state
    for m in (0, 1):
        out = co.apply_logical_map(out, m, alpha, np.diag([1.0, 1j]))
    return out


def hr_closed_form_success(alpha: float, theta: float) -> float:
    """Small-angle success probability ``exp(-theta^2 alpha^2 / 2)``."""
    return float(np.exp(-(theta**2) * alpha**2 / 2))
