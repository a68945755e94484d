"""Named scenarios: config parsing and the runners behind ``catsim run``."""

from __future__ import annotations

import difflib
import json
import math
import re
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import coherent as co
from . import fock
from . import production as pr
from . import purification as pu
from . import qubits as qb
from .errors import CatsimError, ConfigError, ProtocolFailure
from .report import ExperimentReport

PI = math.pi

DEFAULTS: dict[str, dict] = {
    "readout": {"alphas": [1.0, 2.0], "trials": 50},
    "bell": {"alphas": [1.0, 1.5, 2.0]},
    "teleport": {"alpha": 2.0, "trials": 1000},
    "hr_resource": {"alphas": [1.0, 1.5, 2.0]},
    "gates": {"alpha": 2.0, "theta": 0.3, "trials": 4},
    "purify": {"alpha": 3.0, "fidelities": [0.55, 0.6, 0.75, 0.9], "rounds": 2, "eta": 1.0},
    "decohere_sweep": {"alphas": [0.5, 1.0, 2.0], "gamma_tau_max": 2.0, "gamma_tau_step": 0.1},
    "amplify": {
        "alphas": [0.8, 1.0, 1.5],
        "phases": [0.0, PI],
        "chain_target": 2.5,
        "chain_steps": 4,
        "source_alpha": 0.5,
        "source_efficiency": 0.6,
    },
    "fig4_scan": {"alpha_min": 0.1, "alpha_max": 2.0, "alpha_step": 0.05},
    "kerr": {"alpha": 1.5, "N_values": [2, 3, 4, 8], "alpha_i": 6.0, "x_center": 0.0, "x_halfwidth": 0.05},
    "cross_kerr": {"alpha": 3.0, "thetas": [PI, PI / 2, PI / 4]},
}

DESCRIPTIONS = {
    "readout": "beam-splitter readout of random qubits; P(FAIL) vs |A+B|^2 e^(-2 a^2)",
    "bell": "Bell-cat discrimination of the four Bell-cat inputs",
    "teleport": "Monte Carlo teleportation of random qubits through |Psi->",
    "hr_resource": "|HR> preparation from two cats on a phase splitter plus two teleporters",
    "gates": "H, R(theta) and CS on computational basis inputs with sampled outcomes",
    "purify": "purification rounds on F|Phi+> + (1-F)|Psi+> mixtures",
    "decohere_sweep": "channel fidelity F(gamma tau) of a decohered |Phi-> channel",
    "amplify": "cat amplification: success grid, chained squeezed-photon production, lossy source",
    "fig4_scan": "optimal squeezing s* and fidelity F* of S(s)|1> against odd cats",
    "kerr": "Kerr evolution vs circular decomposition, homodyne conditioning",
    "cross_kerr": "cross-Kerr cat generation and displacement symmetrization",
}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: dict
    seed: int = 0
    output_path: str | None = None

    def planned_rows(self) -> int | None:
        if self.scenario == "fig4_scan":
            return len(_frange(self.params["alpha_min"], self.params["alpha_max"], self.params["alpha_step"]))
        return None


def _frange(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigError("step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + k * step for k in range(max(n, 0))]


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(text: str, key: str) -> str:
    line = _line_of(text, key)
    return f" (line {line})" if line else ""


def _unknown(kind: str, key: str, valid, text: str) -> ConfigError:
    near = difflib.get_close_matches(key, list(valid), n=1, cutoff=0.0)
    hint = f"; did you mean {near[0]!r}?" if near else ""
    return ConfigError(f"unknown {kind} {key!r}{_where(text, key)}{hint}")


def _check_type(name: str, value, default, text: str):
    where = _where(text, name)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"parameter {name!r}{where} must be true/false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"parameter {name!r}{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"parameter {name!r}{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, complex):
        try:
            return complex(value.replace(" ", "")) if isinstance(value, str) else complex(value)
        except (TypeError, ValueError):
            raise ConfigError(f"parameter {name!r}{where} must be a complex number, got {value!r}") from None
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"parameter {name!r}{where} must be a non-empty list")
        return [_check_type(name, v, default[0], text) for v in value]
    raise ConfigError(f"parameter {name!r}{where} has unsupported type")


def parse_config(text: str) -> ScenarioConfig:
    """Parse a JSON scenario document and fill in defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config (line {exc.lineno}, column {exc.colno}): {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"scenario", "params", "seed", "output_path"}
    for key in doc:
        if key not in allowed:
            raise _unknown("key", key, allowed, text)
    name = doc.get("scenario")
    if name is None:
        raise ConfigError("config needs a 'scenario'")
    if name not in DEFAULTS:
        raise _unknown("scenario", str(name), DEFAULTS, text)
    raw = doc.get("params", {}) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"'params'{_where(text, 'params')} must be an object")
    params = dict(DEFAULTS[name])
    for key, value in raw.items():
        if key not in params:
            raise _unknown(f"parameter for {name}", key, params, text)
        params[key] = _check_type(key, value, DEFAULTS[name][key], text)
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed{_where(text, 'seed')} must be a 64-bit non-negative integer")
    out = doc.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_path must be a string")
    cfg = ScenarioConfig(name, params, seed, out)
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig):
    p = cfg.params
    positive = [k for k in ("alpha", "alpha_i", "chain_target", "source_alpha") if k in p]
    for k in positive:
        if p[k] <= 0:
            raise ConfigError(f"parameter {k!r} must be positive")
    for k in ("alphas",):
        if k in p and any(a <= 0 for a in p[k]):
            raise ConfigError(f"all {k} must be positive")
    if "trials" in p and p["trials"] < 1:
        raise ConfigError("trials must be at least 1")
    if "eta" in p and not 0 < p["eta"] <= 1:
        raise ConfigError("eta must lie in (0, 1]")
    if "source_efficiency" in p and not 0 < p["source_efficiency"] <= 1:
        raise ConfigError("source_efficiency must lie in (0, 1]")
    if "fidelities" in p and any(not 0 <= f <= 1 for f in p["fidelities"]):
        raise ConfigError("fidelities must lie in [0, 1]")
    if "N_values" in p and any(n < 2 for n in p["N_values"]):
        raise ConfigError("N values must be at least 2")
    if cfg.scenario == "fig4_scan":
        if p["alpha_min"] <= 0 or p["alpha_max"] < p["alpha_min"]:
            raise ConfigError("need 0 < alpha_min <= alpha_max")
        _frange(p["alpha_min"], p["alpha_max"], p["alpha_step"])
    if cfg.scenario == "decohere_sweep" and (p["gamma_tau_step"] <= 0 or p["gamma_tau_max"] < 0):
        raise ConfigError("need gamma_tau_step > 0 and gamma_tau_max >= 0")


def default_config(name: str, seed: int = 0) -> ScenarioConfig:
    if name not in DEFAULTS:
        raise ConfigError(f"unknown scenario {name!r}")
    return ScenarioConfig(name, dict(DEFAULTS[name]), seed)


# ---------------------------------------------------------------- runners


def _err(a, b):
    if a is None or b is None:
        return None
    return abs(a - b)


def _random_coeffs(rng, n=2):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def run_readout(cfg, rng, rep):
    for alpha in cfg.params["alphas"]:
        for trial in range(cfg.params["trials"]):
            A, B = _random_coeffs(rng)
            q = qb.encode_qubit(A, B, alpha)
            # physical coefficients of the normalized state
            n = np.sqrt(qb.physical_norm_squared(A, B, alpha))
            probs = qb.readout_probabilities(q)
            closed = abs((A + B) / n) ** 2 * math.exp(-2 * alpha**2)
            rep.add(alpha=alpha, trial=trial, p_zero=probs["ZERO"], p_one=probs["ONE"], p_both=probs["BOTH"],
                    closed_form=closed, simulated=probs["FAIL"], abs_error=_err(closed, probs["FAIL"]))


def run_bell(cfg, rng, rep):
    for alpha in cfg.params["alphas"]:
        for which in qb.BELL_LABELS:
            probs = qb.bell_outcome_probabilities(qb.make_bell_cat(which, alpha), (0, 1))
            wrong = sum(v for k, v in probs.items() if k not in (which, qb.Bell.FAIL))
            even = which in (qb.Bell.PHI_PLUS, qb.Bell.PSI_PLUS)
            closed = 2 * math.exp(-2 * alpha**2) / (1 + math.exp(-4 * alpha**2)) if even else 0.0
            rep.add(alpha=alpha, input=which.value, p_correct=probs[which], p_wrong=wrong,
                    closed_form=closed, simulated=probs[qb.Bell.FAIL], abs_error=_err(closed, probs[qb.Bell.FAIL]))


def run_teleport(cfg, rng, rep):
    alpha = cfg.params["alpha"]
    for trial in range(cfg.params["trials"]):
        A, B = _random_coeffs(rng)
        q = qb.encode_qubit(A, B, alpha)
        res, out = qb.teleport(q, rng=rng)
        if out is None:
            rep.add(trial=trial, outcome=res.which.value, photons=0, bit_flip=None, phase_flip=None,
                    closed_form=None, simulated=None, abs_error=None)
            continue
        x, z = out.frame[0]
        fid = co.fidelity(qb.apply_frame(out).state, q.state)
        rep.add(trial=trial, outcome=res.which.value, photons=res.photon_count, bit_flip=x, phase_flip=z,
                closed_form=1.0, simulated=fid, abs_error=_err(1.0, fid))


def run_hr_resource(cfg, rng, rep):
    hr_cache = {}
    for alpha in cfg.params["alphas"]:
        theta = PI / (4 * alpha**2)
        state, p = qb.prepare_hr_via_bs(alpha, theta)
        hr = hr_cache.setdefault(alpha, qb.make_hr_resource(alpha))
        fid = co.fidelity(qb.hr_local_equivalent(state, alpha), hr)
        closed = qb.hr_closed_form_success(alpha, theta)
        rep.add(alpha=alpha, theta=theta, hr_fidelity=fid, closed_form=closed, simulated=p, abs_error=_err(closed, p))


def _basis_register(bits, alpha):
    q = [qb.encode_qubit(1, 0, alpha) if b == 0 else qb.encode_qubit(0, 1, alpha) for b in bits]
    return qb.join(*q) if len(q) > 1 else q[0]


def _gate_row(rep, gate, label, trial, run, ideal):
    try:
        out = run()
    except ProtocolFailure as exc:
        rep.add(gate=gate, input=label, trial=trial, success_prob=exc.probability,
                closed_form=None, simulated=None, abs_error=None)
        return None
    fid = co.fidelity(qb.apply_frame(out).state, co.normalize(ideal))
    rep.add(gate=gate, input=label, trial=trial, success_prob=out.success_prob,
            closed_form=1.0, simulated=fid, abs_error=_err(1.0, fid))
    return out


def run_gates(cfg, rng, rep):
    """Heralded failures (no photons in a teleporter) give rows with empty fidelity."""
    a, theta, trials = cfg.params["alpha"], cfg.params["theta"], cfg.params["trials"]
    for bit in (0, 1):
        q = _basis_register([bit], a)
        for t in range(trials):
            _gate_row(rep, "H", str(bit), t, lambda: qb.gate_hadamard(q, rng=rng), qb.ideal_hadamard(q.state, 0, a))
            _gate_row(rep, "R", str(bit), t, lambda: qb.gate_phase_rotation(q, theta, rng=rng),
                      qb.ideal_rotation(q.state, 0, a, theta))
            _gate_row(rep, "HH", str(bit), t,
                      lambda: qb.gate_hadamard(qb.gate_hadamard(q, rng=rng), rng=rng), q.state)
    for bits in ((0, 0), (0, 1), (1, 0), (1, 1)):
        q = _basis_register(bits, a)
        label = "".join(map(str, bits))
        for t in range(trials):
            out = _gate_row(rep, "CS", label, t, lambda: qb.gate_control_sign(q, rng=rng),
                            qb.ideal_control_sign(q.state, (0, 1), a))
            if out is not None:
                _gate_row(rep, "CSCS", label, t, lambda: qb.gate_control_sign(out, rng=rng), q.state)


def run_purify(cfg, rng, rep):
    alpha, eta = cfg.params["alpha"], cfg.params["eta"]
    for F0 in cfg.params["fidelities"]:
        closed = F0
        for k, amp, F, p in pu.purification_sequence(F0, alpha, cfg.params["rounds"], eta):
            if k > 0:
                closed = pu.fidelity_recursion(closed)
            rep.add(F_in=F0, round=k, amplitude=amp, success_prob=p, closed_form=closed,
                    simulated=F, abs_error=_err(closed, F))


def run_decohere_sweep(cfg, rng, rep):
    grid = _frange(0.0, cfg.params["gamma_tau_max"], cfg.params["gamma_tau_step"])
    for alpha in cfg.params["alphas"]:
        channel = pu.LabelDensity.from_pure(qb.make_bell_cat(qb.Bell.PHI_MINUS, alpha))
        threshold = pu.purification_threshold(alpha)
        for gt in grid:
            F, _ = pu.dynamic_bell_decompose(pu.decohere(channel, gt), alpha, gt)
            closed = pu.channel_fidelity(alpha, gt)
            rep.add(alpha=alpha, gamma_tau=gt, distillable=F > 0.5, threshold=threshold,
                    closed_form=closed, simulated=F, abs_error=_err(closed, F))


def run_amplify(cfg, rng, rep):
    p = cfg.params
    for a in p["alphas"]:
        for b in p["alphas"]:
            for f1 in p["phases"]:
                for f2 in p["phases"]:
                    setup = pr.AmplifySetup(a, b, f1, f2)
                    out, prob = pr.amplify_cats(setup)
                    closed = pr.amplification_success(a, b, f1, f2)
                    rep.add(kind="grid", alpha=a, beta=b, phi1=f1, phi2=f2, step=1, amplitude=setup.amplitude,
                            fidelity=co.fidelity(out, pr.amplified_target(setup)),
                            closed_form=closed, simulated=prob, abs_error=_err(closed, prob))
    s, rows = pr.chained_production(p["chain_target"], p["chain_steps"])
    for k, amp, phase, fid, prob in rows:
        rep.add(kind="chain", alpha=rows[0][1], beta=rows[0][1], phi1=PI, phi2=PI, step=k, amplitude=amp,
                fidelity=fid, squeezing=s, simulated=prob)
    s0 = pr.optimal_squeezing(p["source_alpha"])[0]
    for k, amp, phase, fid, prob in pr.chained_amplification(p["source_alpha"], 1, s=s0, eta_source=p["source_efficiency"]):
        rep.add(kind="lossy_source", alpha=p["source_alpha"], beta=p["source_alpha"], phi1=PI, phi2=PI, step=k,
                amplitude=amp, fidelity=fid, squeezing=s0, simulated=prob)


def run_fig4_scan(cfg, rng, rep):
    p = cfg.params
    for alpha in _frange(p["alpha_min"], p["alpha_max"], p["alpha_step"]):
        s, F = pr.optimal_squeezing(alpha)
        vec = pr.squeezed_fock(1, s)
        sim = pr.cat_fidelity_fock(vec.amps, alpha, PI)
        rep.add(alpha=alpha, s_star=s, s_star_exact=pr.optimal_squeezing_exact(alpha), F_star=F,
                closed_form=F, simulated=sim, abs_error=_err(F, sim))


def run_kerr(cfg, rng, rep):
    p = cfg.params
    for N in p["N_values"]:
        ev = pr.kerr_fock_state(p["alpha"], N)
        dec = fock.to_fock(pr.kerr_multicomponent_state(p["alpha"], N), ev.cutoffs[0])
        fid = fock.fock_fidelity(ev, dec)
        setup = pr.KerrSetup(p["alpha_i"], N, p["x_center"], p["x_halfwidth"])
        out, dens, cat_fid = pr.kerr_homodyne_condition(setup)
        w = np.abs(pr.conditioned_kerr_weights(out, setup)) ** 2
        w = w / w.sum()
        peak = ",".join(str(i + 1) for i in np.flatnonzero(w > w.max() - 1e-9))
        rep.add(N=N, alpha=p["alpha"], alpha_i=p["alpha_i"], x=setup.x_center, density=dens,
                window_prob=pr.kerr_window_probability(setup), dominant_n=peak, cat_fidelity=cat_fid,
                closed_form=1.0, simulated=fid, abs_error=_err(1.0, fid))


def run_cross_kerr(cfg, rng, rep):
    alpha = cfg.params["alpha"]
    for theta in cfg.params["thetas"]:
        for sign in (1, -1):
            out, prob = pr.cross_kerr_cat(alpha, theta, sign)
            sym, a_prime = pr.symmetrize(out, alpha, theta)
            fid = co.fidelity(sym, pr.symmetric_target(alpha, theta, sign))
            cat = co.fidelity(out, co.make_cat(alpha, 0.0 if sign > 0 else PI)) if abs(theta - PI) < 1e-12 else None
            rep.add(theta=theta, sign=sign, prob=prob, alpha_prime=a_prime, cat_fidelity=cat,
                    closed_form=1.0, simulated=fid, abs_error=_err(1.0, fid))


COLUMNS = {
    "readout": ["alpha", "trial", "p_zero", "p_one", "p_both", "closed_form", "simulated", "abs_error"],
    "bell": ["alpha", "input", "p_correct", "p_wrong", "closed_form", "simulated", "abs_error"],
    "teleport": ["trial", "outcome", "photons", "bit_flip", "phase_flip", "closed_form", "simulated", "abs_error"],
    "hr_resource": ["alpha", "theta", "hr_fidelity", "closed_form", "simulated", "abs_error"],
    "gates": ["gate", "input", "trial", "success_prob", "closed_form", "simulated", "abs_error"],
    "purify": ["F_in", "round", "amplitude", "success_prob", "closed_form", "simulated", "abs_error"],
    "decohere_sweep": ["alpha", "gamma_tau", "distillable", "threshold", "closed_form", "simulated", "abs_error"],
    "amplify": ["kind", "alpha", "beta", "phi1", "phi2", "step", "amplitude", "fidelity", "squeezing",
                "closed_form", "simulated", "abs_error"],
    "fig4_scan": ["alpha", "s_star", "s_star_exact", "F_star", "closed_form", "simulated", "abs_error"],
    "kerr": ["N", "alpha", "alpha_i", "x", "density", "window_prob", "dominant_n", "cat_fidelity",
             "closed_form", "simulated", "abs_error"],
    "cross_kerr": ["theta", "sign", "prob", "alpha_prime", "cat_fidelity", "closed_form", "simulated", "abs_error"],
}

RUNNERS = {
    "readout": run_readout,
    "bell": run_bell,
    "teleport": run_teleport,
    "hr_resource": run_hr_resource,
    "gates": run_gates,
    "purify": run_purify,
    "decohere_sweep": run_decohere_sweep,
    "amplify": run_amplify,
    "fig4_scan": run_fig4_scan,
    "kerr": run_kerr,
    "cross_kerr": run_cross_kerr,
}


def run_scenario(cfg: ScenarioConfig) -> ExperimentReport:
    """Run one scenario; deterministic in ``(cfg, cfg.seed)``."""
    rep = ExperimentReport(cfg.scenario, dict(cfg.params), COLUMNS[cfg.scenario])
    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    try:
        RUNNERS[cfg.scenario](cfg, rng, rep)
    except (CatsimError, ProtocolFailure, ValueError) as exc:
        raise CatsimError(f"scenario {cfg.scenario}: {exc}") from exc
    rep.metadata = {"version": __version__, "seed": cfg.seed, "runtime_s": time.perf_counter() - start}
    return rep
