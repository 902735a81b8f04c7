"""Monte Carlo campaigns: readout calibration, QT-gate scaling, calibrated synthesis, cross-talk.

Each trial draws everything it needs from ``stream(seed, trial, purpose, ...)``
so a campaign's output depends only on its configuration, never on the order
in which a worker pool happens to schedule trials.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import partial

import numpy as np

from . import calib, noise, qmath, sim, tomo
from .errors import InvalidArgument
from .noise import ReadoutErrors, stream
from .sim import EXACT

EXPERIMENTS = ("readout-calib", "fig2b", "fig3", "crosstalk")
DEFAULT_SHOTS = {
    "readout-calib": (100_000,),
    "fig2b": (100, 1_000, 10_000, 100_000),
    "fig3": (1_000, 10_000, 100_000),
    "crosstalk": (EXACT,),
}
DEFAULT_OPTIONS = {"beta": 0.05, "gamma": 0.0, "estimate_readout": True}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "fig2b"
    seed: int = 0
    trials: int = 100
    shots: tuple = ()
    epsilon: float = 0.01
    readout: ReadoutErrors = ReadoutErrors(0.01, 0.03)
    model_options: dict = field(default_factory=dict)
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidArgument(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if int(self.trials) < 1:
            raise InvalidArgument("trials must be >= 1")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise InvalidArgument("epsilon must be >= 0")
        if self.seed < 0 or self.seed >= 2**64:
            raise InvalidArgument("seed must be an unsigned 64-bit integer")
        shots = tuple(parse_shots(self.shots)) if self.shots else DEFAULT_SHOTS[self.experiment]
        unknown = set(self.model_options) - set(DEFAULT_OPTIONS)
        if unknown:
            raise InvalidArgument(f"unknown model option(s): {', '.join(sorted(unknown))}")
        ro = self.readout if isinstance(self.readout, ReadoutErrors) else ReadoutErrors.from_dict(self.readout)
        object.__setattr__(self, "shots", shots)
        object.__setattr__(self, "readout", ro)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "model_options", {**DEFAULT_OPTIONS, **self.model_options})

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidArgument(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "trials": self.trials,
            "shots": [shots_label(n) for n in self.shots],
            "epsilon": self.epsilon,
            "readout": self.readout.to_dict(),
            "model_options": self.model_options,
            "out": self.out,
        }

    def option(self, name):
        return self.model_options[name]


def parse_shots(value):
    """Accept ``"exact"``, an int, a comma-separated string or a list of these."""
    if isinstance(value, str):
        items = [v.strip() for v in value.split(",") if v.strip()]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    out = []
    for v in items:
        if v in ("exact", "inf") or (isinstance(v, float) and math.isinf(v)):
            out.append(EXACT)
            continue
        try:
            n = int(v)
        except (TypeError, ValueError):
            raise InvalidArgument(f"shots must be positive integers or 'exact', got {v!r}") from None
        if n < 1 or n != float(v):
            raise InvalidArgument(f"shots must be >= 1, got {v!r}")
        out.append(n)
    if not out:
        raise InvalidArgument("empty shots list")
    return out


def shots_label(n) -> str | int:
    return "exact" if n == EXACT else int(n)


def _map(fn, items, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(i) for i in items]


def random_target(rng) -> np.ndarray:
    """Haar-random single-qubit unitary (uniform unit quaternion)."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([[w - 1j * z, -1j * x - y], [-1j * x + y, w + 1j * z]])


def nines(infid: float) -> float:
    """``-log10(1 - F)`` given the infidelity, floored at double resolution."""
    return -math.log10(max(infid, 1e-16))


# ----------------------------------------------------------------------------
# readout calibration


def run_readout_calib(cfg: ExperimentConfig) -> dict:
    ctx = sim.NoiseContext(cfg.readout)
    runs = []
    for i, n in enumerate(cfg.shots):
        est = tomo.calibrate_readout(ctx, n, (cfg.seed, 0, noise.STREAM_READOUT, i))
        runs.append(
            {
                "shots": shots_label(n),
                "e10": est.e10,
                "e01": est.e01,
                "stderr": list(est.stderr),
                "ci3sigma": [[est.e10 - 3 * est.stderr[0], est.e10 + 3 * est.stderr[0]],
                             [est.e01 - 3 * est.stderr[1], est.e01 + 3 * est.stderr[1]]],
            }
        )
    return {"experiment": "readout-calib", "seed": cfg.seed, "truth": cfg.readout.to_dict(), "runs": runs}


def check_readout_calib(report: dict) -> list[str]:
    fails = []
    t = report["truth"]
    for r in report["runs"]:
        (lo10, hi10), (lo01, hi01) = r["ci3sigma"]
        if not (lo10 <= t["e10"] <= hi10 and lo01 <= t["e01"] <= hi01):
            fails.append(f"truth outside the 3-sigma interval at shots={r['shots']}")
    return fails


# ----------------------------------------------------------------------------
# QT-gate scaling (infidelity of the reconstructed sqrt(X) versus shots)


def _estimate_readout(cfg, ctx, n, trial, ni, qubit=0):
    if not cfg.option("estimate_readout"):
        return ctx.readout[qubit]
    return tomo.calibrate_readout(ctx, n, (cfg.seed, trial, noise.STREAM_READOUT, ni, qubit), qubit).errors


def fig2b_trial(cfg: ExperimentConfig, job) -> float:
    ni, trial = job
    n = cfg.shots[ni]
    truth = noise.random_qt_gate_params(cfg.epsilon, (cfg.seed, trial, noise.STREAM_QT_GATES))
    ctx = sim.NoiseContext(cfg.readout, None, truth)
    ro = _estimate_readout(cfg, ctx, n, trial, ni)
    data = sim.run_protocol(tomo.qt_gate_circuits(), ctx, n, (cfg.seed, trial, noise.STREAM_PROCESS, ni))
    est = tomo.estimate_qt_gates(data, ro, n_bootstrap=0)
    p = est.params
    return qmath.infidelity(qmath.u_rotation((p.a, 0.0, p.b)), qmath.u_rotation((truth.a, 0.0, truth.b)))


def run_fig2b(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(ni, t) for ni in range(len(cfg.shots)) for t in range(cfg.trials)]
    infid = np.array(_map(partial(fig2b_trial, cfg), jobs, cfg.workers)).reshape(len(cfg.shots), cfg.trials)
    rows = []
    for n, vals in zip(cfg.shots, infid):
        q25, med, q75 = np.quantile(vals, [0.25, 0.5, 0.75])
        rows.append({"N": shots_label(n), "median": med, "q25": q25, "q75": q75})
    return rows


def loglog_slope(rows) -> float:
    pts = [(math.log10(r["N"]), math.log10(r["median"])) for r in rows if r["N"] != "exact" and r["median"] > 0]
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def check_fig2b(rows) -> list[str]:
    fails = []
    finite = [r for r in rows if r["N"] != "exact"]
    meds = [r["median"] for r in finite]
    if any(b >= a for a, b in zip(meds, meds[1:])):
        fails.append(f"median infidelity not strictly decreasing in N: {meds}")
    if len(finite) >= 2:
        s = loglog_slope(finite)
        if not -1.15 <= s <= -0.85:
            fails.append(f"log-log slope {s:.3f} outside [-1.15, -0.85]")
    for r in rows:
        if r["N"] == "exact" and r["q75"] > 1e-10:
            fails.append("exact-mode infidelity above 1e-10")
    return fails


# ----------------------------------------------------------------------------
# calibrated two-gate synthesis


def reconstruct_single_qubit_model(cfg, truth_model, truth_qt, n, trial, ni) -> noise.LinearGateModel:
    """Full noise-aware pipeline: readout -> QT gates -> process MLE of 4 gates -> linear fit."""
    ctx = sim.NoiseContext(cfg.readout, truth_model, truth_qt)
    ro = _estimate_readout(cfg, ctx, n, trial, ni)
    qt_data = sim.run_protocol(tomo.qt_gate_circuits(), ctx, n, (cfg.seed, trial, noise.STREAM_QT_GATES, ni))
    qt = tomo.estimate_qt_gates(qt_data, ro, n_bootstrap=0).params
    entries = []
    for g, (phi, delta) in enumerate(calib.CALIBRATION_GATES):
        circuits = tomo.standard_protocol_circuits(sim.pulse(phi, delta))
        data = sim.run_protocol(circuits, ctx, n, (cfg.seed, trial, noise.STREAM_PROCESS, ni, g))
        est = tomo.process_tomography_mle(data, ro, qt)
        entries.append(((phi, delta), est.params))
    return calib.fit_linear_model(calib.CalibrationSet(tuple(entries)))


def fig3_trial(cfg: ExperimentConfig, job) -> dict:
    ni, trial = job
    n = cfg.shots[ni]
    truth_model = noise.random_perturbed_model(cfg.epsilon, (cfg.seed, trial, noise.STREAM_MODEL))
    truth_qt = noise.random_qt_gate_params(cfg.epsilon, (cfg.seed, trial, noise.STREAM_QT_GATES))
    target = random_target(stream(cfg.seed, trial, noise.STREAM_TARGET))
    fitted = reconstruct_single_qubit_model(cfg, truth_model, truth_qt, n, trial, ni)
    plan_rec = calib.decompose_two_gate(target, fitted)
    plan_std = calib.decompose_two_gate(target, noise.ideal_model())
    i_rec = qmath.infidelity(calib.predicted_sequence_unitary(plan_rec, truth_model), target)
    i_std = qmath.infidelity(calib.predicted_sequence_unitary(plan_std, truth_model), target)
    return {
        "N": shots_label(n),
        "trial": trial,
        "F_reconstructed": 1.0 - i_rec,
        "F_standard": 1.0 - i_std,
        "nines_reconstructed": nines(i_rec),
        "nines_standard": nines(i_std),
    }


def run_fig3(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(ni, t) for ni in range(len(cfg.shots)) for t in range(cfg.trials)]
    return _map(partial(fig3_trial, cfg), jobs, cfg.workers)


def summarize(rows, columns) -> list[dict]:
    out = []
    for n in dict.fromkeys(r["N"] for r in rows):
        sel = [r for r in rows if r["N"] == n]
        s = {"N": n}
        for c in columns:
            q25, med, q75 = np.quantile([r[c] for r in sel], [0.25, 0.5, 0.75])
            s.update({f"median_{c}": med, f"q25_{c}": q25, f"q75_{c}": q75})
        out.append(s)
    return out


def check_fig3(rows) -> list[str]:
    fails = []
    for s in summarize(rows, ["nines_reconstructed", "nines_standard", "F_reconstructed", "F_standard"]):
        n = s["N"]
        if n == "exact":
            worst = min(r["F_reconstructed"] for r in rows if r["N"] == n)
            if worst < 1 - 1e-8:
                fails.append(f"exact mode: F_reconstructed {worst!r} < 1 - 1e-8")
            continue
        if n == 10_000 and s["median_nines_reconstructed"] < 3.5:
            fails.append(f"N=1e4: median nines {s['median_nines_reconstructed']:.3f} < 3.5")
        if not s["median_F_reconstructed"] > s["median_F_standard"]:
            fails.append(f"N={n}: reconstructed median fidelity does not exceed standard")
    return fails


# ----------------------------------------------------------------------------
# cross-talk


def crosstalk_truth(cfg, trial):
    beta, gamma = cfg.option("beta"), cfg.option("gamma")
    cts = tuple(
        noise.random_crosstalk_model(cfg.epsilon, (cfg.seed, trial, noise.STREAM_MODEL, q), beta, gamma)
        for q in (0, 1)
    )
    qts = tuple(noise.random_qt_gate_params(cfg.epsilon, (cfg.seed, trial, noise.STREAM_QT_GATES, q)) for q in (0, 1))
    return cts, qts


def reconstruct_crosstalk_models(cfg, cts, qts, n, trial, ni) -> tuple[noise.CrossTalkModel, noise.CrossTalkModel]:
    """Per-qubit readout and QT-gate models first, then target and neighbor fits for each addressed qubit."""
    ctx = sim.NoiseContext((cfg.readout, cfg.readout), cts, qts)
    ros, qt_est = [], []
    for q in (0, 1):
        ros.append(_estimate_readout(cfg, ctx, n, trial, ni, q))
        qt_data = sim.run_protocol(
            tomo.qt_gate_circuits(q, 2), ctx, n, (cfg.seed, trial, noise.STREAM_QT_GATES, ni, q)
        ).marginal(q)
        qt_est.append(tomo.estimate_qt_gates(qt_data, ros[q], n_bootstrap=0).params)
    nominal_neighbor = noise.default_neighbor_model(cfg.option("beta"), cfg.option("gamma"))
    fitted = []
    for addressed in (0, 1):
        entries = {0: [], 1: []}
        for g, (phi, delta) in enumerate(calib.CALIBRATION_GATES):
            for q in (0, 1):
                circuits = tomo.standard_protocol_circuits(sim.addressed_pulse(addressed, phi, delta), q, 2)
                key = (cfg.seed, trial, noise.STREAM_PROCESS, ni, addressed, g, q)
                data = sim.run_protocol(circuits, ctx, n, key).marginal(q)
                est = tomo.process_tomography_mle(data, ros[q], qt_est[q])
                entries[q].append(((phi, delta), est.params))
        other = 1 - addressed
        target = calib.fit_linear_model(calib.CalibrationSet(tuple(entries[addressed])))
        neighbor = calib.fit_linear_model(calib.CalibrationSet(tuple(entries[other])), reference=nominal_neighbor)
        fitted.append(noise.CrossTalkModel(target, neighbor))
    return tuple(fitted)


def crosstalk_trial(cfg: ExperimentConfig, job) -> dict:
    ni, trial = job
    n = cfg.shots[ni]
    cts, qts = crosstalk_truth(cfg, trial)
    u1 = random_target(stream(cfg.seed, trial, noise.STREAM_TARGET))
    u2 = np.eye(2, dtype=complex)
    fitted = reconstruct_crosstalk_models(cfg, cts, qts, n, trial, ni)
    plan = calib.compensate_crosstalk(u1, u2, *fitted)
    a1, a2 = calib.crosstalk_factors(plan, *cts)
    i1, i2 = qmath.infidelity(a1, u1), qmath.infidelity(a2, u2)
    joint = i1 + i2 - i1 * i2
    naive = calib.decompose_two_gate(u1, noise.ideal_model())
    i_naive = qmath.infidelity(calib.predicted_sequence_unitary(naive, cts), qmath.tensor(u1, u2))
    return {
        "N": shots_label(n),
        "trial": trial,
        "F_joint": 1.0 - joint,
        "F_q1": 1.0 - i1,
        "F_q2": 1.0 - i2,
        "F_joint_uncompensated": 1.0 - i_naive,
        "nines_joint": nines(joint),
    }


def run_crosstalk(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(ni, t) for ni in range(len(cfg.shots)) for t in range(cfg.trials)]
    return _map(partial(crosstalk_trial, cfg), jobs, cfg.workers)


def check_crosstalk(rows) -> list[str]:
    fails = []
    for s in summarize(rows, ["F_joint"]):
        if s["N"] == "exact" and s["median_F_joint"] < 1 - 1e-6:
            fails.append(f"exact mode: median joint fidelity {s['median_F_joint']!r} < 1 - 1e-6")
    return fails


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
