"""Noise-aware estimators.

* readout errors from bright/dark calibration runs,
* the tomography gate parameters ``(a, b, c)`` from four short circuits
  (least squares on outcome frequencies),
* a single-qubit unitary process from the 12-circuit standard protocol
  (maximum likelihood with the fuzzy preparation/measurement model).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.spatial.transform import Rotation

from . import noise, qmath
from ._optim import multistart
from .errors import EstimationFailure, InvalidArgument
from .noise import QtGateParams, ReadoutErrors
from .qmath import RotationParams
from .sim import (
    EXACT,
    Circuit,
    GateRef,
    NoiseContext,
    TomographyDataset,
    fixed_unitary,
    gate,
    qt_gate_unitaries,
    run_protocol,
)

QT_BOUNDS = [(0.0, math.pi)] * 3
_QT_SEQS = (("SqrtX",), ("SqrtX", "SqrtX", "SqrtX"), ("SqrtX", "SqrtY"), ("SqrtY", "SqrtX"))
PREP_KINDS = ("I", "X", "SqrtX", "SqrtY")
BASIS_KINDS = ("I", "SqrtX", "SqrtY")

# ----------------------------------------------------------------------------
# readout


@dataclass(frozen=True)
class ReadoutEstimate:
    errors: ReadoutErrors
    stderr: tuple[float, float]
    shots: tuple[float, float]

    @property
    def e10(self) -> float:
        return self.errors.e10

    @property
    def e01(self) -> float:
        return self.errors.e01

    def to_dict(self) -> dict:
        return {**self.errors.to_dict(), "stderr": list(self.stderr)}


def readout_calibration_circuits(qubit: int = 0, n_qubits: int = 1) -> tuple[Circuit, Circuit]:
    """Bright run (``|0>`` read out) and dark run (a noise-free ``|1>`` read out)."""
    bright = Circuit(n_qubits=n_qubits, circuit_id="bright")
    dark = Circuit(prep=(fixed_unitary(qmath.PAULI_X, qubit),), n_qubits=n_qubits, circuit_id="dark")
    return bright, dark


def estimate_readout_errors(bright_counts, dark_counts, exact: bool = False) -> ReadoutEstimate:
    """``e10`` from the share of "1" in bright runs, ``e01`` from the share of "0" in dark runs.

    Standard errors are binomial, ``sqrt(p (1 - p) / N)``; they are zero for
    exact-mode input, where counts are probabilities.
    """
    b0, b1 = (float(x) for x in bright_counts)
    d0, d1 = (float(x) for x in dark_counts)
    nb, nd = b0 + b1, d0 + d1
    if min(b0, b1, d0, d1) < 0:
        raise InvalidArgument("counts must be non-negative")
    if nb <= 0 or nd <= 0 or (not exact and (nb < 1 or nd < 1)):
        raise InvalidArgument("bright and dark runs need at least one shot each")
    e10, e01 = b1 / nb, d0 / nd
    if exact:
        return ReadoutEstimate(ReadoutErrors(e10, e01), (0.0, 0.0), (EXACT, EXACT))
    se = (math.sqrt(e10 * (1 - e10) / nb), math.sqrt(e01 * (1 - e01) / nd))
    return ReadoutEstimate(ReadoutErrors(e10, e01), se, (nb, nd))


def calibrate_readout(ctx: NoiseContext, shots, seed, qubit: int = 0) -> ReadoutEstimate:
    """Simulate both calibration runs on ``qubit`` and estimate its readout errors."""
    circuits = readout_calibration_circuits(qubit, ctx.n_qubits)
    data = run_protocol(circuits, ctx, shots, seed)
    if ctx.n_qubits == 2:
        data = data.marginal(qubit)
    return estimate_readout_errors(data.counts[0], data.counts[1], exact=data.is_exact)


# ----------------------------------------------------------------------------
# QT gates


@dataclass(frozen=True)
class QtGateEstimate:
    params: QtGateParams
    stderr: tuple[float, float, float]
    residual: float
    starts: list = field(default_factory=list, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {**self.params.to_dict(), "stderr": list(self.stderr)}


def qt_gate_circuits(qubit: int = 0, n_qubits: int = 1) -> list[Circuit]:
    """Four circuits identifying ``(a, b, c)``: sqrt(X); sqrt(X)^3; sqrt(Y)sqrt(X); sqrt(X)sqrt(Y).

    Gate tuples are in application order, so ``("SqrtX", "SqrtY")`` is the
    matrix product sqrt(Y) sqrt(X).
    """
    return [
        Circuit(prep=tuple(gate(k, qubit) for k in s), n_qubits=n_qubits, circuit_id=f"qt{i + 1}")
        for i, s in enumerate(_QT_SEQS)
    ]


def qt_model_probabilities(params, readout: ReadoutErrors) -> np.ndarray:
    """Outcome probabilities (4 x 2) of :func:`qt_gate_circuits` for ``params = (a, b, c)``."""
    a, b, c = (float(v) for v in params)
    # Bypass QtGateParams validation: the optimizer may probe the bounds exactly.
    g = _qt_unitaries(a, b, c)
    conf = readout.confusion()
    out = np.empty((4, 2))
    for i, seq in enumerate(_QT_SEQS):
        psi = np.array([1.0 + 0j, 0.0])
        for k in seq:
            psi = g[k] @ psi
        out[i] = conf @ (psi.real**2 + psi.imag**2)
    return out


def _qt_unitaries(a, b, c):
    sx = qmath._u(a, 0.0, b)
    z0 = complex(math.cos(c / 2), -math.sin(c / 2))
    sy = sx * np.array([[1.0, z0 * z0], [(z0 * z0).conjugate(), 1.0]])
    return {"SqrtX": sx, "SqrtY": sy}


def _qt_starts():
    h = math.pi / 2
    d = 0.25
    return [(h, h, h), (h + d, h + d, h - d), (h - d, h + d, h + d), (h + d, h - d, h + d), (h - d, h - d, h - d)]


def _fit_qt(freq, readout, starts):
    def resid(x):
        return (freq - qt_model_probabilities(x, readout)).ravel()

    def objective(x):
        r = resid(x)
        return float(r @ r)

    def polish(x):
        r = least_squares(resid, x, bounds=np.array(QT_BOUNDS).T, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="trf")
        return r.x

    best, results = multistart(objective, starts, bounds=QT_BOUNDS, polish=polish)
    return best, results


def estimate_qt_gates(
    data: TomographyDataset,
    readout,
    n_bootstrap: int = 100,
    seed=0,
) -> QtGateEstimate:
    """Least-squares fit of ``(a, b, c)`` over [0, pi]^3 to the four-circuit data.

    The search runs from the ideal point and four perturbed starts and keeps
    the best. Standard errors come from a parametric bootstrap with
    ``n_bootstrap`` resamples (zero for exact-mode data); with
    ``n_bootstrap=0`` a linearized (delta-method) estimate is used instead.
    """
    readout = getattr(readout, "errors", readout)
    if len(data) != 4:
        raise InvalidArgument(f"expected the 4 QT-gate circuits, got {len(data)} rows")
    if data.counts.shape[1] != 2:
        raise InvalidArgument("QT-gate estimation needs single-qubit data; marginalize first")
    freq = data.frequencies()
    best, results = _fit_qt(freq, readout, _qt_starts())
    if best is None:
        raise EstimationFailure("QT-gate fit failed from every start", {"starts": results})
    x = np.clip(best.x, 0.0, math.pi)
    params = QtGateParams(*map(float, x))

    if data.is_exact:
        stderr = (0.0, 0.0, 0.0)
    elif n_bootstrap > 0:
        stderr = _bootstrap_qt(x, readout, data.shots, n_bootstrap, seed)
    else:
        stderr = _delta_method_qt(x, readout, data.shots)
    return QtGateEstimate(params, stderr, best.fun, results)


def _bootstrap_qt(x, readout, shots, n, seed):
    rng = noise.as_generator(seed)
    p = qt_model_probabilities(x, readout)
    draws = []
    for _ in range(n):
        counts = np.array([rng.multinomial(int(s), row / row.sum()) for row, s in zip(p, shots)], dtype=float)
        freq = counts / counts.sum(axis=1, keepdims=True)
        best, _ = _fit_qt(freq, readout, [x])
        if best is not None:
            draws.append(np.clip(best.x, 0.0, math.pi))
    if len(draws) < 2:
        return (math.nan,) * 3
    return tuple(float(s) for s in np.std(draws, axis=0, ddof=1))


def _delta_method_qt(x, readout, shots):
    h = 1e-6
    p = qt_model_probabilities(x, readout)[:, 1]
    jac = np.empty((4, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        jac[:, k] = (qt_model_probabilities(x + e, readout)[:, 1] - qt_model_probabilities(x - e, readout)[:, 1]) / (2 * h)
    w = np.diag(p * (1 - p) / shots)
    jinv = np.linalg.pinv(jac)
    cov = jinv @ w @ jinv.T
    return tuple(float(math.sqrt(max(v, 0.0))) for v in np.diag(cov))


# ----------------------------------------------------------------------------
# process tomography


@dataclass(frozen=True)
class ProcessEstimate:
    unitary: np.ndarray
    params: RotationParams
    loglik: float

    def to_dict(self) -> dict:
        return {**self.params._asdict(), "loglik": self.loglik}


def standard_protocol_circuits(process_slot: GateRef | None = None, qubit: int = 0, n_qubits: int = 1) -> list[Circuit]:
    """The 12 circuits: preparation in {I, X, sqrt(X), sqrt(Y)} x basis change in {I, sqrt(X), sqrt(Y)}.

    The process under test sits between preparation and basis change.
    """
    out = []
    for p in PREP_KINDS:
        for m in BASIS_KINDS:
            prep = () if p == "I" else (gate(p, qubit),)
            meas = () if m == "I" else (gate(m, qubit),)
            out.append(Circuit(prep, meas, process_slot, n_qubits, circuit_id=f"prep={p};meas={m}"))
    return out


class _ProcessModel:
    """Vectorized outcome probabilities of the standard protocol for a trial unitary."""

    def __init__(self, readout: ReadoutErrors, qt: QtGateParams):
        g = qt_gate_unitaries(qt)
        self.psi = np.stack([g[k][:, 0] for k in PREP_KINDS], axis=1)  # (2, 4)
        self.basis = np.stack([g[k] for k in BASIS_KINDS])  # (3, 2, 2)
        self.conf = readout.confusion()

    def probabilities(self, u) -> np.ndarray:
        amp = np.einsum("mab,bc,cp->pma", self.basis, u, self.psi)  # (prep, basis, state)
        pstate = (amp.real**2 + amp.imag**2).reshape(12, 2)
        return pstate @ self.conf.T

    def bloch_start(self, freq) -> np.ndarray:
        """Rotation vector from readout-corrected linear inversion and a proper Procrustes fit."""
        prep_bloch = np.array([_bloch(np.outer(v, v.conj())) for v in self.psi.T])
        axes = np.array([_bloch(b.conj().T @ qmath.PAULI_Z @ b) for b in self.basis])
        e10 = 1 - self.conf[0, 0]
        e01 = self.conf[0, 1]
        p0 = (freq[:, 0] - e01) / max(1 - e10 - e01, 1e-12)
        expval = (2 * np.clip(p0, 0, 1) - 1).reshape(4, 3)
        out_bloch = np.linalg.lstsq(axes, expval.T, rcond=None)[0].T  # (4, 3)
        rot, _ = Rotation.align_vectors(out_bloch, prep_bloch)
        return rot.as_rotvec()


def _bloch(op) -> np.ndarray:
    return np.array([np.trace(op @ s).real for s in (qmath.PAULI_X, qmath.PAULI_Y, qmath.PAULI_Z)])


def _strip_process(cid: str) -> str:
    return ";".join(part for part in cid.split(";") if not part.startswith("proc="))


def process_tomography_mle(
    data: TomographyDataset,
    readout=noise.IDEAL_READOUT,
    qt_gates=noise.IDEAL_QT_GATES,
) -> ProcessEstimate:
    """Maximum-likelihood unitary from standard-protocol data.

    Preparations and basis changes are modeled with the realized tomography
    gates ``qt_gates`` and the noisy readout ``readout``. The unitary is
    parameterized by its rotation vector; the search starts from a linear
    inversion estimate plus four fixed alternatives.
    """
    readout = getattr(readout, "errors", readout)
    qt_gates = getattr(qt_gates, "params", qt_gates)
    expected = [c.circuit_id for c in standard_protocol_circuits()]
    if len(data) != 12 or data.counts.shape[1] != 2:
        raise InvalidArgument("process tomography needs 12 single-qubit standard-protocol rows")
    got = [_strip_process(c) for c in data.circuit_ids]
    if any(g.startswith("prep=") for g in got) and got != expected:
        raise InvalidArgument(f"dataset circuits {got} do not follow the standard protocol order")

    model = _ProcessModel(readout, qt_gates)
    counts = data.counts
    total = counts.sum()
    mask = counts > 0

    def nll(r):
        p = model.probabilities(qmath.rotvec_to_unitary(r))
        return -float(np.sum(counts[mask] * np.log(np.maximum(p[mask], 1e-300)))) / total

    r0 = model.bloch_start(data.frequencies())
    starts = [r0, np.zeros(3), *(r0 + np.array(v) for v in ((0.3, 0, 0), (0, 0.3, 0), (0, 0, 0.3)))]

    def polish(r):
        res = minimize(nll, r, method="BFGS", options={"gtol": 1e-12, "xrtol": 1e-14})
        return res.x

    best, results = multistart(nll, starts, polish=polish)
    if best is None:
        raise EstimationFailure("process MLE failed from every start", {"starts": results})
    u = qmath.rotvec_to_unitary(best.x)
    params = qmath.unitary_to_rotation(u)
    return ProcessEstimate(qmath.u_rotation(params), params, -best.fun * total)


def process_loglik(data: TomographyDataset, u, readout=noise.IDEAL_READOUT, qt_gates=noise.IDEAL_QT_GATES) -> float:
    """Log-likelihood of ``data`` under process ``u`` (used to audit optimizer results)."""
    readout = getattr(readout, "errors", readout)
    qt_gates = getattr(qt_gates, "params", qt_gates)
    p = _ProcessModel(readout, qt_gates).probabilities(np.asarray(u))
    mask = data.counts > 0
    return float(np.sum(data.counts[mask] * np.log(np.maximum(p[mask], 1e-300))))
