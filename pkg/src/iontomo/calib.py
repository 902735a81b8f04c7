"""Linear error-model fitting and corrective sequence synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from . import noise, qmath
from ._optim import multistart
from .errors import InvalidArgument, SynthesisFailure
from .noise import CrossTalkModel, LinearGateModel
from .qmath import RotationParams

TWO_PI = 2 * math.pi
SYNTHESIS_TARGET = 1e-8

# Commanded pulses of the four calibration gates.
CALIBRATION_GATES = (
    (math.pi / 4, math.pi / 2),
    (math.pi / 4, math.pi),
    (3 * math.pi / 4, math.pi / 2),
    (3 * math.pi / 4, math.pi),
)


@dataclass(frozen=True)
class CalibrationSet:
    """Commanded ``(phi, delta)`` paired with the rotation reconstructed for it."""

    entries: tuple[tuple[tuple[float, float], RotationParams], ...]

    def __post_init__(self):
        entries = tuple(((float(c[0]), float(c[1])), RotationParams(*map(float, r))) for c, r in self.entries)
        object.__setattr__(self, "entries", entries)

    def design_matrix(self) -> np.ndarray:
        return np.array([[phi, delta, 1.0] for (phi, delta), _ in self.entries])


@dataclass(frozen=True)
class SequencePlan:
    pulses: tuple[tuple[int, float, float], ...]
    predicted_unitary: np.ndarray = field(repr=False)
    predicted_fidelity: float
    below_threshold: bool = False
    qubit_fidelities: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "pulses": [{"qubit": q, "phi": p, "delta": d} for q, p, d in self.pulses],
            "predicted_fidelity": self.predicted_fidelity,
        }


# ----------------------------------------------------------------------------
# model fitting


def _wrap_near(x: float, ref: float) -> float:
    return x + TWO_PI * round((ref - x) / TWO_PI)


def align_branch(p: RotationParams, ref: RotationParams) -> RotationParams:
    """Equivalent description of rotation ``p`` closest to ``ref`` in raw angles.

    Candidates are the same-axis forms ``(theta, phi, delta)``,
    ``(-theta, phi + pi, delta)`` and the flipped-axis forms
    ``(pi - theta, phi + pi, -delta)``, ``(theta - pi, phi, -delta)``, each
    with all three angles shifted by multiples of 2 pi (a 2 pi shift of
    ``delta`` only changes the global phase).
    """
    theta, phi, delta = p
    forms = (
        (theta, phi, delta),
        (-theta, phi + math.pi, delta),
        (math.pi - theta, phi + math.pi, -delta),
        (theta - math.pi, phi, -delta),
    )
    best, best_d = None, math.inf
    for t, f, d in forms:
        c = (_wrap_near(t, ref[0]), _wrap_near(f, ref[1]), _wrap_near(d, ref[2]))
        dist = sum((a - b) ** 2 for a, b in zip(c, ref))
        if dist < best_d:
            best, best_d = c, dist
    return RotationParams(*best)


def fit_linear_model(cal: CalibrationSet, reference: LinearGateModel | None = None) -> LinearGateModel:
    """Row-wise least squares of the realized angles on ``(phi, delta, 1)``.

    Reconstructed rotations are first moved to the branch closest to the
    ``reference`` model's prediction (ideal model by default).
    """
    if not isinstance(cal, CalibrationSet):
        cal = CalibrationSet(tuple(cal))
    reference = reference or noise.ideal_model()
    design = cal.design_matrix()
    if len(design) < 3:
        raise InvalidArgument(f"need at least 3 calibration gates, got {len(design)}")
    rank = np.linalg.matrix_rank(design, tol=1e-9)
    if rank < 3:
        raise InvalidArgument(
            f"design matrix of (phi, delta, 1) rows has rank {rank} < 3: commanded angles are not affinely independent"
        )
    y = np.array(
        [align_branch(r, noise.realized_rotation(reference, phi, delta)) for (phi, delta), r in cal.entries]
    )
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return LinearGateModel(coef.T)


# ----------------------------------------------------------------------------
# single-qubit synthesis


def _qmul(p, q):
    w1, x1, y1, z1 = p
    w2, x2, y2, z2 = q
    return (
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + w2 * x1 + y1 * z2 - z1 * y2,
        w1 * y2 + w2 * y1 + z1 * x2 - x1 * z2,
        w1 * z2 + w2 * z1 + x1 * y2 - y1 * x2,
    )


def _equatorial(q) -> tuple[float, float]:
    """``(phi, delta)`` of an equatorial rotation quaternion, ``delta`` in [0, pi]."""
    w, x, y, _ = q
    if w < 0:
        w, x, y = -w, -x, -y
    s = math.hypot(x, y)
    if s < 1e-15:
        return 0.0, 0.0
    return math.atan2(y, x), 2 * math.atan2(s, w)


def ideal_two_pulse(target, phi1: float | None = None) -> tuple[tuple[float, float], tuple[float, float]]:
    """Exact ``target ~ R_{phi2}(delta2) R_{phi1}(delta1)`` with equatorial axes.

    Returns ``((phi1, delta1), (phi2, delta2))`` in application order. The
    solutions form a one-parameter family: for any first-pulse azimuth
    ``phi1`` there is a ``delta1`` leaving ``target R1^-1`` equatorial. With
    ``phi1=None`` the member with the smallest second-pulse angle about the
    in-plane direction of the target axis is returned.
    """
    w, x, y, z = qmath.unitary_to_quaternion(target)
    if phi1 is None:
        rho = math.hypot(x, y)
        psi = math.atan2(y, x) if rho > 1e-15 else 0.0
        phi2 = psi - math.pi / 2
        half = math.atan2(z, rho)
        if half < 0:
            half, phi2 = -half, phi2 + math.pi
        c, s = math.cos(half), math.sin(half)
        r2_inv = (c, -s * math.cos(phi2), -s * math.sin(phi2), 0.0)
        phi1, delta1 = _equatorial(_qmul(r2_inv, (w, x, y, z)))
        delta2 = 2 * half
    else:
        # z part of target * R1^-1 vanishes when tan(delta1/2) = -z / (y cos(phi1) - x sin(phi1)).
        half = math.atan2(-z, y * math.cos(phi1) - x * math.sin(phi1))
        if half < 0:
            half += math.pi
        c, s = math.cos(half), math.sin(half)
        r1_inv = (c, -s * math.cos(phi1), -s * math.sin(phi1), 0.0)
        phi2, delta2 = _equatorial(_qmul((w, x, y, z), r1_inv))
        delta1 = 2 * half
    wrap = lambda a: (a + math.pi) % TWO_PI - math.pi  # noqa: E731
    return (wrap(phi1), delta1), (wrap(phi2), delta2)


def _ideal_starts(target, n_family: int = 6):
    yield ideal_two_pulse(target)
    for k in range(n_family):
        yield ideal_two_pulse(target, -math.pi + TWO_PI * k / n_family)


def command_for(m: LinearGateModel, phi_r: float, delta_r: float) -> tuple[float, float]:
    """Commanded ``(phi, delta)`` whose realized azimuth and angle match, ignoring tilt."""
    a = m.a
    sub = a[1:, :2]
    if abs(np.linalg.det(sub)) < 1e-9:
        return phi_r, delta_r
    phi, delta = np.linalg.solve(sub, [phi_r - a[1, 2], delta_r - a[2, 2]])
    return float(phi), float(delta)


def _pulse_u(m: LinearGateModel, phi: float, delta: float) -> np.ndarray:
    return qmath._u(*noise.realized_rotation(m, phi, delta))


def _aligned_residual(u, target) -> np.ndarray:
    t = np.vdot(target, u)
    phase = t / abs(t) if abs(t) > 0 else 1.0
    r = (u - phase * target).ravel()
    return np.concatenate([r.real, r.imag])


def _synthesize(objective, residual, starts, bounds=None):
    def polish(x):
        return least_squares(residual, x, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm").x

    best, results = multistart(objective, starts, bounds=bounds, polish=polish, stop_below=1e-13)
    return best, results


def _leverage_fn(calibration):
    if calibration is None:
        return lambda pulses: 0.0, 0.0
    design = np.array([[phi, delta, 1.0] for phi, delta in calibration])
    inv = np.linalg.inv(design.T @ design)
    center = float(design[:, 0].mean())

    def leverage(pulses):
        v = np.array([[phi, delta, 1.0] for phi, delta in pulses])
        return float(np.einsum("ij,jk,ik->", v, inv, v))

    return leverage, center


def _pulse_forms(phi, delta, center):
    """``R_phi(delta)`` and ``R_{phi+pi}(2pi - delta)``, azimuth wrapped to within pi of ``center``."""
    for f, d in ((phi, delta), (phi + math.pi, TWO_PI - delta)):
        yield (f - center + math.pi) % TWO_PI - math.pi + center, d


def decompose_two_gate(target, m: LinearGateModel, calibration=CALIBRATION_GATES, n_candidates: int = 4) -> SequencePlan:
    """Two pulses ``R~_{phi2}(delta2) R~_{phi1}(delta1)`` under model ``m`` best matching ``target``.

    Starts come from exact ideal decompositions (several members of the
    solution family, each pulse in both of its equivalent forms), mapped
    through the model's azimuth/angle rows. The ``n_candidates`` starts whose
    commanded pulses lie closest to the ``calibration`` gates (lowest
    regression leverage) are optimized; among the solutions reaching the
    best fidelity the lowest-leverage one is returned, since a fitted model
    is least reliable far from the gates it was fitted on.
    """
    target = qmath.check_unitary(target, name="target")
    if target.shape != (2, 2):
        raise InvalidArgument("target must be a 2x2 unitary")

    def achieved(x):
        return _pulse_u(m, x[2], x[3]) @ _pulse_u(m, x[0], x[1])

    def objective(x):
        return qmath.infidelity(achieved(x), target)

    def residual(x):
        return _aligned_residual(achieved(x), target)

    leverage, center = _leverage_fn(calibration)
    candidates = []
    for first, second in _ideal_starts(target):
        for r1 in _pulse_forms(*first, center):
            for r2 in _pulse_forms(*second, center):
                candidates.append((leverage((r1, r2)), len(candidates), (*r1, *r2)))
    candidates.sort()
    starts = [(*command_for(m, *c[2][:2]), *command_for(m, *c[2][2:])) for c in candidates[:n_candidates]]

    def polish(x):
        return least_squares(residual, x, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm").x

    best, results = multistart(objective, starts, polish=polish)
    if best is None:
        raise SynthesisFailure("two-gate synthesis failed from every start")
    tol = best.fun + 1e-13
    x = min(
        (r for r in results if r.success and r.fun <= tol),
        key=lambda r: (leverage(((r.x[0], r.x[1]), (r.x[2], r.x[3]))), r.start_index),
    ).x
    u = achieved(x)
    f = 1.0 - objective(x)
    pulses = ((0, float(x[0]), float(x[1])), (0, float(x[2]), float(x[3])))
    return SequencePlan(pulses, u, f, below_threshold=(1.0 - f) > SYNTHESIS_TARGET)


# ----------------------------------------------------------------------------
# cross-talk compensation


def crosstalk_factors(pulses, ct1: CrossTalkModel, ct2: CrossTalkModel) -> tuple[np.ndarray, np.ndarray]:
    """Single-qubit factors ``(A1, A2)`` of a pulse sequence; the register sees ``A1 (x) A2``.

    ``pulses`` is a :class:`SequencePlan` or a list of ``(qubit, phi, delta)``
    with ``qubit`` the addressed qubit.
    """
    pulses = pulses.pulses if isinstance(pulses, SequencePlan) else pulses
    a1 = np.eye(2, dtype=complex)
    a2 = np.eye(2, dtype=complex)
    for q, phi, delta in pulses:
        if q == 0:
            a1 = _pulse_u(ct1.target, phi, delta) @ a1
            a2 = _pulse_u(ct1.neighbor, phi, delta) @ a2
        else:
            a1 = _pulse_u(ct2.neighbor, phi, delta) @ a1
            a2 = _pulse_u(ct2.target, phi, delta) @ a2
    return a1, a2


def _ct_factors(x, ct1, ct2):
    return crosstalk_factors([(k % 2, x[2 * k], x[2 * k + 1]) for k in range(4)], ct1, ct2)


def compensate_crosstalk(u1, u2, ct1: CrossTalkModel, ct2: CrossTalkModel) -> SequencePlan:
    """Four pulses (addressed to qubit 0, 1, 0, 1) realizing ``u1 (x) u2`` under cross-talk.

    ``ct1`` describes pulses addressed to qubit 0, ``ct2`` those addressed to
    qubit 1. The objective is the joint 4x4 fidelity; since the achieved
    operation is a tensor product it equals the product of the per-qubit
    fidelities, which are reported as diagnostics.
    """
    u1 = qmath.check_unitary(u1, name="U1")
    u2 = qmath.check_unitary(u2, name="U2")
    if u1.shape != (2, 2) or u2.shape != (2, 2):
        raise InvalidArgument("U1 and U2 must be 2x2 unitaries")

    def objective(x):
        a1, a2 = _ct_factors(x, ct1, ct2)
        i1, i2 = qmath.infidelity(a1, u1), qmath.infidelity(a2, u2)
        return i1 + i2 - i1 * i2

    def residual(x):
        a1, a2 = _ct_factors(x, ct1, ct2)
        return np.concatenate([_aligned_residual(a1, u1), _aligned_residual(a2, u2)])

    starts = []
    for (p1, d1), (p3, d3) in _ideal_starts(u1, 4):
        (p2, d2), (p4, d4) = ideal_two_pulse(u2)
        starts.append(
            (
                *command_for(ct1.target, p1, d1),
                *command_for(ct2.target, p2, d2),
                *command_for(ct1.target, p3, d3),
                *command_for(ct2.target, p4, d4),
            )
        )
    best, results = _synthesize(objective, residual, starts)
    if best is None:
        raise SynthesisFailure("cross-talk compensation failed from every start")
    x = best.x
    a1, a2 = _ct_factors(x, ct1, ct2)
    f1, f2 = 1.0 - qmath.infidelity(a1, u1), 1.0 - qmath.infidelity(a2, u2)
    joint = 1.0 - objective(x)
    pulses = tuple((k % 2, float(x[2 * k]), float(x[2 * k + 1])) for k in range(4))
    return SequencePlan(
        pulses,
        qmath.tensor(a1, a2),
        joint,
        below_threshold=(1.0 - joint) > 1e-6,
        qubit_fidelities=(f1, f2),
    )


def predicted_sequence_unitary(plan, model) -> np.ndarray:
    """Ordered product of the plan's pulses as realized by ``model``.

    ``model`` is a :class:`LinearGateModel` for single-qubit plans or a pair
    of :class:`CrossTalkModel` (indexed by addressed qubit) for two-qubit plans.
    """
    pulses = plan.pulses if isinstance(plan, SequencePlan) else tuple(plan)
    if isinstance(model, LinearGateModel):
        u = np.eye(2, dtype=complex)
        for q, phi, delta in pulses:
            if q != 0:
                raise InvalidArgument("single-qubit model cannot realize pulses on qubit 1")
            u = _pulse_u(model, phi, delta) @ u
        return u
    models: Sequence[CrossTalkModel] = tuple(model)
    if len(models) != 2 or not all(isinstance(c, CrossTalkModel) for c in models):
        raise InvalidArgument("expected a LinearGateModel or a pair of CrossTalkModel")
    u = np.eye(4, dtype=complex)
    for q, phi, delta in pulses:
        t, n = noise.crosstalk_effect(models[q], phi, delta)
        ut, un = qmath._u(*t), qmath._u(*n)
        u = (qmath.tensor(ut, un) if q == 0 else qmath.tensor(un, ut)) @ u
    return u
