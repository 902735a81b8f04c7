"""Ground-truth error models and their random generators.

Random draws use numpy's PCG64 bit generator seeded through
:class:`numpy.random.SeedSequence`, which is portable across platforms.
:func:`stream` derives independent per-trial, per-purpose generators from a
master seed, so Monte Carlo results do not depend on scheduling order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .qmath import RotationParams

log = logging.getLogger(__name__)

HALF_PI = math.pi / 2
IDEAL_MATRIX = np.array([[0.0, 0.0, HALF_PI], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

# Purpose tags for stream(); keep stable, they are part of the reproducibility contract.
STREAM_MODEL = 0
STREAM_READOUT = 1
STREAM_QT_GATES = 2
STREAM_PROCESS = 3
STREAM_TARGET = 4
STREAM_BOOTSTRAP = 5
STREAM_NEIGHBOR = 6


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``, e.g. ``(seed, trial, STREAM_MODEL)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return stream(*seed)
    return stream(int(seed))


@dataclass(frozen=True)
class ReadoutErrors:
    """Classical readout flips: ``e10`` = P("1" | bright |0>), ``e01`` = P("0" | dark |1>)."""

    e10: float = 0.0
    e01: float = 0.0

    def __post_init__(self):
        for name in ("e10", "e01"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise InvalidArgument(f"{name} must lie in [0, 1], got {v!r}")
        if self.e10 + self.e01 >= 1.0:
            raise InvalidArgument("e10 + e01 must be < 1 for distinguishable outcomes")

    def confusion(self) -> np.ndarray:
        """Column-stochastic matrix ``C[outcome, state]``."""
        return np.array([[1.0 - self.e10, self.e01], [self.e10, 1.0 - self.e01]])

    def to_dict(self) -> dict:
        return {"e10": self.e10, "e01": self.e01}

    @classmethod
    def from_dict(cls, d: dict) -> "ReadoutErrors":
        return cls(float(_field(d, "e10")), float(_field(d, "e01")))


IDEAL_READOUT = ReadoutErrors()


@dataclass(frozen=True)
class LinearGateModel:
    """Affine map from commanded ``(phi, delta)`` to realized ``(theta_r, phi_r, delta_r)``.

    Row ``k`` of ``a`` holds the coefficients of ``(phi, delta, 1)`` for the
    ``k``-th realized angle.
    """

    a: np.ndarray = field(default_factory=lambda: IDEAL_MATRIX.copy())

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.shape != (3, 3):
            raise InvalidArgument(f"coefficient matrix must be 3x3, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidArgument("coefficient matrix has non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    def __eq__(self, other):
        return isinstance(other, LinearGateModel) and np.array_equal(self.a, other.a)

    def __hash__(self):
        return hash(self.a.tobytes())

    def to_dict(self) -> dict:
        return {"a": self.a.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearGateModel":
        return cls(np.array(_field(d, "a"), dtype=float))


@dataclass(frozen=True)
class CrossTalkModel:
    """Effect of a pulse on the addressed qubit (``target``) and on its neighbor."""

    target: LinearGateModel
    neighbor: LinearGateModel

    def to_dict(self) -> dict:
        return {"target": self.target.to_dict(), "neighbor": self.neighbor.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "CrossTalkModel":
        return cls(
            LinearGateModel.from_dict(_field(d, "target")),
            LinearGateModel.from_dict(_field(d, "neighbor")),
        )


@dataclass(frozen=True)
class QtGateParams:
    """Tomography gate parameters: sqrt(X) = U(a, 0, b), sqrt(Y) = Z(c) sqrt(X) Z(-c)."""

    a: float = HALF_PI
    b: float = HALF_PI
    c: float = HALF_PI

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= math.pi):
                raise InvalidArgument(f"{name} must lie in [0, pi], got {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}

    @classmethod
    def from_dict(cls, d: dict) -> "QtGateParams":
        return cls(float(_field(d, "a")), float(_field(d, "b")), float(_field(d, "c")))


IDEAL_QT_GATES = QtGateParams()


def _field(d, name):
    if not isinstance(d, dict):
        raise InvalidArgument(f"expected a JSON object with field {name!r}, got {type(d).__name__}")
    if name not in d:
        raise InvalidArgument(f"missing field {name!r}")
    return d[name]


def readout_povm(e: ReadoutErrors) -> tuple[np.ndarray, np.ndarray]:
    """Readout POVM effects ``(P0, P1)``; ``P0 + P1 = I`` exactly."""
    if not isinstance(e, ReadoutErrors):
        e = ReadoutErrors(*e)
    p0 = np.diag([1.0 - e.e10, e.e01]).astype(complex)
    p1 = np.eye(2, dtype=complex) - p0
    return p0, p1


def ideal_model() -> LinearGateModel:
    return LinearGateModel(IDEAL_MATRIX.copy())


def default_neighbor_model(beta: float = 0.05, gamma: float = 0.0) -> LinearGateModel:
    """Cross-talk pickup: a weak copy of the drive, ``delta_ct = beta*delta + gamma``."""
    return LinearGateModel(np.array([[0.0, 0.0, HALF_PI], [1.0, 0.0, 0.0], [0.0, beta, gamma]]))


def realized_rotation(m: LinearGateModel, phi: float, delta: float) -> RotationParams:
    """Raw model output ``a @ (phi, delta, 1)``; no range reduction."""
    if not (math.isfinite(phi) and math.isfinite(delta)):
        raise InvalidArgument("commanded angles must be finite")
    a = m.a
    return RotationParams(
        a[0, 0] * phi + a[0, 1] * delta + a[0, 2],
        a[1, 0] * phi + a[1, 1] * delta + a[1, 2],
        a[2, 0] * phi + a[2, 1] * delta + a[2, 2],
    )


def random_perturbed_model(epsilon: float, seed, base: LinearGateModel | None = None) -> LinearGateModel:
    """``base + epsilon * N`` with i.i.d. standard normal ``N`` (base defaults to ideal)."""
    if not epsilon >= 0:
        raise InvalidArgument("epsilon must be >= 0")
    rng = as_generator(seed)
    base_a = IDEAL_MATRIX if base is None else base.a
    return LinearGateModel(base_a + epsilon * rng.standard_normal((3, 3)))


def random_qt_gate_params(epsilon: float, seed) -> QtGateParams:
    """``pi/2 + epsilon * N`` per parameter, clamped to [0, pi] with a warning."""
    if not epsilon >= 0:
        raise InvalidArgument("epsilon must be >= 0")
    rng = as_generator(seed)
    v = HALF_PI + epsilon * rng.standard_normal(3)
    clipped = np.clip(v, 0.0, math.pi)
    if np.any(clipped != v):
        log.warning("QT gate parameters %s clamped to [0, pi]", v.tolist())
    return QtGateParams(*map(float, clipped))


def random_crosstalk_model(epsilon: float, seed, beta: float = 0.05, gamma: float = 0.0) -> CrossTalkModel:
    """Target and neighbor submodels each perturbed by ``epsilon`` around their nominal values."""
    rng = as_generator(seed)
    return CrossTalkModel(
        random_perturbed_model(epsilon, rng),
        random_perturbed_model(epsilon, rng, base=default_neighbor_model(beta, gamma)),
    )


def crosstalk_effect(ct: CrossTalkModel, phi: float, delta: float) -> tuple[RotationParams, RotationParams]:
    """Rotations applied to the addressed qubit and to its neighbor by one pulse."""
    return realized_rotation(ct.target, phi, delta), realized_rotation(ct.neighbor, phi, delta)
