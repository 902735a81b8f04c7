"""Circuits, exact outcome probabilities and seeded finite-sample simulation.

A circuit starts in ``|0...0>``, applies its preparation gates, the optional
process under test and the basis-change gates (each list in order, first
element first), then reads every qubit out in the z basis through the
noisy POVM. Outcome index ``k`` is the binary number ``b0 b1`` with qubit 0
as the most significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import noise
from .errors import InvalidArgument
from .noise import CrossTalkModel, LinearGateModel, QtGateParams, ReadoutErrors
from .qmath import _u, check_unitary, tensor

EXACT = math.inf

FIXED_KINDS = ("I", "SqrtX", "X", "SqrtY")
KINDS = FIXED_KINDS + ("Pulse", "AddressedPulse", "Unitary")


@dataclass(frozen=True)
class GateRef:
    """One gate of a circuit.

    ``qubit`` selects the qubit a fixed gate or pulse acts on (for
    ``AddressedPulse`` it is the addressed qubit). ``matrix`` is only used by
    ``Unitary`` gates, which apply a given matrix noise-free.
    """

    kind: str
    qubit: int = 0
    phi: float = 0.0
    delta: float = 0.0
    matrix: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown gate kind {self.kind!r}")
        if self.qubit not in (0, 1):
            raise InvalidArgument(f"qubit index must be 0 or 1, got {self.qubit!r}")
        if not (math.isfinite(self.phi) and math.isfinite(self.delta)):
            raise InvalidArgument("pulse angles must be finite")
        if self.kind == "Unitary":
            if self.matrix is None:
                raise InvalidArgument("Unitary gate needs a matrix")
            m = check_unitary(np.array(self.matrix, dtype=complex))
            object.__setattr__(self, "matrix", tuple(map(tuple, m.tolist())))

    @property
    def label(self) -> str:
        q = f"@{self.qubit}" if self.qubit else ""
        if self.kind in ("Pulse", "AddressedPulse"):
            return f"{self.kind}({self.phi:.12g},{self.delta:.12g}){q}"
        return self.kind + q


def gate(kind: str, qubit: int = 0) -> GateRef:
    return GateRef(kind, qubit)


def pulse(phi: float, delta: float, qubit: int = 0) -> GateRef:
    return GateRef("Pulse", qubit, float(phi), float(delta))


def addressed_pulse(qubit: int, phi: float, delta: float) -> GateRef:
    return GateRef("AddressedPulse", qubit, float(phi), float(delta))


def fixed_unitary(u, qubit: int = 0) -> GateRef:
    return GateRef("Unitary", qubit, matrix=tuple(map(tuple, np.asarray(u, dtype=complex).tolist())))


I, SQRT_X, X, SQRT_Y = (GateRef(k) for k in FIXED_KINDS)


@dataclass(frozen=True)
class Circuit:
    prep: tuple[GateRef, ...] = ()
    meas_basis_change: tuple[GateRef, ...] = ()
    process: GateRef | None = None
    n_qubits: int = 1
    circuit_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "prep", tuple(self.prep))
        object.__setattr__(self, "meas_basis_change", tuple(self.meas_basis_change))
        if self.n_qubits not in (1, 2):
            raise InvalidArgument("n_qubits must be 1 or 2")
        for g in self.gates:
            if g.qubit >= self.n_qubits:
                raise InvalidArgument(f"gate {g.label} does not fit a {self.n_qubits}-qubit circuit")
            if g.kind == "AddressedPulse" and self.n_qubits != 2:
                raise InvalidArgument("AddressedPulse needs a 2-qubit circuit")
            if g.kind == "Unitary" and len(g.matrix) != 2:
                raise InvalidArgument("Unitary gates act on a single qubit")
        if not self.circuit_id:
            parts = ["prep=" + ".".join(g.label for g in self.prep)]
            if self.process is not None:
                parts.append("proc=" + self.process.label)
            parts.append("meas=" + ".".join(g.label for g in self.meas_basis_change))
            object.__setattr__(self, "circuit_id", ";".join(parts))

    @property
    def gates(self) -> tuple[GateRef, ...]:
        """All gates in application order."""
        proc = () if self.process is None else (self.process,)
        return self.prep + proc + self.meas_basis_change

    def with_process(self, process: GateRef | None) -> "Circuit":
        return Circuit(self.prep, self.meas_basis_change, process, self.n_qubits, self.circuit_id)


@dataclass(frozen=True)
class NoiseContext:
    """Everything that determines how gates and readout are actually realized.

    ``readout`` and ``qt_gates`` hold one entry per qubit. ``gate_model`` is a
    :class:`LinearGateModel` for plain pulses, or a pair of
    :class:`CrossTalkModel` (indexed by addressed qubit) for two-qubit
    registers.
    """

    readout: tuple[ReadoutErrors, ...] = (noise.IDEAL_READOUT,)
    gate_model: LinearGateModel | tuple[CrossTalkModel, ...] | None = None
    qt_gates: tuple[QtGateParams, ...] = (noise.IDEAL_QT_GATES,)

    def __post_init__(self):
        ro = self.readout
        if isinstance(ro, ReadoutErrors):
            ro = (ro,)
        qt = self.qt_gates
        if isinstance(qt, QtGateParams):
            qt = (qt,) * len(ro)
        gm = self.gate_model
        if gm is None:
            gm = noise.ideal_model()
        if isinstance(gm, CrossTalkModel):
            gm = (gm,)
        if isinstance(gm, (list, tuple)):
            gm = tuple(gm)
            if len(gm) != len(ro):
                raise InvalidArgument("one CrossTalkModel per qubit is required")
        if len(ro) not in (1, 2) or len(qt) != len(ro):
            raise InvalidArgument("readout and qt_gates must have one entry per qubit")
        object.__setattr__(self, "readout", tuple(ro))
        object.__setattr__(self, "qt_gates", tuple(qt))
        object.__setattr__(self, "gate_model", gm)

    @property
    def n_qubits(self) -> int:
        return len(self.readout)

    def pulse_model(self, qubit: int) -> LinearGateModel:
        gm = self.gate_model
        return gm if isinstance(gm, LinearGateModel) else gm[qubit].target

    def confusion(self) -> np.ndarray:
        c = self.readout[0].confusion()
        for r in self.readout[1:]:
            c = np.kron(c, r.confusion())
        return c


def qt_gate_unitaries(p: QtGateParams) -> dict[str, np.ndarray]:
    """Realized single-qubit matrices of the fixed gates for parameters ``(a, b, c)``."""
    sx = _u(p.a, 0.0, p.b)
    zc = np.array([math.cos(p.c / 2) - 1j * math.sin(p.c / 2), math.cos(p.c / 2) + 1j * math.sin(p.c / 2)])
    sy = (zc[:, None] * sx) * zc.conj()[None, :]
    return {"I": np.eye(2, dtype=complex), "SqrtX": sx, "X": sx @ sx, "SqrtY": sy}


def _single_qubit_matrix(g: GateRef, ctx: NoiseContext) -> np.ndarray:
    if g.kind in FIXED_KINDS:
        return qt_gate_unitaries(ctx.qt_gates[g.qubit])[g.kind]
    if g.kind == "Pulse":
        return _u(*noise.realized_rotation(ctx.pulse_model(g.qubit), g.phi, g.delta))
    if g.kind == "Unitary":
        return np.array(g.matrix, dtype=complex)
    raise InvalidArgument(f"{g.kind} is not a single-qubit gate")


def realize_gate(g: GateRef, ctx: NoiseContext) -> np.ndarray:
    """Matrix actually applied by ``g`` on the register described by ``ctx``."""
    n = ctx.n_qubits
    if g.qubit >= n:
        raise InvalidArgument(f"gate on qubit {g.qubit} in a {n}-qubit context")
    if g.kind == "AddressedPulse":
        if n != 2 or isinstance(ctx.gate_model, LinearGateModel):
            raise InvalidArgument("AddressedPulse needs a 2-qubit context with cross-talk models")
        target, neighbor = noise.crosstalk_effect(ctx.gate_model[g.qubit], g.phi, g.delta)
        ut, un = _u(*target), _u(*neighbor)
        return tensor(ut, un) if g.qubit == 0 else tensor(un, ut)
    m = _single_qubit_matrix(g, ctx)
    if n == 1:
        return m
    eye = np.eye(2, dtype=complex)
    return tensor(m, eye) if g.qubit == 0 else tensor(eye, m)


def circuit_unitary(c: Circuit, ctx: NoiseContext) -> np.ndarray:
    if c.n_qubits != ctx.n_qubits:
        raise InvalidArgument(f"{c.n_qubits}-qubit circuit in a {ctx.n_qubits}-qubit context")
    u = np.eye(2**c.n_qubits, dtype=complex)
    for g in c.gates:
        u = realize_gate(g, ctx) @ u
    return u


def exact_probabilities(c: Circuit, ctx: NoiseContext) -> np.ndarray:
    """Outcome probabilities ``Tr(M_k rho_out)`` under the noisy readout."""
    psi = circuit_unitary(c, ctx)[:, 0]
    p_state = psi.real**2 + psi.imag**2
    return ctx.confusion() @ p_state


def sample_counts(c: Circuit, ctx: NoiseContext, shots, seed) -> np.ndarray:
    """Multinomial outcome counts; ``shots=EXACT`` returns the probabilities."""
    p = exact_probabilities(c, ctx)
    if shots == EXACT:
        return p
    return _multinomial(p, shots, noise.as_generator(seed))


def _multinomial(p, shots, rng) -> np.ndarray:
    shots = int(shots)
    if shots < 1:
        raise InvalidArgument("shots must be >= 1")
    p = np.clip(p, 0.0, None)
    return rng.multinomial(shots, p / p.sum()).astype(float)


@dataclass(frozen=True)
class TomographyDataset:
    """Outcome counts per circuit.

    ``counts`` has one row per circuit. Rows with ``shots == inf`` hold
    exact probabilities instead of counts.
    """

    circuit_ids: tuple[str, ...]
    counts: np.ndarray
    shots: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        shots = np.broadcast_to(np.array(self.shots, dtype=float), (len(counts),)).copy()
        ids = tuple(self.circuit_ids)
        if counts.ndim != 2 or counts.shape[0] != len(ids) or counts.shape[1] not in (2, 4):
            raise InvalidArgument(f"counts must be (n_circuits, 2 or 4), got {counts.shape}")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise InvalidArgument("counts must be finite and non-negative")
        for cid, row, n in zip(ids, counts, shots):
            if math.isinf(n):
                if abs(row.sum() - 1) > 1e-9:
                    raise InvalidArgument(f"exact-mode row {cid!r} does not sum to 1")
            elif n < 1 or row.sum() != n:
                raise InvalidArgument(f"counts of {cid!r} sum to {row.sum():g}, expected shots={n:g}")
        counts.setflags(write=False)
        shots.setflags(write=False)
        object.__setattr__(self, "circuit_ids", ids)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "shots", shots)

    def __len__(self):
        return len(self.circuit_ids)

    @property
    def is_exact(self) -> bool:
        return bool(np.all(np.isinf(self.shots)))

    def frequencies(self) -> np.ndarray:
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    def marginal(self, qubit: int) -> "TomographyDataset":
        """Single-qubit dataset obtained by summing out the other qubit."""
        if self.counts.shape[1] != 4:
            raise InvalidArgument("marginal needs two-qubit counts")
        c = self.counts.reshape(-1, 2, 2).sum(axis=2 - qubit)
        return TomographyDataset(self.circuit_ids, c, self.shots)

    def to_json(self) -> list[dict]:
        return [
            {
                "circuit_id": cid,
                "counts": [int(x) if not math.isinf(n) else float(x) for x in row],
                "shots": None if math.isinf(n) else int(n),
            }
            for cid, row, n in zip(self.circuit_ids, self.counts, self.shots)
        ]

    @classmethod
    def from_json(cls, rows) -> "TomographyDataset":
        if not isinstance(rows, list):
            raise InvalidArgument("dataset must be a JSON array")
        ids, counts, shots = [], [], []
        for i, r in enumerate(rows):
            if not isinstance(r, dict):
                raise InvalidArgument(f"dataset entry {i} is not an object")
            for name in ("circuit_id", "counts", "shots"):
                if name not in r:
                    raise InvalidArgument(f"dataset entry {i}: missing field {name!r}")
            ids.append(str(r["circuit_id"]))
            try:
                counts.append([float(x) for x in r["counts"]])
            except (TypeError, ValueError):
                raise InvalidArgument(f"dataset entry {i}: field 'counts' must be a list of numbers") from None
            try:
                shots.append(math.inf if r["shots"] is None else float(r["shots"]))
            except (TypeError, ValueError):
                raise InvalidArgument(f"dataset entry {i}: field 'shots' must be a number or null") from None
        if len({len(c) for c in counts}) > 1:
            raise InvalidArgument("all count vectors must have the same length")
        return cls(tuple(ids), np.array(counts, dtype=float).reshape(len(ids), -1), np.array(shots))


def run_protocol(circuits: Sequence[Circuit], ctx: NoiseContext, shots, seed) -> TomographyDataset:
    """One multinomial draw per circuit, each from its own RNG stream.

    ``seed`` may be an int or a tuple key; circuit ``i`` draws from
    ``stream(*key, i)``. A ``Generator`` is consumed sequentially instead.
    """
    rows = []
    for i, c in enumerate(circuits):
        p = exact_probabilities(c, ctx)
        if shots == EXACT:
            rows.append(p)
        else:
            if isinstance(seed, np.random.Generator):
                rng = seed
            else:
                key = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
                rng = noise.stream(*key, i)
            rows.append(_multinomial(p, shots, rng))
    return TomographyDataset(tuple(c.circuit_id for c in circuits), np.array(rows), np.full(len(rows), float(shots)))
