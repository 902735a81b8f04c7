"""Single- and two-qubit matrix primitives.

Matrices are plain ``numpy`` complex arrays. The rotation convention is

    U(theta, phi, delta) = cos(delta/2) I - i sin(delta/2) (n . sigma),
    n = (sin theta cos phi, sin theta sin phi, cos theta),

i.e. a rotation of the Bloch sphere by ``delta`` about the axis with polar
angle ``theta`` and azimuth ``phi``. Global phase is never tracked; unitaries
are compared through :func:`fidelity`.
"""

from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument

CONSTRUCTION_TOL = 1e-12
INPUT_TOL = 1e-8
AXIS_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class RotationParams(NamedTuple):
    """Axis polar angle, axis azimuth and rotation angle, in radians."""

    theta: float
    phi: float
    delta: float


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidArgument(f"non-finite angle: {v!r}")


def _as_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise InvalidArgument(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument(f"{name} has non-finite entries")
    return a


def unitarity_defect(u) -> float:
    """Largest entrywise deviation of ``U^dagger U`` from the identity."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def check_unitary(u, tol=INPUT_TOL, name="U") -> np.ndarray:
    a = _as_matrix(u, name)
    if a.shape not in ((2, 2), (4, 4)):
        raise InvalidArgument(f"{name} must be 2x2 or 4x4, got {a.shape}")
    defect = unitarity_defect(a)
    if defect > tol:
        raise InvalidArgument(f"{name} is not unitary (defect {defect:.3g} > {tol:g})")
    return a


def check_density(rho, tol=INPUT_TOL) -> np.ndarray:
    a = _as_matrix(rho, "rho")
    if a.shape not in ((2, 2), (4, 4)):
        raise InvalidArgument(f"rho must be 2x2 or 4x4, got {a.shape}")
    if np.max(np.abs(a - a.conj().T)) > tol:
        raise InvalidArgument("rho is not Hermitian")
    if abs(np.trace(a) - 1) > tol:
        raise InvalidArgument("rho does not have unit trace")
    if np.min(np.linalg.eigvalsh((a + a.conj().T) / 2)) < -tol:
        raise InvalidArgument("rho is not positive semidefinite")
    return a


def _u(theta: float, phi: float, delta: float) -> np.ndarray:
    c = math.cos(delta / 2)
    s = math.sin(delta / 2)
    ct = math.cos(theta)
    st = math.sin(theta)
    off = -1j * st * s
    return np.array(
        [
            [c - 1j * ct * s, off * cmath.exp(-1j * phi)],
            [off * cmath.exp(1j * phi), c + 1j * ct * s],
        ]
    )


def u_rotation(p) -> np.ndarray:
    """2x2 rotation unitary for ``p = (theta, phi, delta)``.

    Any finite angles are accepted; no range reduction is applied.
    """
    theta, phi, delta = (float(x) for x in p)
    _check_finite(theta, phi, delta)
    return _u(theta, phi, delta)


def z_rotation(delta: float) -> np.ndarray:
    """Rotation about the z axis, ``diag(exp(-i delta/2), exp(+i delta/2))``."""
    return u_rotation((0.0, 0.0, delta))


def unitary_to_quaternion(u) -> np.ndarray:
    """Real unit quaternion ``(w, x, y, z)`` with ``U ~ w I - i(xX + yY + zZ)``.

    The overall sign is fixed so that ``w >= 0``; when ``w`` vanishes the
    first non-negligible entry of ``(z, x, y)`` is made positive.
    """
    u = np.asarray(u, dtype=complex)
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    v = u / cmath.sqrt(det)
    w = (v[0, 0] + v[1, 1]).real / 2
    z = (v[1, 1] - v[0, 0]).imag / 2
    x = -(v[0, 1] + v[1, 0]).imag / 2
    y = (v[1, 0] - v[0, 1]).real / 2
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if abs(q[0]) > AXIS_TOL:
        sign = math.copysign(1.0, q[0])
    else:
        sign = 1.0
        for k in (3, 1, 2):
            if abs(q[k]) > AXIS_TOL:
                sign = math.copysign(1.0, q[k])
                break
    return sign * q


def quaternion_to_rotation(q) -> RotationParams:
    w, x, y, z = (float(c) for c in q)
    if w < 0:
        w, x, y, z = -w, -x, -y, -z
    s = math.sqrt(x * x + y * y + z * z)
    delta = 2 * math.atan2(s, w)
    if s < AXIS_TOL:
        return RotationParams(0.0, 0.0, 0.0)
    theta = math.acos(max(-1.0, min(1.0, z / s)))
    phi = math.atan2(y, x)
    if phi >= math.pi:
        phi -= 2 * math.pi
    return RotationParams(theta, phi, delta)


def unitary_to_rotation(u, d: int = 2) -> RotationParams:
    """Canonical rotation parameters of a 2x2 unitary, up to global phase.

    Returns ``theta`` in [0, pi], ``phi`` in [-pi, pi) and ``delta`` in
    [0, pi]; the equivalent description ``(pi - theta, phi + pi, 2pi - delta)``
    is never returned. When the rotation angle vanishes the axis is
    undefined and ``theta = phi = 0`` is reported.
    """
    if d != 2:
        raise InvalidArgument("only d = 2 is supported")
    a = check_unitary(u)
    if a.shape != (2, 2):
        raise InvalidArgument("expected a 2x2 unitary")
    return quaternion_to_rotation(unitary_to_quaternion(a))


def rotvec_to_unitary(r) -> np.ndarray:
    """``exp(-i (r . sigma) / 2)``: rotation by ``|r|`` about ``r / |r|``."""
    rx, ry, rz = (float(c) for c in r)
    angle = math.sqrt(rx * rx + ry * ry + rz * rz)
    c = math.cos(angle / 2)
    k = math.sin(angle / 2) / angle if angle > 1e-12 else 0.5
    return np.array(
        [
            [c - 1j * k * rz, -1j * k * rx - k * ry],
            [-1j * k * rx + k * ry, c + 1j * k * rz],
        ]
    )


def fidelity(u, v) -> float:
    """Gate fidelity ``|Tr(U^dagger V)|^2 / d^2``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise InvalidArgument(f"dimension mismatch: {u.shape} vs {v.shape}")
    d = u.shape[0]
    t = np.vdot(u, v)  # = Tr(U^dagger V)
    f = (t.real * t.real + t.imag * t.imag) / (d * d)
    return min(1.0, max(0.0, float(f)))


def infidelity(u, v) -> float:
    """``1 - fidelity(u, v)``, accurate for nearly identical unitaries.

    Computed from the phase-aligned distance rather than by subtraction, so
    values far below machine epsilon are resolved.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise InvalidArgument(f"dimension mismatch: {u.shape} vs {v.shape}")
    d = u.shape[0]
    t = np.vdot(u, v)
    if abs(t) == 0:
        return 1.0
    # ||V - e^{i a} U||^2 = 2d - 2|t| for the optimal phase a; then
    # 1 - |t|^2/d^2 = (1 - |t|/d)(1 + |t|/d).
    phase = t / abs(t)
    dist2 = float(np.sum(np.abs(v - phase * u) ** 2))
    x = dist2 / (2 * d)
    return min(1.0, max(0.0, x * (2 - x)))


def tensor(a, b) -> np.ndarray:
    """Kronecker product with the first qubit as the most significant factor."""
    return np.kron(np.asarray(a), np.asarray(b))


def apply(u, rho) -> np.ndarray:
    """Unitary evolution ``U rho U^dagger``."""
    u = np.asarray(u)
    rho = np.asarray(rho)
    if u.shape != rho.shape:
        raise InvalidArgument(f"dimension mismatch: {u.shape} vs {rho.shape}")
    return u @ rho @ u.conj().T


def ket0(n_qubits: int = 1) -> np.ndarray:
    """Density matrix ``|0...0><0...0|``."""
    d = 2**n_qubits
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1
    return rho
