import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iontomo import qmath
from iontomo.errors import InvalidArgument
from iontomo.qmath import RotationParams, fidelity, infidelity, u_rotation, unitary_to_rotation, z_rotation

from conftest import assert_same_gate, haar_unitary

PI = math.pi
angle = st.floats(-4 * PI, 4 * PI, allow_nan=False)
theta_open = st.floats(0.01, PI - 0.01)
phi_any = st.floats(-PI, PI, exclude_max=True)
delta_open = st.floats(0.01, 2 * PI - 0.01)

NEG_I_X = np.array([[0, -1j], [-1j, 0]])

# exp(-i delta/2 n.sigma) for (0.3, 1.1, 2.2), evaluated with scipy.linalg.expm.
EXPM_ORACLE = np.array(
    [
        [0.45359612142557737 - 0.8514029104439913j, -0.23471708922653428 - 0.11946351217085752j],
        [0.23471708922653425 - 0.11946351217085752j, 0.45359612142557737 + 0.8514029104439914j],
    ]
)


def test_u_rotation_x_pi():
    np.testing.assert_allclose(u_rotation((PI / 2, 0, PI)), NEG_I_X, atol=1e-15)


@pytest.mark.parametrize("theta,phi", [(0.0, 0.0), (1.2, -2.0), (PI, 3.0)])
def test_zero_angle_is_identity(theta, phi):
    np.testing.assert_allclose(u_rotation((theta, phi, 0.0)), np.eye(2), atol=1e-15)


def test_polar_axis_is_z_rotation():
    d = 0.77
    np.testing.assert_allclose(u_rotation((0, 0, d)), np.diag([np.exp(-0.5j * d), np.exp(0.5j * d)]), atol=1e-15)


def test_matches_matrix_exponential():
    np.testing.assert_allclose(u_rotation((0.3, 1.1, 2.2)), EXPM_ORACLE, atol=1e-14)


@pytest.mark.parametrize(
    "delta,diag",
    [(0.0, [1, 1]), (PI, [-1j, 1j]), (PI / 2, [np.exp(-1j * PI / 4), np.exp(1j * PI / 4)])],
)
def test_z_rotation(delta, diag):
    np.testing.assert_allclose(z_rotation(delta), np.diag(diag), atol=1e-15)


def test_extract_identity():
    assert unitary_to_rotation(np.eye(2)) == RotationParams(0.0, 0.0, 0.0)


def test_extract_neg_i_x():
    p = unitary_to_rotation(NEG_I_X)
    np.testing.assert_allclose(p, (PI / 2, 0, PI), atol=1e-12)


def test_extract_ignores_global_phase():
    u = u_rotation((0.4, -1.0, 1.3))
    np.testing.assert_allclose(unitary_to_rotation(np.exp(0.7j) * u), unitary_to_rotation(u), atol=1e-12)


def test_extract_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        unitary_to_rotation(np.ones((2, 2)))
    with pytest.raises(InvalidArgument):
        unitary_to_rotation(np.eye(4))
    with pytest.raises(InvalidArgument):
        unitary_to_rotation(np.eye(2), d=4)
    with pytest.raises(InvalidArgument):
        unitary_to_rotation(np.array([[np.nan, 0], [0, 1]]))


def test_u_rotation_rejects_nan():
    with pytest.raises(InvalidArgument):
        u_rotation((0.1, math.nan, 1.0))


def test_round_trip_thousand_draws():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        p = (rng.uniform(0, PI), rng.uniform(-PI, PI), rng.uniform(0, 2 * PI))
        u = u_rotation(p)
        assert 1 - fidelity(u_rotation(unitary_to_rotation(u)), u) <= 1e-12


def test_canonical_ranges():
    rng = np.random.default_rng(2)
    for _ in range(500):
        theta, phi, delta = unitary_to_rotation(haar_unitary(rng))
        assert 0 <= theta <= PI
        assert -PI <= phi < PI
        assert 0 <= delta <= PI


@pytest.mark.parametrize(
    "u,f",
    [(np.eye(2), 1.0), (NEG_I_X, 0.0), (z_rotation(PI / 2), 0.5)],
)
def test_fidelity_examples(u, f):
    assert fidelity(np.eye(2), u) == pytest.approx(f, abs=1e-15)


def test_fidelity_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        fidelity(np.eye(2), np.eye(4))


def test_infidelity_resolves_tiny_differences():
    u = u_rotation((0.5, 0.5, 1.0))
    v = u_rotation((0.5, 0.5, 1.0 + 2e-9))
    # 1 - F = sin^2(eps/4) * ... ~ (eps/2)^2 for a same-axis angle change eps.
    assert infidelity(u, v) == pytest.approx(1e-18, rel=1e-6)
    assert infidelity(u, u) == 0.0


def test_tensor_and_apply():
    np.testing.assert_array_equal(qmath.tensor(np.eye(2), np.eye(2)), np.eye(4))
    psi = qmath.tensor(NEG_I_X, np.eye(2)) @ np.array([1, 0, 0, 0])
    assert abs(psi[2]) == pytest.approx(1.0)
    ab = qmath.tensor(u_rotation((1, 2, 3)), z_rotation(0.3))
    assert fidelity(ab, ab) == pytest.approx(1.0)
    rho = qmath.ket0()
    np.testing.assert_array_equal(qmath.apply(np.eye(2), rho), rho)
    np.testing.assert_allclose(qmath.apply(NEG_I_X, rho), np.diag([0, 1]), atol=1e-15)


def test_apply_preserves_trace(rng):
    for _ in range(50):
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        qmath.check_density(rho)
        assert np.trace(qmath.apply(haar_unitary(rng), rho)) == pytest.approx(1.0, abs=1e-12)


def test_check_density_rejects():
    with pytest.raises(InvalidArgument):
        qmath.check_density(np.diag([0.5, 0.6]))
    with pytest.raises(InvalidArgument):
        qmath.check_density(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidArgument):
        qmath.check_density(np.array([[0.5, 1], [0, 0.5]]))


@given(angle, angle, angle)
def test_u_rotation_unitary(theta, phi, delta):
    assert qmath.unitarity_defect(u_rotation((theta, phi, delta))) <= 1e-12


@given(theta_open, phi_any, delta_open)
def test_opposite_axis_same_rotation(theta, phi, delta):
    u = u_rotation((theta, phi, delta))
    assert 1 - fidelity(u_rotation((PI - theta, phi + PI, 2 * PI - delta)), u) <= 1e-12


@given(angle, angle, angle)
def test_round_trip_property(theta, phi, delta):
    u = u_rotation((theta, phi, delta))
    assert infidelity(u_rotation(unitary_to_rotation(u)), u) <= 1e-12


@given(theta_open, phi_any, delta_open)
def test_canonical_form_unique(theta, phi, delta):
    # Both descriptions of the same rotation land on one canonical triple.
    a = unitary_to_rotation(u_rotation((theta, phi, delta)))
    b = unitary_to_rotation(u_rotation((PI - theta, phi + PI, 2 * PI - delta)))
    c = unitary_to_rotation(u_rotation(a))
    for x, y in ((a, b), (a, c)):
        assert x.delta == pytest.approx(y.delta, abs=1e-9)
        assert x.theta == pytest.approx(y.theta, abs=1e-7)
        assert math.remainder(x.phi - y.phi, 2 * PI) == pytest.approx(0, abs=1e-7)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * PI))
def test_fidelity_properties(seed, alpha):
    rng = np.random.default_rng(seed)
    u, v = haar_unitary(rng), haar_unitary(rng)
    f = fidelity(u, v)
    assert 0 <= f <= 1
    assert f == pytest.approx(fidelity(v, u), abs=1e-15)
    assert f == pytest.approx(fidelity(np.exp(1j * alpha) * u, v), abs=1e-14)
    assert infidelity(u, v) == pytest.approx(1 - f, abs=1e-14)
    assert_same_gate(u, np.exp(1j * alpha) * u)
