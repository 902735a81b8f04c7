import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iontomo import noise
from iontomo.errors import InvalidArgument
from iontomo.noise import (
    CrossTalkModel,
    LinearGateModel,
    QtGateParams,
    ReadoutErrors,
    ideal_model,
    readout_povm,
    realized_rotation,
)

PI = math.pi
rates = st.floats(0, 0.49)


def test_povm_ideal():
    p0, p1 = readout_povm(ReadoutErrors(0, 0))
    np.testing.assert_array_equal(p0, np.diag([1, 0]))
    np.testing.assert_array_equal(p1, np.diag([0, 1]))


def test_povm_typical_rates():
    p0, p1 = readout_povm(ReadoutErrors(0.01, 0.03))
    np.testing.assert_array_equal(p0, np.diag([0.99, 0.03]))
    np.testing.assert_allclose(p1, np.diag([0.01, 0.97]), atol=1e-16)


@given(rates, rates)
def test_povm_complete(e10, e01):
    p0, p1 = readout_povm(ReadoutErrors(e10, e01))
    assert np.array_equal(p0 + p1, np.eye(2))
    for p in (p0, p1):
        assert np.count_nonzero(p - np.diag(np.diag(p))) == 0
        assert np.all((p.real >= 0) & (p.real <= 1))


@pytest.mark.parametrize("e10,e01", [(-0.1, 0), (0, 1.2), (0.6, 0.5), (math.nan, 0)])
def test_readout_validation(e10, e01):
    with pytest.raises(InvalidArgument):
        ReadoutErrors(e10, e01)


@pytest.mark.parametrize(
    "phi,delta,expected",
    [(0.3, 1.7, (PI / 2, 0.3, 1.7)), (0, PI, (PI / 2, 0, PI)), (PI / 2, PI / 2, (PI / 2, PI / 2, PI / 2)),
     (PI / 4, PI / 2, (PI / 2, PI / 4, PI / 2))],
)
def test_ideal_model(phi, delta, expected):
    assert realized_rotation(ideal_model(), phi, delta) == pytest.approx(expected, abs=1e-15)


def test_theta_offset():
    a = noise.IDEAL_MATRIX.copy()
    a[0, 2] += 0.01
    for phi, delta in [(0, 0), (1.0, 2.0), (-3.0, 0.5)]:
        assert realized_rotation(LinearGateModel(a), phi, delta).theta == pytest.approx(PI / 2 + 0.01, abs=1e-15)


def test_realized_rotation_is_affine(rng):
    m = noise.random_perturbed_model(0.3, 4)
    base = np.array(realized_rotation(m, 0, 0))
    for _ in range(20):
        x1, x2 = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        alpha = rng.uniform()
        r1 = np.array(realized_rotation(m, *x1)) - base
        r2 = np.array(realized_rotation(m, *x2)) - base
        mid = np.array(realized_rotation(m, *(alpha * x1 + (1 - alpha) * x2))) - base
        np.testing.assert_allclose(mid, alpha * r1 + (1 - alpha) * r2, atol=1e-12)


def test_linear_model_is_immutable_and_hashable():
    m = ideal_model()
    with pytest.raises(ValueError):
        m.a[0, 0] = 1.0
    assert m == ideal_model() and hash(m) == hash(ideal_model())
    with pytest.raises(InvalidArgument):
        LinearGateModel(np.eye(2))


def test_random_model_zero_epsilon():
    assert noise.random_perturbed_model(0.0, 9) == ideal_model()


def test_random_model_deterministic():
    assert noise.random_perturbed_model(0.01, (3, 1, 0)) == noise.random_perturbed_model(0.01, (3, 1, 0))
    assert noise.random_perturbed_model(0.01, 3) != noise.random_perturbed_model(0.01, 4)


def test_random_model_spread():
    a11 = [noise.random_perturbed_model(0.01, (5, i)).a[0, 0] for i in range(10_000)]
    assert np.std(a11, ddof=1) == pytest.approx(0.01, rel=0.1)


def test_random_qt_params():
    assert noise.random_qt_gate_params(0.0, 1) == QtGateParams(PI / 2, PI / 2, PI / 2)
    assert noise.random_qt_gate_params(0.01, 8) == noise.random_qt_gate_params(0.01, 8)
    draws = np.array([noise.random_qt_gate_params(0.01, (6, i)).as_array() for i in range(10_000)])
    inside = np.all(np.abs(draws - PI / 2) <= 0.05, axis=1)
    assert inside.mean() >= 0.9999


def test_random_qt_params_clamped(caplog):
    with caplog.at_level(logging.WARNING, logger="iontomo"):
        draws = [noise.random_qt_gate_params(2.0, i) for i in range(20)]
    assert all(0 <= v <= PI for p in draws for v in p.as_array())
    assert "clamped" in caplog.text


def test_qt_params_validation():
    with pytest.raises(InvalidArgument):
        QtGateParams(-0.1, 1, 1)
    with pytest.raises(InvalidArgument):
        QtGateParams(1, 1, 4)


def test_stream_is_portable():
    # PCG64 seeded through SeedSequence([seed, *key]); values frozen.
    np.testing.assert_array_equal(
        noise.stream(0, 1, 2).random(3), [0.8817035384837327, 0.28917661385918403, 0.8710360723907997]
    )
    np.testing.assert_array_equal(noise.stream(7).integers(0, 2**32, 2), [4058335883, 2684764585])


def test_crosstalk_effect():
    silent = LinearGateModel(np.array([[0, 0, PI / 2], [1, 0, 0], [0, 0, 0]]))
    ct = CrossTalkModel(ideal_model(), silent)
    target, neighbor = noise.crosstalk_effect(ct, 0.4, 1.3)
    assert target == pytest.approx((PI / 2, 0.4, 1.3))
    assert neighbor.delta == 0.0


def test_crosstalk_effect_affine():
    ct = noise.random_crosstalk_model(0.05, 11)
    pts = [(0.1, 0.2), (0.7, -1.0), (0.4, -0.4)]
    outs = [np.array(noise.crosstalk_effect(ct, *p)) for p in pts]
    # pts[2] is the midpoint of pts[0] and pts[1]
    np.testing.assert_allclose(outs[2], (outs[0] + outs[1]) / 2, atol=1e-14)


def test_default_neighbor_model():
    m = noise.default_neighbor_model()
    assert realized_rotation(m, 0.3, 2.0) == pytest.approx((PI / 2, 0.3, 0.1))


@pytest.mark.parametrize(
    "obj",
    [ReadoutErrors(0.01, 0.03), noise.random_perturbed_model(0.1, 1), QtGateParams(1.0, 1.5, 2.0),
     noise.random_crosstalk_model(0.1, 2)],
)
def test_serialization_round_trip(obj):
    assert type(obj).from_dict(obj.to_dict()) == obj


def test_missing_field_named():
    with pytest.raises(InvalidArgument, match="'e01'"):
        ReadoutErrors.from_dict({"e10": 0.1})
    with pytest.raises(InvalidArgument, match="'neighbor'"):
        CrossTalkModel.from_dict({"target": ideal_model().to_dict()})
