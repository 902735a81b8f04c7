import math

import numpy as np
import pytest

from iontomo import noise, qmath, sim, tomo
from iontomo.errors import InvalidArgument
from iontomo.noise import QtGateParams, ReadoutErrors
from iontomo.sim import EXACT, NoiseContext

from conftest import haar_unitary

PI = math.pi
RO = ReadoutErrors(0.01, 0.03)


def test_readout_bright_only_zero():
    est = tomo.estimate_readout_errors((10_000, 0), (100, 9_900))
    assert est.e10 == 0.0 and est.e01 == 0.01


def test_readout_exact_oracle():
    est = tomo.calibrate_readout(NoiseContext(RO), EXACT, 0)
    assert abs(est.e10 - 0.01) <= 1e-12 and abs(est.e01 - 0.03) <= 1e-12
    assert est.stderr == (0.0, 0.0)


def test_readout_ci_half_width():
    # 3 sqrt(p (1-p) / N) at p = 0.01, N = 1e5
    est = tomo.estimate_readout_errors((99_000, 1_000), (3_000, 97_000))
    assert 3 * est.stderr[0] == pytest.approx(9.439279633531365e-4, rel=1e-12)


def test_readout_three_sigma_coverage():
    ctx = NoiseContext(RO)
    bound = 3 * math.sqrt(0.01 * 0.99 / 1e5)
    hits = sum(abs(tomo.calibrate_readout(ctx, 10**5, (4, s)).e10 - 0.01) <= bound for s in range(1000))
    assert hits >= 990


def test_readout_rejects_empty_runs():
    with pytest.raises(InvalidArgument):
        tomo.estimate_readout_errors((0, 0), (5, 5))


def test_qt_circuit_contract():
    circuits = tomo.qt_gate_circuits()
    assert len(circuits) == 4
    for c in circuits:
        assert {g.kind for g in c.gates} <= {"SqrtX", "SqrtY"}
        assert 1 <= len(c.gates) <= 3


def _sim_p1(params, readout):
    ctx = NoiseContext(readout, None, QtGateParams(*params))
    return np.array([sim.exact_probabilities(c, ctx)[1] for c in tomo.qt_gate_circuits()])


def test_qt_jacobian_full_rank():
    x0, h = np.full(3, PI / 2), 1e-6
    jac = np.column_stack(
        [(_sim_p1(x0 + h * e, RO) - _sim_p1(x0 - h * e, RO)) / (2 * h) for e in np.eye(3)]
    )
    s = np.linalg.svd(jac, compute_uv=False)
    assert np.linalg.matrix_rank(jac, tol=1e-6) == 3
    assert s[-1] > 0.1


def test_qt_model_probabilities_oracle():
    # independent evaluation with scipy.linalg.expm, (a, b, c) = (1.58, 1.55, 1.6)
    frozen = [0.4799786696408494, 0.5198840935140876, 0.46713801249818954, 0.48442877142674795]
    np.testing.assert_allclose(tomo.qt_model_probabilities((1.58, 1.55, 1.6), RO)[:, 1], frozen, atol=1e-14)
    np.testing.assert_allclose(_sim_p1((1.58, 1.55, 1.6), RO), frozen, atol=1e-14)


def test_qt_estimate_ideal_exact():
    data = sim.run_protocol(tomo.qt_gate_circuits(), NoiseContext(), EXACT, 0)
    est = tomo.estimate_qt_gates(data, noise.IDEAL_READOUT)
    np.testing.assert_allclose(est.params.as_array(), PI / 2, atol=1e-6)
    assert est.stderr == (0.0, 0.0, 0.0)


def test_qt_estimate_recovery_sweep():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        truth = QtGateParams(*rng.uniform(PI / 2 - 0.05, PI / 2 + 0.05, 3))
        data = sim.run_protocol(tomo.qt_gate_circuits(), NoiseContext(RO, None, truth), EXACT, 0)
        est = tomo.estimate_qt_gates(data, RO, n_bootstrap=0)
        worst = max(worst, np.max(np.abs(est.params.as_array() - truth.as_array())))
    assert worst <= 1e-6


def test_qt_estimate_stderr_methods_agree():
    truth = noise.random_qt_gate_params(0.01, 3)
    data = sim.run_protocol(tomo.qt_gate_circuits(), NoiseContext(RO, None, truth), 10**4, 5)
    boot = tomo.estimate_qt_gates(data, RO, n_bootstrap=200, seed=1)
    lin = tomo.estimate_qt_gates(data, RO, n_bootstrap=0)
    assert boot.params == lin.params
    np.testing.assert_allclose(boot.stderr, lin.stderr, rtol=0.3)
    assert np.all(np.abs(boot.params.as_array() - truth.as_array()) <= 5 * np.array(boot.stderr))


def test_qt_estimate_rejects_wrong_shape():
    data = sim.run_protocol(tomo.standard_protocol_circuits(), NoiseContext(), 10, 0)
    with pytest.raises(InvalidArgument):
        tomo.estimate_qt_gates(data, RO)


def test_standard_protocol_contract():
    circuits = tomo.standard_protocol_circuits()
    assert len(circuits) == 12
    assert tomo.PREP_KINDS == ("I", "X", "SqrtX", "SqrtY")
    assert circuits[0].gates == ()
    np.testing.assert_allclose(sim.exact_probabilities(circuits[0], NoiseContext()), [1, 0])


def test_mle_identity_exact():
    data = sim.run_protocol(tomo.standard_protocol_circuits(), NoiseContext(), EXACT, 0)
    est = tomo.process_tomography_mle(data)
    assert qmath.fidelity(est.unitary, np.eye(2)) >= 1 - 1e-10


def test_mle_exact_consistency_sweep():
    rng = np.random.default_rng(11)
    worst = 0.0
    for t in range(100):
        u = haar_unitary(rng)
        qt = noise.random_qt_gate_params(0.05, (11, t))
        ctx = NoiseContext(RO, None, qt)
        data = sim.run_protocol(tomo.standard_protocol_circuits(sim.fixed_unitary(u)), ctx, EXACT, 0)
        worst = max(worst, qmath.infidelity(tomo.process_tomography_mle(data, RO, qt).unitary, u))
    assert worst <= 1e-9


def test_mle_fuzzy_model_beats_ideal_gates():
    rng = np.random.default_rng(0)
    fuzzy, naive, margins = [], [], []
    for t in range(100):
        qt = noise.random_qt_gate_params(0.01, (1, t))
        u = haar_unitary(rng)
        ctx = NoiseContext(RO, None, qt)
        data = sim.run_protocol(tomo.standard_protocol_circuits(sim.fixed_unitary(u)), ctx, 10**4, (2, t))
        est = tomo.process_tomography_mle(data, RO, qt)
        fuzzy.append(qmath.infidelity(est.unitary, u))
        naive.append(qmath.infidelity(tomo.process_tomography_mle(data, RO).unitary, u))
        # no gross optimizer failure: the optimum is at least as likely as the truth
        margins.append(est.loglik - tomo.process_loglik(data, u, RO, qt))
    assert np.median(fuzzy) < np.median(naive)
    assert min(margins) >= -1e-9


def test_mle_accepts_estimate_wrappers():
    qt = noise.random_qt_gate_params(0.02, 5)
    ctx = NoiseContext(RO, None, qt)
    ro_est = tomo.calibrate_readout(ctx, EXACT, 0)
    qt_est = tomo.estimate_qt_gates(sim.run_protocol(tomo.qt_gate_circuits(), ctx, EXACT, 0), ro_est)
    u = qmath.u_rotation((1.0, 0.5, 2.0))
    data = sim.run_protocol(tomo.standard_protocol_circuits(sim.fixed_unitary(u)), ctx, EXACT, 0)
    est = tomo.process_tomography_mle(data, ro_est, qt_est)
    assert qmath.infidelity(est.unitary, u) <= 1e-9
    assert qmath.infidelity(qmath.u_rotation(est.params), u) <= 1e-12


def test_mle_rejects_wrong_circuits():
    data = sim.run_protocol(tomo.qt_gate_circuits(), NoiseContext(), 10, 0)
    with pytest.raises(InvalidArgument):
        tomo.process_tomography_mle(data)
