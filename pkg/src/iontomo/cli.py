"""Command-line entry point: ``iontomo <subcommand> [flags]``.

Exit codes: 0 success, 2 usage/config error, 3 estimation or synthesis
failure, 4 acceptance threshold missed (only with ``--check``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import calib, campaigns, noise, sim, tomo
from .campaigns import ExperimentConfig
from .errors import EstimationFailure, InvalidArgument, SynthesisFailure

log = logging.getLogger("iontomo")

EXIT_USAGE = 2
EXIT_FAILURE = 3
EXIT_CHECK = 4


class UsageError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v) or math.isnan(v):
            return str(v)
        return format(v, ".17g")
    return str(v)


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rows[0]))
    for r in rows:
        w.writerow([fmt(v) for v in r.values()])
    return buf.getvalue()


def write_csv(rows: list[dict], path: str | None) -> str:
    text = csv_text(rows)
    _emit(text, path)
    return text


def write_json(obj, path: str | None) -> str:
    text = json.dumps(_plain(obj), indent=2, sort_keys=False) + "\n"
    _emit(text, path)
    return text


def _emit(text, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _load_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read {what} {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{what} {path} is not valid JSON: {e}") from None


def build_config(args, experiment: str) -> ExperimentConfig:
    base = {}
    if args.config:
        base = _load_json(args.config, "config file")
        if not isinstance(base, dict):
            raise UsageError("config file must hold a JSON object")
    base["experiment"] = experiment
    for name in ("seed", "trials", "epsilon", "out", "workers"):
        v = getattr(args, name, None)
        if v is not None:
            base[name] = v
    if args.shots is not None:
        base["shots"] = args.shots
    if getattr(args, "e10", None) is not None or getattr(args, "e01", None) is not None:
        ro = dict(base.get("readout") or {"e10": 0.01, "e01": 0.03})
        if args.e10 is not None:
            ro["e10"] = args.e10
        if args.e01 is not None:
            ro["e01"] = args.e01
        base["readout"] = ro
    try:
        return ExperimentConfig.from_dict(base)
    except (InvalidArgument, TypeError) as e:
        raise UsageError(f"invalid configuration: {e}") from None


def _summary_path(out):
    if not out:
        return None
    p = Path(out)
    return str(p.with_name(p.stem + ".summary" + (p.suffix or ".csv")))


def cmd_readout_calib(args) -> int:
    cfg = build_config(args, "readout-calib")
    report = campaigns.run_readout_calib(cfg)
    write_json(report, cfg.out)
    return _check(args, campaigns.check_readout_calib(report))


def cmd_fig2b(args) -> int:
    cfg = build_config(args, "fig2b")
    rows = campaigns.run_fig2b(cfg)
    write_csv(rows, cfg.out)
    return _check(args, campaigns.check_fig2b(rows))


def cmd_fig3(args) -> int:
    cfg = build_config(args, "fig3")
    rows = campaigns.run_fig3(cfg)
    write_csv(rows, cfg.out)
    cols = ["nines_reconstructed", "nines_standard"]
    summary = campaigns.summarize(rows, cols)
    if cfg.out:
        write_csv(summary, _summary_path(cfg.out))
    else:
        sys.stderr.write(csv_text(summary))
    return _check(args, campaigns.check_fig3(rows))


def cmd_crosstalk(args) -> int:
    cfg = build_config(args, "crosstalk")
    rows = campaigns.run_crosstalk(cfg)
    write_csv(rows, cfg.out)
    summary = campaigns.summarize(rows, ["F_joint", "F_q1", "F_q2", "F_joint_uncompensated"])
    if cfg.out:
        write_csv(summary, _summary_path(cfg.out))
    return _check(args, campaigns.check_crosstalk(rows))


def _check(args, fails) -> int:
    if not args.check:
        return 0
    for f in fails:
        sys.stderr.write(f"CHECK FAILED: {f}\n")
    return EXIT_CHECK if fails else 0


def _dataset(path) -> sim.TomographyDataset:
    try:
        return sim.TomographyDataset.from_json(_load_json(path, "dataset"))
    except InvalidArgument as e:
        raise UsageError(f"{path}: {e}") from None


def _model(path, cls):
    try:
        return cls.from_dict(_load_json(path, "model file"))
    except (InvalidArgument, TypeError, ValueError) as e:
        raise UsageError(f"{path}: {e}") from None


def run_pipeline(
    readout_data=None,
    qt_data=None,
    process_data=(),
    commanded=None,
    readout_model=None,
    qt_model=None,
    n_bootstrap: int = 100,
    seed: int = 0,
) -> dict:
    """Estimators only, on given datasets: readout -> QT gates -> processes -> linear model."""
    out = {}
    if readout_data is not None:
        by_id = dict(zip(readout_data.circuit_ids, readout_data.counts))
        for cid in ("bright", "dark"):
            if cid not in by_id:
                raise InvalidArgument(f"readout dataset lacks circuit {cid!r}")
        ro_est = tomo.estimate_readout_errors(by_id["bright"], by_id["dark"], exact=readout_data.is_exact)
        ro = ro_est.errors
        out["readout"] = ro_est.to_dict()
    elif readout_model is not None:
        ro = readout_model
        out["readout"] = ro.to_dict()
    else:
        ro = noise.IDEAL_READOUT
    if qt_data is not None:
        expected = [c.circuit_id for c in tomo.qt_gate_circuits()]
        if list(qt_data.circuit_ids) != expected:
            raise InvalidArgument(f"QT-gate dataset must hold circuits {expected} in order")
        qt_est = tomo.estimate_qt_gates(qt_data, ro, n_bootstrap=n_bootstrap, seed=seed)
        qt = qt_est.params
        out["qt_gates"] = qt_est.to_dict()
    elif qt_model is not None:
        qt = qt_model
        out["qt_gates"] = qt.to_dict()
    else:
        qt = noise.IDEAL_QT_GATES
    estimates = [tomo.process_tomography_mle(d, ro, qt) for d in process_data]
    if estimates:
        out["processes"] = [e.to_dict() for e in estimates]
    if commanded is not None:
        if len(commanded) != len(estimates):
            raise InvalidArgument("one commanded (phi, delta) pair per process dataset is required")
        cal = calib.CalibrationSet(tuple((c, e.params) for c, e in zip(commanded, estimates)))
        out["linear_model"] = calib.fit_linear_model(cal).to_dict()
    return out


def _parse_commanded(items):
    if items is None:
        return None
    out = []
    for s in items:
        try:
            phi, delta = (float(v) for v in s.split(","))
        except ValueError:
            raise UsageError(f"--commanded expects PHI,DELTA pairs, got {s!r}") from None
        out.append((phi, delta))
    return out


def cmd_pipeline(args) -> int:
    if not (args.readout_data or args.qt_data or args.process_data):
        raise UsageError("pipeline needs at least one of --readout-data, --qt-data, --process-data")
    result = run_pipeline(
        readout_data=_dataset(args.readout_data) if args.readout_data else None,
        qt_data=_dataset(args.qt_data) if args.qt_data else None,
        process_data=[_dataset(p) for p in args.process_data or ()],
        commanded=_parse_commanded(args.commanded),
        readout_model=_model(args.readout_model, noise.ReadoutErrors) if args.readout_model else None,
        qt_model=_model(args.qt_model, noise.QtGateParams) if args.qt_model else None,
        n_bootstrap=args.bootstrap,
        seed=args.seed or 0,
    )
    write_json(result, args.out)
    return 0


def cmd_simulate(args) -> int:
    """Write simulated datasets in the pipeline's input format."""
    ro = noise.ReadoutErrors(args.e10 if args.e10 is not None else 0.01, args.e01 if args.e01 is not None else 0.03)
    qt = _model(args.qt_model, noise.QtGateParams) if args.qt_model else noise.IDEAL_QT_GATES
    model = _model(args.gate_model, noise.LinearGateModel) if args.gate_model else noise.ideal_model()
    ctx = sim.NoiseContext(ro, model, qt)
    shots = campaigns.parse_shots(args.shots or "10000")[0]
    seed = args.seed or 0
    if args.protocol == "readout":
        circuits = list(tomo.readout_calibration_circuits())
    elif args.protocol == "qt-gates":
        circuits = tomo.qt_gate_circuits()
    else:
        if args.pulse is None:
            raise UsageError("--protocol process needs --pulse PHI,DELTA")
        (phi, delta), = _parse_commanded([args.pulse])
        circuits = tomo.standard_protocol_circuits(sim.pulse(phi, delta))
    data = sim.run_protocol(circuits, ctx, shots, seed)
    write_json(data.to_json(), args.out)
    return 0


def _experiment_flags(p):
    p.add_argument("--config", metavar="PATH", help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--trials", type=int, metavar="N")
    p.add_argument("--shots", metavar="LIST|exact", help="comma-separated shots per circuit, or 'exact'")
    p.add_argument("--epsilon", type=float, metavar="F")
    p.add_argument("--e10", type=float)
    p.add_argument("--e01", type=float)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--workers", type=int, help="worker processes for trials (default 1)")
    p.add_argument("--check", action="store_true", help="exit 4 when acceptance thresholds are missed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iontomo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("readout-calib", cmd_readout_calib),
        ("fig2b", cmd_fig2b),
        ("fig3", cmd_fig3),
        ("crosstalk", cmd_crosstalk),
    ):
        p = sub.add_parser(name)
        _experiment_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("pipeline", help="run the estimators on JSON datasets")
    p.add_argument("--readout-data", metavar="PATH")
    p.add_argument("--qt-data", metavar="PATH")
    p.add_argument("--process-data", metavar="PATH", nargs="+")
    p.add_argument("--commanded", metavar="PHI,DELTA", nargs="+", help="commanded pulse per process dataset")
    p.add_argument("--readout-model", metavar="PATH")
    p.add_argument("--qt-model", metavar="PATH")
    p.add_argument("--bootstrap", type=int, default=100, help="bootstrap resamples for QT-gate errors")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--check", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("simulate", help="write a simulated dataset as JSON")
    p.add_argument("--protocol", choices=("readout", "qt-gates", "process"), required=True)
    p.add_argument("--pulse", metavar="PHI,DELTA")
    p.add_argument("--gate-model", metavar="PATH")
    p.add_argument("--qt-model", metavar="PATH")
    p.add_argument("--e10", type=float)
    p.add_argument("--e01", type=float)
    p.add_argument("--shots", metavar="N|exact")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, InvalidArgument) as e:
        sys.stderr.write(f"iontomo: error: {e}\n")
        return EXIT_USAGE
    except (EstimationFailure, SynthesisFailure) as e:
        sys.stderr.write(f"iontomo: failure: {e}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
