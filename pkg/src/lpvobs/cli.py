"""Command-line front-end.

Commands:
  check       structural pre-flight report (exit 0 iff observer can exist)
  synthesize  compute the gain and write a certificate file
  simulate    one ground-truth run + filter, trace CSV and summary
  campaign    Monte-Carlo containment validation

Exit codes: 0 success, 2 infeasible or structural failure, 3 containment
violation, 64 usage error.

All configuration files are JSON with an explicit "schema" field:
lpv-model/v1, scenario/v1 and gains/v1. Matrices are nested row-major
lists (flat row-major lists are also accepted since the dimensions are
declared).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .decouple import decouple
from .detect import existence_report
from .errors import (
    BoundednessError,
    ConvergenceError,
    InfeasibleError,
    ModelStructureError,
    StructuralError,
)
from .model import LpvModel, validate_model
from .synthesize import (
    SynthesisCertificate,
    SynthesisOptions,
    error_constants,
    synthesize_convergent,
    synthesize_hinf,
    verify_lmi,
)

EXIT_OK = 0
EXIT_STRUCTURAL = 2
EXIT_CONTAINMENT = 3
EXIT_USAGE = 64

MODEL_SCHEMA = "lpv-model/v1"
SCENARIO_SCHEMA = "scenario/v1"
GAINS_SCHEMA = "gains/v1"


class CliError(Exception):
    def __init__(self, message, code=EXIT_STRUCTURAL):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """argparse with the conventional 64 exit code for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_json(path, expect_schema):
    p = Path(path)
    if not p.exists():
        raise CliError(f"{path}: file not found")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    schema = data.get("schema")
    if schema != expect_schema:
        raise CliError(f"{path}: expected schema {expect_schema!r}, found {schema!r}")
    return data


def _field(data, name, path):
    if name not in data:
        raise CliError(f"{path}: missing required field `{name}`")
    return data[name]


def _shape(value, rows, cols, name, path):
    arr = np.array(value, dtype=float)
    if arr.ndim == 1:
        if arr.size != rows * cols:
            raise CliError(f"{path}: field `{name}`: expected {rows}x{cols} ({rows * cols} entries), got {arr.size}")
        arr = arr.reshape(rows, cols)
    if arr.shape != (rows, cols):
        raise CliError(f"{path}: field `{name}`: expected shape ({rows}, {cols}), got {arr.shape}")
    return arr


def model_from_config(data: dict, path: str = "<config>") -> LpvModel:
    N = int(_field(data, "N", path))
    n = int(_field(data, "n", path))
    m = int(_field(data, "m", path))
    p = int(_field(data, "p", path))
    l = int(_field(data, "l", path))
    A_raw = _field(data, "A", path)
    B_raw = _field(data, "B", path)
    D_raw = _field(data, "D", path)
    for name, raw in (("A", A_raw), ("B", B_raw), ("D", D_raw)):
        if len(raw) != N:
            raise CliError(f"{path}: field `{name}`: expected {N} vertex matrices, got {len(raw)}")
    try:
        return LpvModel(
            A=tuple(_shape(Ai, n, n, f"A[{i}]", path) for i, Ai in enumerate(A_raw)),
            B=tuple(_shape(Bi, n, m, f"B[{i}]", path) for i, Bi in enumerate(B_raw)),
            C=_shape(_field(data, "C", path), l, n, "C", path),
            D=tuple(_shape(Di, l, m, f"D[{i}]", path) for i, Di in enumerate(D_raw)),
            G=_shape(_field(data, "G", path), n, p, "G", path),
            H=_shape(_field(data, "H", path), l, p, "H", path),
            eta_w=float(_field(data, "eta_w", path)),
            eta_v=float(_field(data, "eta_v", path)),
            x0_hat=np.asarray(_field(data, "x0_hat", path), dtype=float),
            delta0_x=float(_field(data, "delta0_x", path)),
        )
    except ModelStructureError as exc:
        raise CliError(f"{path}: {exc}")


def scenario_from_config(data: dict, path: str = "<config>") -> harness.Scenario:
    try:
        return harness.Scenario(
            K=int(_field(data, "K", path)),
            seed=int(_field(data, "seed", path)),
            weight_mode=_field(data, "weight_mode", path),
            unknown_input=tuple(_field(data, "unknown_input", path)),
            known_input=tuple(_field(data, "known_input", path)),
            noise_mode=_field(data, "noise_mode", path),
            x0_true=data.get("x0_true"),
        )
    except (ValueError, KeyError) as exc:
        raise CliError(f"{path}: {exc}")


def gains_to_dict(cert: SynthesisCertificate, constants) -> dict:
    return {
        "schema": GAINS_SCHEMA,
        "eta": cert.eta,
        "S": cert.S.tolist(),
        "Y": cert.Y.tolist(),
        "L_tilde": cert.L_tilde.tolist(),
        "margin": cert.margin,
        "min_block_eig": cert.min_block_eig,
        "solver_status": cert.solver_status,
        "solver_name": cert.solver_name,
        "cond_S": cert.cond_S,
        "theta": constants.theta,
        "beta": constants.beta,
        "beta_wc": constants.beta_wc,
        "eta_bar": constants.eta_bar,
        "warnings": list(cert.warnings),
    }


def gains_from_config(data: dict, n: int, q: int, path: str = "<gains>") -> SynthesisCertificate:
    return SynthesisCertificate(
        eta=float(_field(data, "eta", path)),
        S=_shape(_field(data, "S", path), n, n, "S", path),
        Y=_shape(_field(data, "Y", path), n, q, "Y", path),
        L_tilde=_shape(_field(data, "L_tilde", path), n, q, "L_tilde", path),
        margin=float(_field(data, "margin", path)),
        min_block_eig=float(data.get("min_block_eig", 0.0)),
        solver_status=str(data.get("solver_status", "unknown")),
        solver_name=data.get("solver_name"),
        cond_S=float(data.get("cond_S", 0.0)),
        warnings=tuple(data.get("warnings", ())),
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def trace_to_csv(trace: harness.SimulationTrace, path) -> None:
    """Write the trace with full precision; byte-identical for identical
    inputs. Row k carries the state at time k and, under the one-step
    delay convention, the estimate of the unknown input at time k-1."""
    n = trace.x_true.shape[1]
    p = trace.d_true.shape[1]
    N = trace.lam.shape[1]
    cols = (
        ["k"]
        + [f"x_true_{i + 1}" for i in range(n)]
        + [f"x_hat_{i + 1}" for i in range(n)]
        + ["delta_x", "err_x"]
        + [f"d_true_{i + 1}" for i in range(p)]
        + [f"d_hat_{i + 1}" for i in range(p)]
        + ["delta_d", "err_d"]
        + [f"lambda_{i + 1}" for i in range(N)]
    )
    lines = [",".join(cols)]
    for k in range(1, trace.K + 1):
        row = [str(k)]
        row += [_fmt(v) for v in trace.x_true[k]]
        row += [_fmt(v) for v in trace.x_hat[k]]
        row += [_fmt(trace.delta_x[k]), _fmt(trace.err_x[k])]
        row += [_fmt(v) for v in trace.d_true[k - 1]]
        row += [_fmt(v) for v in trace.d_hat[k - 1]]
        row += [_fmt(trace.delta_d[k - 1]), _fmt(trace.err_d[k - 1])]
        row += [_fmt(v) for v in trace.lam[k]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _prepare(model_path):
    data = _load_json(model_path, MODEL_SCHEMA)
    model = model_from_config(data, str(model_path))
    report = validate_model(model)
    return model, report


def cmd_check(args) -> int:
    model, vreport = _prepare(args.model)
    lines = [vreport.render()]
    code = EXIT_OK
    if not vreport.ok:
        code = EXIT_STRUCTURAL
        lines.append("structural validation failed; skipping detectability checks")
        dreport = None
    else:
        dm = decouple(model, require_boundedness=False)
        dreport = existence_report(model, dm)
        lines.append(dreport.render())
        if not dreport.overall_necessary_ok:
            code = EXIT_STRUCTURAL
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return code


def cmd_synthesize(args) -> int:
    model, vreport = _prepare(args.model)
    if not vreport.ok:
        print(vreport.render())
        return EXIT_STRUCTURAL
    dm = decouple(model)
    opts = SynthesisOptions(force=args.force)
    if args.margin is not None:
        opts.margin = args.margin
    try:
        if args.mode == "convergent":
            cert = synthesize_convergent(dm, opts)
        else:
            cert = synthesize_hinf(dm, opts)
    except StructuralError as exc:
        print(f"synthesis refused: {exc}")
        return EXIT_STRUCTURAL
    except InfeasibleError as exc:
        print(f"synthesis failed: {exc} (status: {exc.solver_status})")
        return EXIT_STRUCTURAL
    except ConvergenceError as exc:
        print(f"convergent synthesis failed: {exc}")
        return EXIT_STRUCTURAL
    constants = error_constants(dm, cert.L_tilde)
    Path(args.out).write_text(json.dumps(gains_to_dict(cert, constants), indent=2) + "\n")
    print(f"eta = {cert.eta:.6g} ({cert.solver_name}, {cert.solver_status})")
    print(f"L_tilde = {cert.L_tilde.ravel().tolist()}")
    print(f"theta = {constants.theta:.6g}, beta = {constants.beta:.6g}, "
          f"beta_wc = {constants.beta_wc:.6g}, eta_bar = {constants.eta_bar:.6g}")
    if constants.theta < 1.0:
        from .observer import steady_state_radii
        dx_inf, dd_inf = steady_state_radii(constants, dm)
        print(f"steady-state radii: state {dx_inf:.6g}, input {dd_inf:.6g}")
    else:
        print("radii do not converge (contraction factor >= 1)")
    for w in cert.warnings:
        print(f"warning: {w}")
    print(f"gains written to {args.out}")
    return EXIT_OK


def _load_design(args, model):
    dm = decouple(model)
    gdata = _load_json(args.gains, GAINS_SCHEMA)
    cert = gains_from_config(gdata, model.n, dm.q, str(args.gains))
    constants = error_constants(dm, cert.L_tilde)
    stored_theta = gdata.get("theta")
    if stored_theta is not None and abs(stored_theta - constants.theta) > 1e-6 * max(1.0, constants.theta):
        print(f"warning: stored theta {stored_theta} differs from recomputed {constants.theta}")
    return dm, cert, constants


def cmd_simulate(args) -> int:
    model, vreport = _prepare(args.model)
    if not vreport.ok:
        print(vreport.render())
        return EXIT_STRUCTURAL
    sdata = _load_json(args.scenario, SCENARIO_SCHEMA)
    scenario = scenario_from_config(sdata, str(args.scenario))
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    dm, cert, constants = _load_design(args, model)
    truth = harness.simulate_plant(model, scenario)
    trace = harness.run_observer(dm, cert.L_tilde, constants, truth, args.radius_mode)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    trace_to_csv(trace, outdir / "trace.csv")
    violations = trace.violations()
    tx, td = trace.tightness()
    summary = {
        "K": trace.K,
        "seed": scenario.seed,
        "radius_mode": args.radius_mode,
        "violations": len(violations),
        "max_tightness_x": tx,
        "max_tightness_d": td,
        "final_delta_x": float(trace.delta_x[-1]),
        "final_delta_d": float(trace.delta_d[-1]),
        "max_err_x": float(trace.err_x.max()),
        "max_err_d": float(trace.err_d.max()) if trace.err_d.size else 0.0,
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    if violations:
        kind, k, err, bound = violations[0]
        print(f"CONTAINMENT VIOLATION: {kind}[{k}] err {err:.6g} > bound {bound:.6g}")
        return EXIT_CONTAINMENT
    print(f"trace written to {outdir / 'trace.csv'}")
    return EXIT_OK


def cmd_campaign(args) -> int:
    model, vreport = _prepare(args.model)
    if not vreport.ok:
        print(vreport.render())
        return EXIT_STRUCTURAL
    sdata = _load_json(args.scenario, SCENARIO_SCHEMA)
    scenario = scenario_from_config(sdata, str(args.scenario))
    dm, cert, constants = _load_design(args, model)
    if args.negative_control:
        constants = dataclasses.replace(constants, theta=constants.theta / 2.0)
        print("negative control: contraction factor deliberately halved")
    report = harness.containment_campaign(
        dm, cert.L_tilde, constants, [scenario],
        trials=args.trials, seed=args.seed, radius_mode=args.radius_mode,
    )
    text = report.render()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK if report.ok else EXIT_CONTAINMENT


def build_parser() -> _Parser:
    parser = _Parser(prog="lpvobs", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("check", help="structural pre-flight checks")
    pc.add_argument("--model", required=True)
    pc.add_argument("--out", default=None, help="also write the report here")
    pc.set_defaults(func=cmd_check)

    ps = sub.add_parser("synthesize", help="compute the observer gain")
    ps.add_argument("--model", required=True)
    ps.add_argument("--out", required=True, help="gains JSON output path")
    ps.add_argument("--mode", choices=("optimal", "convergent"), default="optimal")
    ps.add_argument("--margin", type=float, default=None)
    ps.add_argument("--force", action="store_true",
                    help="attempt synthesis even if the existence check fails")
    ps.set_defaults(func=cmd_synthesize)

    pm = sub.add_parser("simulate", help="single run: trace CSV + summary")
    pm.add_argument("--model", required=True)
    pm.add_argument("--scenario", required=True)
    pm.add_argument("--gains", required=True)
    pm.add_argument("--out", required=True, help="output directory")
    pm.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    pm.add_argument("--radius-mode", choices=("worst_case", "time_varying"),
                    default="worst_case", dest="radius_mode")
    pm.set_defaults(func=cmd_simulate)

    pg = sub.add_parser("campaign", help="Monte-Carlo containment campaign")
    pg.add_argument("--model", required=True)
    pg.add_argument("--scenario", required=True)
    pg.add_argument("--gains", required=True)
    pg.add_argument("--trials", type=int, required=True)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--out", default=None)
    pg.add_argument("--radius-mode", choices=("worst_case", "time_varying"),
                    default="worst_case", dest="radius_mode")
    pg.add_argument("--negative-control", action="store_true",
                    help="corrupt the radius recursion to prove the detector works")
    pg.set_defaults(func=cmd_campaign)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", None) is not None and args.trials < 1:
        parser.error("--trials must be >= 1")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BoundednessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL


if __name__ == "__main__":
    sys.exit(main())
