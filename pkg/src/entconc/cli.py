"""Command-line front end: ``entconc {run,sweep,optimize,validate}``.

Exit codes: 0 success, 1 validation failure, 2 parameter guard, 3 I/O error.
Data go to ``--output`` (or stdout); sweeps written to a file also get a
``<output>.meta.json`` sidecar carrying the configuration and a timestamp,
so the data file itself is byte-identical across identical runs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import ConcentrationError
from .fock import PSD_FLOOR
from .measures import log_negativity
from .optimize import (
    SweepGrid,
    optimize_displacement,
    optimize_squeezing,
    sweep,
    sweep_columns,
)
from .protocols import (
    Displacement,
    NoLocalOp,
    ProtocolParams,
    Squeezing,
    run_realistic,
    shared_state,
)
from .states import TmsvSpec
from .validation import run_checks

EXIT_OK, EXIT_VALIDATION, EXIT_GUARD, EXIT_IO = 0, 1, 2, 3

PARAM_KEYS = {
    "lambda": float,
    "reflectance": float,
    "eta": float,
    "nu": float,
    "alpha": float,
    "beta": float,
    "squeezing": float,
    "cutoff": int,
    "grid": list,
    "optimize_alpha": bool,
    "output": str,
    "format": str,
    "workers": int,
    "detector_model": str,
    "drop_inefficiency_loss": bool,
}
DEFAULTS = {
    "reflectance": 0.1,
    "eta": 1.0,
    "nu": 0.0,
    "cutoff": 10,
    "grid": [],
    "optimize_alpha": False,
    "format": None,
    "workers": 1,
    "detector_model": "reparametrize",
    "drop_inefficiency_loss": False,
}


class GuardExit(Exception):
    def __init__(self, tag: str, message: str, code: int = EXIT_GUARD):
        super().__init__(message)
        self.tag = tag
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so that config-file values can be told apart from flags
    common.add_argument("--lambda", dest="lambda", type=float, help="TMSV parameter tanh(r)")
    common.add_argument("--reflectance", type=float, help="tap beam-splitter reflectance R")
    common.add_argument("--eta", type=float, help="detector efficiency")
    common.add_argument("--nu", type=float, help="channel loss factor per mode")
    common.add_argument("--alpha", type=float, help="displacement on mode A")
    common.add_argument("--beta", type=float, help="displacement on mode B")
    common.add_argument("--squeezing", type=float, help="local squeezing constant s")
    common.add_argument("--cutoff", type=int, help="Fock cutoff n_max (default 10)")
    common.add_argument(
        "--grid", action="append", metavar="NAME:START:STOP:STEP", help="sweep grid (repeatable)"
    )
    common.add_argument(
        "--optimize-alpha", action="store_true", default=None, help="optimize beta = -alpha"
    )
    common.add_argument("--output", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--config", help="flat JSON file of defaults; flags take precedence")
    common.add_argument("--workers", type=int, help="parallel worker processes for sweeps")
    common.add_argument("--detector-model", choices=("reparametrize", "ancilla_loss"))
    common.add_argument(
        "--drop-inefficiency-loss", action="store_true", default=None,
        help="neglect the signal loss that accompanies detector inefficiency",
    )

    parser = argparse.ArgumentParser(
        prog="entconc",
        description="Entanglement concentration of two-mode squeezed vacuum by local "
        "photon subtraction with local displacement or squeezing.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one protocol instance")
    sub.add_parser("sweep", parents=[common], help="evaluate the protocol over grids")
    opt = sub.add_parser("optimize", parents=[common], help="optimize the local operation")
    opt.add_argument("--target", choices=("alpha", "squeezing"), default="alpha")
    sub.add_parser("validate", parents=[common], help="run the built-in oracle checks")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise GuardExit("io", f"cannot read config {args.config}: {exc}", EXIT_IO)
        except json.JSONDecodeError as exc:
            raise GuardExit("parameter_guard", f"config {args.config} is not valid JSON: {exc}")
        if not isinstance(loaded, dict):
            raise GuardExit("parameter_guard", "config file must hold a flat JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in PARAM_KEYS:
                raise GuardExit("parameter_guard", f"unknown config key {key!r}")
            if key == "grid" and isinstance(value, str):
                value = [value]
            cfg[key] = value
    for key in PARAM_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def local_op_from(cfg: dict):
    if cfg.get("squeezing") is not None:
        if cfg.get("alpha") is not None or cfg.get("beta") is not None:
            raise GuardExit("parameter_guard", "choose either squeezing or displacement, not both")
        return Squeezing(cfg["squeezing"])
    alpha, beta = cfg.get("alpha"), cfg.get("beta")
    if alpha is None and beta is None:
        return NoLocalOp()
    if alpha is None:
        alpha = -beta
    if beta is None:
        beta = -alpha
    return Displacement(alpha, beta)


def params_from(cfg: dict, lam_required: bool = True) -> ProtocolParams:
    lam = cfg.get("lambda")
    if lam is None:
        if lam_required:
            raise GuardExit("parameter_guard", "--lambda is required")
        lam = 0.1
    return ProtocolParams(
        lam=lam,
        reflectance=cfg["reflectance"],
        eta=cfg["eta"],
        nu=cfg["nu"],
        local_op=local_op_from(cfg),
        cutoff=cfg["cutoff"],
        detector_model=cfg["detector_model"],
        drop_inefficiency_loss=bool(cfg["drop_inefficiency_loss"]),
    )


def _op_fields(op) -> dict:
    return {
        "alpha": op.alpha.real if isinstance(op, Displacement) else None,
        "beta": op.beta.real if isinstance(op, Displacement) else None,
        "squeezing": op.s if isinstance(op, Squeezing) else None,
    }


def run_record(params: ProtocolParams) -> dict:
    out = run_realistic(params)
    lowest = float(out.rho_out_normalized.eigenvalues()[0])
    return {
        "lambda": params.lam,
        "reflectance": params.reflectance,
        "eta": params.eta,
        "nu": params.nu,
        **_op_fields(params.local_op),
        "cutoff": params.cutoff,
        "E_N": out.log_negativity,
        "P_succ": out.success_probability,
        "E_N_input": log_negativity(shared_state(params)).log_negativity,
        "truncation_deficit": TmsvSpec(params.lam, params.cutoff).norm_deficit,
        "min_eigenvalue": lowest,
        "psd_floor": PSD_FLOOR,
        "min_pt_eigenvalue": out.entanglement.min_pt_eigenvalue,
    }


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # repr is the shortest round-tripping form and ignores the locale
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def render(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        payload = [{c: r.get(c) for c in columns} for r in rows]
        return json.dumps(payload if len(payload) != 1 else payload[0], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _open_output(path: str | None):
    if path is None:
        return None
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise GuardExit("io", f"cannot write {path}: {exc}", EXIT_IO)


def _emit(text: str, handle) -> None:
    if handle is None:
        sys.stdout.write(text)
        return
    try:
        with handle:
            handle.write(text)
    except OSError as exc:
        raise GuardExit("io", f"write failed: {exc}", EXIT_IO)


def cmd_run(cfg: dict) -> int:
    params = params_from(cfg)
    handle = _open_output(cfg.get("output"))
    if cfg["optimize_alpha"]:
        opt = optimize_displacement(params.with_op(NoLocalOp()))
        params = params.displaced(opt.value)
    record = run_record(params)
    _emit(render([record], list(record), cfg["format"] or "json"), handle)
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    grid_texts = cfg["grid"]
    if not grid_texts:
        raise GuardExit("parameter_guard", "sweep needs at least one --grid")
    try:
        grids = [SweepGrid.parse(g) for g in grid_texts]
    except ValueError as exc:
        raise GuardExit("parameter_guard", str(exc))
    names = [g.name for g in grids]
    params = params_from(cfg, lam_required="lambda" not in names)
    handle = _open_output(cfg.get("output"))
    started = time.perf_counter()
    rows = sweep(params, grids, optimize_alpha=cfg["optimize_alpha"], workers=cfg["workers"])
    text = render(rows, sweep_columns(names, cfg["optimize_alpha"]), cfg["format"] or "csv")
    _emit(text, handle)
    if cfg.get("output"):
        meta = {
            "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(),
            "elapsed_seconds": time.perf_counter() - started,
            "rows": len(rows),
            "failed_rows": sum(1 for r in rows if r["error"]),
            "config": {k: v for k, v in cfg.items() if k != "output"},
        }
        try:
            Path(cfg["output"] + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
        except OSError as exc:
            raise GuardExit("io", f"cannot write metadata sidecar: {exc}", EXIT_IO)
    return EXIT_OK


def cmd_optimize(cfg: dict, target: str) -> int:
    params = params_from(cfg).with_op(NoLocalOp())
    handle = _open_output(cfg.get("output"))
    opt = optimize_squeezing(params) if target == "squeezing" else optimize_displacement(params)
    record = {
        "lambda": params.lam,
        "reflectance": params.reflectance,
        "eta": params.eta,
        "nu": params.nu,
        "cutoff": params.cutoff,
        "parameter": opt.parameter,
        "optimum": opt.value,
        "E_N": opt.e_n,
        "P_succ": opt.p_succ,
        "iterations": opt.iterations,
        "bracket_lo": opt.bracket[0],
        "bracket_hi": opt.bracket[1],
    }
    _emit(render([record], list(record), cfg["format"] or "json"), handle)
    return EXIT_OK


def cmd_validate(cfg: dict) -> int:
    results = run_checks(cutoff=cfg["cutoff"], lam=cfg.get("lambda"))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def _report_error(tag: str, message: str) -> None:
    print(json.dumps({"error": tag, "message": message}), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "optimize":
            return cmd_optimize(cfg, args.target)
        return cmd_validate(cfg)
    except GuardExit as exc:
        _report_error(exc.tag, str(exc))
        return exc.code
    except ConcentrationError as exc:
        _report_error(exc.tag, str(exc))
        return EXIT_GUARD
    except (TypeError, ValueError) as exc:
        _report_error("parameter_guard", str(exc))
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
