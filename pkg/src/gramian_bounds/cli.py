"""Command-line front end.

Subcommands: reproduce, capacity, err, gramian, verify-thm1, verify-thm2,
conjecture.  Every command is deterministic in (--seed, --precision-bits):
rerunning writes byte-identical files.  Exit codes: 0 success, 1 operational
error (machine-readable JSON on stdout), 2 = a verify command found a
violated bound.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys as _sys
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context

import numpy as np

from . import numerics
from .approx import cached_err_region, err_capacity_trend, err_region
from .bounds import (
    BoundReport,
    conjecture_scan,
    derive_seed,
    reproduce_intro_constants,
    thm1_nonasymptotic,
    thm1_proof_identities,
    verify_thm1,
    verify_thm2,
)
from .capacity import (
    SQUARE_CONSTANT_QUOTED,
    TRIANGLE_CONSTANT_QUOTED,
    cap_closed_form,
    cap_estimate,
)
from .errors import GramianBoundsError
from .gramian import gramian
from .regions import Region, parse_region
from .system import LinearSystem, SystemSpec, diagonalize, t_min

ENV_PRECISION = "GRAMIAN_BOUNDS_PRECISION"

_CAP_DISCREPANCY_NOTE = (
    "square/triangle capacities use the regular n-gon formula "
    "(0.59017*l and 0.42175*l); the separately quoted constants "
    f"({SQUARE_CONSTANT_QUOTED:.5f}*l and {TRIANGLE_CONSTANT_QUOTED:.5f}*l) "
    "are inconsistent with it and are reported for reference only"
)


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    precision_bits: int | None = None
    jobs: int = 1
    output_format: str = "json"
    output_path: str | None = None
    plot: bool = False
    params: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json_dict(d: dict) -> "RunConfig":
        return RunConfig(**d)


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


def _fmt_float(x) -> str:
    f = float(x)
    return "%.17g" % f


def _region_arg(text: str) -> Region:
    """Region from the CLI mini-grammar, inline JSON, or @file.json."""
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return Region.from_json_dict(json.load(fh))
    return parse_region(text)


def _emit_json(payload: dict, config: RunConfig) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def _emit_csv(rows: list[dict], fieldnames: list[str], config: RunConfig) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (_fmt_float(v) if isinstance(v, float) else v)
                         for k, v in row.items()})
    text = buf.getvalue()
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def _sidecar_path(config: RunConfig) -> str:
    base = config.output_path or config.command
    return base + ".values.json"


def _plot_path(config: RunConfig) -> str:
    base = config.output_path or config.command
    root, _ = os.path.splitext(base)
    return (root or base) + ".png"


def _write_sidecar(payload: dict, config: RunConfig) -> None:
    with open(_sidecar_path(config), "w") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_reproduce(config: RunConfig) -> int:
    rows = reproduce_intro_constants()
    for row in rows:
        print("%-52s reference %-11.4g recomputed %-13.6g relative deviation %.3f%%"
              % (row["label"], row["reference"], row["computed"],
                 100 * row["relative_deviation"]))
        if "note" in row:
            print("    note: %s" % row["note"])
    if config.output_format == "csv":
        flat = [{"label": r["label"], "reference": r["reference"],
                 "computed": r["computed"],
                 "relative_deviation": r["relative_deviation"]} for r in rows]
        _emit_csv(flat, ["label", "reference", "computed", "relative_deviation"], config)
    else:
        _emit_json({"constants": rows, "note": _CAP_DISCREPANCY_NOTE}, config)
    return 0


def _cmd_capacity(config: RunConfig) -> int:
    region = _region_arg(config.params["region"])
    closed = cap_closed_form(region)
    est = cap_estimate(region, config.params["n_max"], restarts=config.params["restarts"],
                       seed=config.seed)
    payload = {
        "region": region.to_json_dict(),
        "closed_form": closed,
        "estimate": est.to_json_dict(),
    }
    if region.kind in ("square", "triangle", "ngon"):
        payload["note"] = _CAP_DISCREPANCY_NOTE
    if config.output_format == "csv":
        rows = [{"n": n, "d_n": float(d)} for n, d in est.d_sequence]
        rows.append({"n": 0, "d_n": est.value})
        _emit_csv(rows, ["n", "d_n"], config)
        _write_sidecar(payload, config)
    else:
        _emit_json(payload, config)
    if config.plot:
        from .plotting import plot_capacity

        plot_capacity(est, closed, region.label(), _plot_path(config))
    return 0


def _cmd_err(config: RunConfig) -> int:
    region = _region_arg(config.params["region"])
    l = config.params["l"]
    if config.params.get("trend"):
        trend = err_capacity_trend(region, l)
        payload = {
            "region": region.to_json_dict(),
            "trend": [[l_, r] for l_, r in trend],
            "closed_form_capacity": cap_closed_form(region),
        }
        if config.output_format == "csv":
            _emit_csv([{"l": l_, "err_root": r} for l_, r in trend],
                      ["l", "err_root"], config)
            _write_sidecar(payload, config)
        else:
            _emit_json(payload, config)
        if config.plot:
            from .plotting import plot_err_trend

            plot_err_trend(trend, cap_closed_form(region), region.label(),
                           _plot_path(config))
    else:
        res = err_region(l, region)
        payload = {"region": region.to_json_dict(), "result": res.to_json_dict()}
        if config.output_format == "csv":
            _emit_csv([{"l": l, "error": float(res.error),
                        "certified_gap": float(res.certified_gap)}],
                      ["l", "error", "certified_gap"], config)
            _write_sidecar(payload, config)
        else:
            _emit_json(payload, config)
    return 0


def _cmd_gramian(config: RunConfig) -> int:
    with open(config.params["system_file"]) as fh:
        sys_obj = LinearSystem.from_json_dict(json.load(fh))
    rep = gramian(sys_obj, config.params["t"], bits=config.precision_bits)
    payload = rep.to_json_dict()
    if config.output_format == "csv":
        _emit_csv([{"t": rep.t, "lambda_min": float(rep.lambda_min),
                    "lambda_max": float(rep.lambda_max),
                    "precision_bits_used": rep.bits_used,
                    "resolved": rep.resolved}],
                  ["t", "lambda_min", "lambda_max", "precision_bits_used", "resolved"],
                  config)
        _write_sidecar(payload, config)
    else:
        _emit_json(payload, config)
    return 0


def _report_row(rep: BoundReport) -> dict:
    d = rep.inputs_digest
    emp = rep.empirical_value
    return {
        "seed": d.get("seed", 0),
        "n": d.get("n", 0),
        "k": d.get("k", 0),
        "t": d.get("t", 0),
        "lambda_min": float(emp) if emp is not None else math.nan,
        "bound": float(rep.bound_value),
        "ratio": rep.ratio if rep.ratio is not None else math.nan,
        "holds": rep.holds,
    }


_VERIFY_FIELDS = ["seed", "n", "k", "t", "lambda_min", "bound", "ratio", "holds"]


def _jsonable(v):
    if isinstance(v, (bool, int, str)) or v is None:
        return v
    return float(v)


def _thm1_trial(args) -> dict:
    (trial, seed, n_lo, n_hi, k_list, cond_list, region_texts) = args
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([seed & (2**63 - 1), 0x7431, trial])))
    n = int(rng.integers(n_lo, n_hi + 1))
    k = int(k_list[rng.integers(0, len(k_list))])
    k = min(k, n)
    cond = float(cond_list[rng.integers(0, len(cond_list))])
    region = parse_region(region_texts[int(rng.integers(0, len(region_texts)))])
    spec = SystemSpec(n=n, k=k, eigenvalue_region=region, target_cond_v=cond,
                      seed=derive_seed(seed, 0x7431, trial, 1))
    rep = verify_thm1(spec)
    return {"row": _report_row(rep), "report": rep.to_json_dict(),
            "diagnostics": {k_: _jsonable(v) for k_, v in rep.diagnostics.items()}}


def _thm2_trial(args) -> dict:
    (trial, seed, n_lo, n_hi, k_list, q_list, t_cap) = args
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([seed & (2**63 - 1), 0x7432, trial])))
    k = int(k_list[rng.integers(0, len(k_list))])
    n = int(rng.integers(max(n_lo, 2 * k + 1), n_hi + 1))
    m = int(rng.integers(max(3, 2 * k + 1), n + 1))
    q = float(q_list[rng.integers(0, len(q_list))])
    spec = SystemSpec(n=n, k=k, eigenvalue_region=Region.interval(-1.0, 1.0),
                      hermitian=True, stable_count=m,
                      seed=derive_seed(seed, 0x7432, trial, 1))
    rep = verify_thm2(spec, q, t_cap=t_cap)
    return {"row": _report_row(rep), "report": rep.to_json_dict()}


def _run_trials(worker, arglist, jobs: int) -> list[dict]:
    if jobs <= 1:
        return [worker(a) for a in arglist]
    with get_context("fork").Pool(jobs) as pool:
        return pool.map(worker, arglist)


def _cmd_verify_thm1(config: RunConfig) -> int:
    p = config.params
    if p.get("system_file"):
        if not p.get("region"):
            raise ValueError("--system mode requires --region")
        with open(p["system_file"]) as fh:
            sys_obj = LinearSystem.from_json_dict(json.load(fh))
        region = _region_arg(p["region"])
        diag = diagonalize(sys_obj.a)
        steps = t_min(sys_obj.n, sys_obj.k)
        mm = cached_err_region(steps, region)
        bound = thm1_nonasymptotic(diag.cond_v, sys_obj.b_fro, mm.upper_estimate())
        grep = gramian(sys_obj, steps, start_bits=config.precision_bits)
        emp = grep.lambda_min
        holds = bool(emp <= bound * (1 + 1e-6))
        rep = BoundReport(
            "thm1_nonasymptotic", bound, emp,
            float(emp / bound) if bound > 0 else math.inf,
            {"seed": config.seed, "n": sys_obj.n, "k": sys_obj.k, "t": steps,
             "cond_V": diag.cond_v, "B_fro": sys_obj.b_fro,
             "Err": mm.upper_estimate(), "region": region.label()},
            holds,
            thm1_proof_identities(sys_obj, diag, mm.upper_estimate(), grep.bits_used),
        )
        results = [{"row": _report_row(rep), "report": rep.to_json_dict()}]
    else:
        args = [(i, config.seed, p["n_min"], p["n_max"], p["k_list"], p["cond_list"],
                 p["regions"]) for i in range(p["trials"])]
        results = _run_trials(_thm1_trial, args, config.jobs)
    return _finish_verify(results, config, "thm1_nonasymptotic")


def _cmd_verify_thm2(config: RunConfig) -> int:
    p = config.params
    args = [(i, config.seed, p["n_min"], p["n_max"], p["k_list"], p["q_list"],
             p["t_cap"]) for i in range(p["trials"])]
    results = _run_trials(_thm2_trial, args, config.jobs)
    return _finish_verify(results, config, "thm2")


def _finish_verify(results: list[dict], config: RunConfig, title: str) -> int:
    rows = [r["row"] for r in results]
    if config.output_format == "csv":
        _emit_csv(rows, _VERIFY_FIELDS, config)
        _write_sidecar({"trials": [r["report"] for r in results]}, config)
    else:
        _emit_json({"trials": [r["report"] for r in results]}, config)
    if config.plot:
        from .plotting import plot_verify

        plot_verify(rows, _plot_path(config), title=title)
    violated = [r for r in rows if not r["holds"]]
    n_ok = len(rows) - len(violated)
    print(f"{title}: {n_ok}/{len(rows)} trials hold", file=_sys.stderr)
    return 2 if violated else 0


def _cmd_conjecture(config: RunConfig) -> int:
    p = config.params
    rows = conjecture_scan(p["n_list"], p["t_multipliers"], p["trials"],
                           k=p["k"], seed=config.seed)
    flat = [{"n": r["n"], "t": r["t"], "lambda_min_max": r["lambda_min_max"]}
            for r in rows]
    if config.output_format == "csv":
        _emit_csv(flat, ["n", "t", "lambda_min_max"], config)
        _write_sidecar({"rows": rows}, config)
    else:
        _emit_json({"rows": rows}, config)
    if config.plot:
        from .plotting import plot_conjecture

        plot_conjecture(rows, _plot_path(config))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gramian-bounds",
        description="Controllability Gramians, control energy, and "
                    "eigenvalue-clustering energy bounds.",
        epilog="Region grammar: interval:a,b  disk:cx,cy,r  ngon:n,h  "
               "twointervals:a,b  halfdisk:r  ellipse:a,b  square:l  "
               "triangle:l  polygon:x1,y1;x2,y2;...  points:x1,y1;...  "
               "(or a JSON region object).",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision-bits", type=int,
                        default=int(os.environ[ENV_PRECISION])
                        if os.environ.get(ENV_PRECISION) else None)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--format", choices=["json", "csv"], default="json",
                        dest="output_format")
    common.add_argument("--out", dest="output_path", default=None)
    common.add_argument("--plot", action="store_true",
                        help="render a PNG figure next to the output file")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("reproduce", parents=[common],
                   help="recompute the headline worked-example constants")

    pc = sub.add_parser("capacity", parents=[common],
                        help="closed-form and Fekete capacity of a region")
    pc.add_argument("region")
    pc.add_argument("--n-max", type=int, default=40)
    pc.add_argument("--restarts", type=int, default=8)

    pe = sub.add_parser("err", parents=[common],
                        help="minimax approximation error Err(l, X)")
    pe.add_argument("region")
    pe.add_argument("--l", type=int, required=True)
    pe.add_argument("--trend", action="store_true",
                    help="emit the whole Err(l)^(1/l) sequence up to --l")

    pg = sub.add_parser("gramian", parents=[common],
                        help="Gramian report for a system JSON file")
    pg.add_argument("system_file")
    pg.add_argument("--t", type=int, required=True)

    p1 = sub.add_parser("verify-thm1", parents=[common],
                        help="clustering bound verification at t_min")
    p1.add_argument("--trials", type=int, default=20)
    p1.add_argument("--n-min", type=int, default=4)
    p1.add_argument("--n-max", type=int, default=14)
    p1.add_argument("--k-list", type=_int_list, default=[1, 2, 3])
    p1.add_argument("--cond-list", type=_float_list, default=[1.0, 10.0, 100.0])
    p1.add_argument("--regions", nargs="+",
                    default=["interval:-0.5,0.5", "disk:0,0,0.8",
                             "polygon:-0.8,-0.55;0.9,-0.5;0.2,0.6"])
    p1.add_argument("--system", dest="system_file", default=None,
                    help="verify one system from a JSON file instead of sampling")
    p1.add_argument("--region", default=None,
                    help="eigenvalue region for --system mode")

    p2 = sub.add_parser("verify-thm2", parents=[common],
                        help="Hermitian stable-mode bound verification")
    p2.add_argument("--trials", type=int, default=20)
    p2.add_argument("--n-min", type=int, default=6)
    p2.add_argument("--n-max", type=int, default=24)
    p2.add_argument("--k-list", type=_int_list, default=[1, 2])
    p2.add_argument("--q-list", type=_float_list, default=[2.0, 4.0, 8.0])
    p2.add_argument("--t-cap", type=int, default=2000)

    pj = sub.add_parser("conjecture", parents=[common],
                        help="lambda_min growth scan for stable symmetric spectra")
    pj.add_argument("--n-list", type=_int_list, default=[4, 6, 8])
    pj.add_argument("--t-multipliers", type=_float_list, default=[0.5, 1.0, 2.0, 5.0])
    pj.add_argument("--trials", type=int, default=3)
    pj.add_argument("--k", type=int, default=1)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    skip = {"command", "seed", "precision_bits", "jobs", "output_format",
            "output_path", "plot"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig(
        command=args.command,
        seed=args.seed,
        precision_bits=args.precision_bits,
        jobs=args.jobs,
        output_format=args.output_format,
        output_path=args.output_path,
        plot=args.plot,
        params=params,
    )


_DISPATCH = {
    "reproduce": _cmd_reproduce,
    "capacity": _cmd_capacity,
    "err": _cmd_err,
    "gramian": _cmd_gramian,
    "verify-thm1": _cmd_verify_thm1,
    "verify-thm2": _cmd_verify_thm2,
    "conjecture": _cmd_conjecture,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    if config.precision_bits is not None:
        numerics.validate_bits(config.precision_bits)
    try:
        return _DISPATCH[config.command](config)
    except GramianBoundsError as exc:
        _sys.stdout.write(json.dumps(
            {"error": {"kind": exc.kind, "message": str(exc)}}, sort_keys=True) + "\n")
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        _sys.stdout.write(json.dumps(
            {"error": {"kind": type(exc).__name__, "message": str(exc)}},
            sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
