"""Command-line front end.

Exit codes: 0 success, 1 an example ran but missed a pinned expectation,
2 invalid input (spec, config, flags, theta outside the domain), 3 a
measurement outcome with vanishing probability and non-vanishing
derivative made the Fisher information diverge.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channels import flow_trace
from .errors import FisherError, SingularOutcome, SpecError
from .fisher import classical_fi, family_point, sld
from .hierarchy import hierarchy_report
from .presets import PRESET_NAMES, run_example
from .specs import (
    CSV_COLUMNS,
    RunConfig,
    dumps,
    format_csv_value,
    hierarchy_body,
    parse_chain_arg,
    parse_family_arg,
    povm_from_spec,
    read_json,
    validate_document,
    values_dict,
)

EXIT_OK = 0
EXIT_EXPECTATION = 1
EXIT_INVALID = 2
EXIT_SINGULAR = 3
STATUS_OK = "ok"
STATUS_SINGULAR = "singular-outcome"


class Output:
    """A finished report: JSON document and, where defined, CSV rows."""

    def __init__(self, doc: dict, rows: Optional[list] = None, header: Sequence[str] = (), passed: bool = True):
        self.doc = doc
        self.rows = rows
        self.header = tuple(header)
        self.passed = passed

    def render(self, fmt: str) -> str:
        if fmt == "json":
            validate_document(self.doc, "report")
            return dumps(self.doc)
        if self.rows is None:
            raise SpecError(f"--format csv is not available for the {self.doc['report']} command")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


# ------------------------------------------------------------------ commands


def _family(args, cfg: RunConfig):
    # a step set by flag or config file overrides the one stored in the family spec
    f = parse_family_arg(args.family)
    return f.with_fd_step(cfg.fd_step) if args.fd_step_explicit else f


def cmd_qfi(args, cfg: RunConfig) -> Output:
    f = _family(args, cfg)
    rho, drho = family_point(f, args.theta)
    r = sld(rho, drho)
    doc = {"report": "qfi", "family": f.name, "theta": args.theta, "qfi": r.qfi, "support_rank": r.support_rank}
    row = [format_csv_value(args.theta), format_csv_value(r.qfi), str(r.support_rank)]
    return Output(doc, [row], ("theta", "qfi", "support_rank"))


def cmd_cfi(args, cfg: RunConfig) -> Output:
    f = _family(args, cfg)
    m = povm_from_spec(read_json(args.povm))
    rho, drho = family_point(f, args.theta)
    value = classical_fi(rho, drho, m)
    q = sld(rho, drho).qfi
    doc = {"report": "cfi", "family": f.name, "theta": args.theta, "cfi": value, "qfi": q, "n_outcomes": len(m)}
    row = [format_csv_value(args.theta), format_csv_value(value), format_csv_value(q), str(len(m))]
    return Output(doc, [row], ("theta", "cfi", "qfi", "n_outcomes"))


def _hierarchy_row(report) -> list:
    return [format_csv_value(report.theta)] + [format_csv_value(v) for v in values_dict(report).values()] + [STATUS_OK]


def cmd_hierarchy(args, cfg: RunConfig) -> Output:
    f = _family(args, cfg)
    report = hierarchy_report(f, args.theta, cfg=cfg.optimizer())
    doc = {"report": "hierarchy", **hierarchy_body(report), "config": cfg.as_dict()}
    return Output(doc, [_hierarchy_row(report)], CSV_COLUMNS + ("status",))


def cmd_sweep(args, cfg: RunConfig) -> Output:
    if args.steps < 2:
        raise SpecError("a sweep needs at least 2 steps")
    if not args.theta_min < args.theta_max:
        raise SpecError("theta-min must be below theta-max")
    f = _family(args, cfg)
    f.check_theta(args.theta_min)
    f.check_theta(args.theta_max)
    opt = cfg.optimizer()
    rows, table = [], []
    for theta in np.linspace(args.theta_min, args.theta_max, args.steps):
        theta = float(theta)
        try:
            report = hierarchy_report(f, theta, cfg=opt)
        except SingularOutcome:
            rows.append({"theta": theta, "status": STATUS_SINGULAR, "values": None})
            table.append([format_csv_value(theta)] + [""] * (len(CSV_COLUMNS) - 1) + [STATUS_SINGULAR])
            continue
        rows.append({"theta": theta, "status": STATUS_OK, "values": values_dict(report)})
        table.append(_hierarchy_row(report))
    doc = {"report": "sweep", "family": f.name, "columns": list(CSV_COLUMNS) + ["status"], "rows": rows, "config": cfg.as_dict()}
    return Output(doc, table, CSV_COLUMNS + ("status",))


def _steps(trace) -> list:
    return [{"label": label, "hierarchy": hierarchy_body(r)} for label, r in trace.steps]


def _flow_rows(trace) -> list:
    return [[label] + _hierarchy_row(r) for label, r in trace.steps]


def cmd_flow(args, cfg: RunConfig) -> Output:
    f = _family(args, cfg)
    chain = parse_chain_arg(args.chain, f.dims)
    trace = flow_trace(f, args.theta, chain, cfg.optimizer())
    doc = {"report": "flow", "family": f.name, "theta": args.theta, "steps": _steps(trace), "config": cfg.as_dict()}
    return Output(doc, _flow_rows(trace), ("step",) + CSV_COLUMNS + ("status",))


def cmd_example(args, cfg: RunConfig) -> Output:
    fd_step = cfg.fd_step if args.fd_step_explicit else None
    result = run_example(args.name, cfg.optimizer(), fd_step)
    p = result.preset
    checks = [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks]
    checks.append({
        "name": "classification",
        "passed": result.classification == p.expected_classification,
        "detail": f"got {result.classification!r}, expected {p.expected_classification!r}",
    })
    doc = {
        "report": "example",
        "example": p.name,
        "description": p.description,
        "family": result.trace.reports[0].family,
        "theta": p.theta,
        "steps": _steps(result.trace),
        "classification": result.classification,
        "checks": checks,
        "passed": result.passed,
        "config": cfg.as_dict(),
    }
    return Output(doc, _flow_rows(result.trace), ("step",) + CSV_COLUMNS + ("status",), result.passed)


# -------------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fd-step", type=float, default=None, help="finite-difference step (default 1e-5)")
    p.add_argument("--starts", type=int, default=None, help="optimizer starts per class (default 16)")
    p.add_argument("--seed", type=int, default=None, help="optimizer seed (default 0)")
    p.add_argument("--format", choices=("json", "csv"), default=None, help="output format (default json)")
    p.add_argument("--out", default=None, help="write the report here instead of standard output")
    p.add_argument("--config", default=None, help="JSON run configuration; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mifisher",
        description="Measurement-induced Fisher information for one-parameter bipartite quantum states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    family_help = "family spec: a JSON file, builtin:NAME or builtin:product_of:A,B"

    p = sub.add_parser("qfi", help="quantum Fisher information of a family")
    p.add_argument("family", help=family_help)
    p.add_argument("--theta", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_qfi)

    p = sub.add_parser("cfi", help="classical Fisher information of a fixed POVM")
    p.add_argument("family", help=family_help)
    p.add_argument("--povm", required=True, help="JSON POVM file")
    p.add_argument("--theta", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_cfi)

    p = sub.add_parser("hierarchy", help="all six measurement-class values at one theta")
    p.add_argument("family", help=family_help)
    p.add_argument("--theta", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_hierarchy)

    p = sub.add_parser("sweep", help="hierarchy values on a uniform theta grid")
    p.add_argument("family", help=family_help)
    p.add_argument("--theta-min", type=float, required=True)
    p.add_argument("--theta-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("flow", help="hierarchy after each prefix of a channel chain")
    p.add_argument("family", help=family_help)
    p.add_argument("--chain", required=True, help="JSON chain file or inline JSON list")
    p.add_argument("--theta", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("example", help="run a named example and check it against pinned values")
    p.add_argument("name", help="one of: " + ", ".join(PRESET_NAMES))
    _add_common(p)
    p.set_defaults(func=cmd_example)
    return parser


def resolve_config(args) -> RunConfig:
    doc = read_json(args.config) if args.config else {}
    cfg = RunConfig.from_dict(doc)
    args.fd_step_explicit = args.fd_step is not None or "fd_step" in doc
    overrides = {
        "fd_step": args.fd_step,
        "starts": args.starts,
        "seed": args.seed,
        "format": args.format,
    }
    return RunConfig(**{
        "fd_step": cfg.fd_step,
        "starts": cfg.starts,
        "seed": cfg.seed,
        "tolerances": cfg.tolerances,
        "format": cfg.format,
        **{k: v for k, v in overrides.items() if v is not None},
    })


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = args.func(args, cfg)
        text = out.render(cfg.format)
    except SingularOutcome as exc:
        print(f"error: divergent Fisher information: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (FisherError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if not out.passed:
        print(f"example {args.name}: pinned expectations not met", file=sys.stderr)
        return EXIT_EXPECTATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
