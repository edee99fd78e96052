"""Command-line front end.

    atomslit fringes  [--method M] [--grid MIN:MAX:POINTS] [--out fringes.csv]
    atomslit sorkin   [--method M] [--cycles K] [--delta-t RAD] [--bias-phi RAD]
    atomslit kappa-mc --seed S [--events N] [--repeats R]
    atomslit validate

Exit codes: 0 success, 2 configuration error, 3 numeric degeneracy, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import __version__
from .config import ConfigDocument, ConfigError, parse_grid
from .dynamics import FullDrivenHamiltonian, adiabatic_elimination_error, rwa_error_scaled
from .protocol import (
    OPEN_SETS,
    PAIRS,
    DegenerateOperatingPointError,
    fringe_scan,
    kappa,
    probability_table,
    s2,
    sorkin_s3,
)
from .stats import ShotNoiseConfig, bias_study, kappa_monte_carlo
from .tripod import tritter_time

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4
CSV_HEADER = ["delta_T_rad"] + [f"p_{k}" for k in OPEN_SETS]
INFIDELITY_THRESHOLD = 1e-2
EXCITED_FACTOR = 5.0


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _params_report(doc: ConfigDocument) -> dict[str, Any]:
    p = doc.physical_params()
    return {
        "rabi_rad_s": p.rabi,
        "detuning_rad_s": p.detuning,
        "zeeman_ground_rad_s": p.zeeman_ground,
        "zeeman_excited_rad_s": p.zeeman_excited,
        "linewidth_rad_s": p.linewidth,
        "branching": p.branching.tolist(),
        "tritter_time_s": tritter_time(p),
    }


def _header(command: str, doc: ConfigDocument) -> dict[str, Any]:
    # the output path is left out so re-ingesting a report cannot overwrite it
    config = doc.to_dict()
    config.pop("out")
    return {"tool": "atomslit", "version": __version__, "command": command, "config": config}


def fringes_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for x, table in rows:
        w.writerow([_fmt(x)] + [_fmt(table[k]) for k in OPEN_SETS])
    return buf.getvalue()


def cmd_fringes(doc: ConfigDocument) -> int:
    grid = parse_grid(doc.grid)
    config = doc.run_config()
    tables = fringe_scan(config, grid)
    if (doc.format or "csv") == "csv":
        text = fringes_csv(zip(grid, tables))
    else:
        report = _header("fringes", doc)
        report["rows"] = [{"delta_T_rad": float(x), **{f"p_{k}": t[k] for k in OPEN_SETS}}
                          for x, t in zip(grid, tables)]
        text = _dumps(report)
    _emit(text, doc.out)
    return EXIT_OK


def sorkin_report(doc: ConfigDocument) -> dict[str, Any]:
    config = doc.run_config()
    table = probability_table(config)
    s3 = sorkin_s3(table)
    report = _header("sorkin", doc)
    report.update({
        "method": config.method.value,
        "cycles": config.cycles,
        "delta_T_rad": config.delta_t,
        "parameters": _params_report(doc),
        "probabilities": table.as_dict(),
        "s3": s3,
        "s3_abs": abs(s3),
        "s2": {f"{j}{k}": s2(table, (j, k)) for j, k in PAIRS},
    })
    try:
        report["kappa"] = kappa(table)
        report["kappa_error"] = None
    except DegenerateOperatingPointError as exc:
        report["kappa"] = None
        report["kappa_error"] = str(exc)
    if config.bias_phi != 0:
        study = bias_study(config.replace(bias_phi=0.0), [config.bias_phi])
        report["bias"] = {"phi_rad": config.bias_phi, "slope_dS3_dphi": study.slope,
                          "s3_over_phi": s3 / config.bias_phi}
    return report


def cmd_sorkin(doc: ConfigDocument) -> int:
    _emit(_dumps(sorkin_report(doc)), doc.out)
    return EXIT_OK


def kappa_mc_report(doc: ConfigDocument) -> dict[str, Any]:
    if doc.seed is None:
        raise ConfigError("kappa-mc requires an explicit --seed")
    config = doc.run_config()
    sn = ShotNoiseConfig(doc.events, doc.repeats, doc.seed, exact=doc.exact)
    est = kappa_monte_carlo(config, sn, workers=doc.workers)
    report = _header("kappa-mc", doc)
    report.update({
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "seed": doc.seed,
        "estimate": {
            "kappa_mean": est.mean,
            "kappa_std": est.std,
            "s3_mean": est.s3_mean,
            "s3_std": est.s3_std,
            "n_total": est.n_total,
            "n_events_per_config": doc.events,
            "n_repeats": est.n_repeats,
            "per_config_counts": est.per_config_counts,
            "probabilities": est.probabilities,
            "kappa_std_times_sqrt_n": est.std * math.sqrt(doc.events),
        },
    })
    return report


def cmd_kappa_mc(doc: ConfigDocument) -> int:
    _emit(_dumps(kappa_mc_report(doc)), doc.out)
    return EXIT_OK


def validate_report(doc: ConfigDocument) -> dict[str, Any]:
    p = doc.physical_params()
    elim = adiabatic_elimination_error(p)
    rwa_reports = []
    for factor in (doc.omega1_factor, 2 * doc.omega1_factor):
        h = FullDrivenHamiltonian.from_params(p, factor * abs(p.detuning))
        r = rwa_error_scaled(h)
        rwa_reports.append({"omega1_over_detuning": factor, "infidelity": r.infidelity,
                            "steps": r.steps, "dt_s": r.dt})
    elim_pass = (elim.infidelity <= INFIDELITY_THRESHOLD
                 and elim.max_excited_population <= EXCITED_FACTOR * elim.leakage_scale)
    rwa_pass = (rwa_reports[0]["infidelity"] <= INFIDELITY_THRESHOLD
                and rwa_reports[1]["infidelity"] < rwa_reports[0]["infidelity"])
    report = _header("validate", doc)
    report.update({
        "parameters": _params_report(doc),
        "adiabatic_elimination": {
            "infidelity": elim.infidelity,
            "max_excited_population": elim.max_excited_population,
            "leakage_scale": elim.leakage_scale,
            "pass": elim_pass,
        },
        "rwa": {"runs": rwa_reports, "pass": rwa_pass},
        "thresholds": {"infidelity": INFIDELITY_THRESHOLD,
                       "max_excited_over_leakage_scale": EXCITED_FACTOR},
        "pass": elim_pass and rwa_pass,
    })
    return report


def cmd_validate(doc: ConfigDocument) -> int:
    _emit(_dumps(validate_report(doc)), doc.out)
    return EXIT_OK


COMMANDS = {
    "fringes": cmd_fringes,
    "sorkin": cmd_sorkin,
    "kappa-mc": cmd_kappa_mc,
    "validate": cmd_validate,
}

# flag dest -> config key
FLAG_KEYS = {
    "method": "method",
    "cycles": "cycles",
    "delta_t": "delta_t_rad",
    "grid": "grid",
    "bias_phi": "bias_phi_rad",
    "events": "events",
    "repeats": "repeats",
    "seed": "seed",
    "out": "out",
    "format": "format",
    "closing": "closing",
    "workers": "workers",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config document (or a previous JSON report)")
    common.add_argument("--method", choices=["erase", "dephase", "spontaneous"])
    common.add_argument("--cycles", type=int, metavar="K")
    common.add_argument("--delta-t", type=float, metavar="RAD", help="free-evolution phase delta*T")
    common.add_argument("--grid", metavar="MIN:MAX:POINTS")
    common.add_argument("--bias-phi", type=float, metavar="RAD")
    common.add_argument("--events", type=int, metavar="N")
    common.add_argument("--repeats", type=int, metavar="R")
    common.add_argument("--seed", type=int, metavar="S")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--closing", choices=["tritter", "none"],
                        help="closing operation: inverse tritter (default) or none (direct |1> readout)")
    common.add_argument("--workers", type=int, metavar="W")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key, value parsed as JSON")

    parser = argparse.ArgumentParser(prog="atomslit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _set_overrides(items: list[str]) -> dict[str, Any]:
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def load_document(args: argparse.Namespace) -> ConfigDocument:
    doc = ConfigDocument.load(args.config) if args.config else ConfigDocument()
    overrides = _set_overrides(args.set)
    overrides.update({key: getattr(args, dest) for dest, key in FLAG_KEYS.items()
                      if getattr(args, dest) is not None})
    return doc.merged(overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = load_document(args)
        return COMMANDS[args.command](doc)
    except ConfigError as exc:
        print(f"atomslit: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateOperatingPointError as exc:
        print(f"atomslit: degenerate operating point: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"atomslit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
