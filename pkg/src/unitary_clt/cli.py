"""Command-line front end: ``unitary-clt <command> [options]``.

Every command accepts ``--config file.json`` whose keys mirror the long flag
names (dashes or underscores); explicit flags win over file values and
unknown keys are rejected.  Exit codes: 0 success, 2 bad arguments, 3
numerical failure, 4 capacity guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .covariance import FIGURE_PANELS, FourierSeries, figure_panel, sigma_matrix, tau_tables, write_panel_csv
from .errors import InvalidParameter, UnitaryCLTError
from .free_limit import moment, tau_table
from .matrix_core import Metric
from .mc_harness import clt_report, exact_cov_mc_check
from .symcomb import (
    count_walks,
    count_walks_split,
    cycle,
    concat,
    exact_power_trace_covariance,
    literal_power_trace_covariance,
    lr_hook,
    lr_hook_bruteforce,
    verify_itocombi,
)
from .unitary_bm import BrownianConfig, power_traces_batch, simulate_batch


def _g(x: float) -> str:
    return f"{x + 0.0:.17g}"  # no negative zeros


def _rows(text: str) -> tuple[int, ...]:
    text = text.strip().strip("()[]")
    if not text:
        return ()
    try:
        return tuple(int(x) for x in text.replace(" ", ",").split(",") if x)
    except ValueError as exc:
        raise InvalidParameter(f"cannot parse partition {text!r}") from exc


# ---------------------------------------------------------------- commands
# Each returns (payload for json, text rendering, optional csv rows).


def cmd_moments(a):
    v = moment(a.k, a.T)
    return {"k": a.k, "T": a.T, "value": v}, _g(v), [["k", "T", "value"], [a.k, _g(a.T), _g(v)]]


def cmd_tau(a):
    table = tau_table(a.jmax, a.T, a.method, a.ode_steps)
    payload = table.to_dict()
    if a.compare:
        other = tau_table(a.jmax, a.T, "ode" if table.method == "exact" else "exact", a.ode_steps)
        diff = max((abs(v - other.values[key]) for key, v in table.values.items()), default=0.0)
        payload["compare"] = {"method": other.method, "max_abs_diff": diff}
    rows = [["j", "k", "value"]] + [[j, k, _g(v)] for j, k, v in payload["entries"]]
    return payload, json.dumps(payload, indent=2), rows


def _functions(specs):
    if not specs:
        raise InvalidParameter("at least one --functions entry is required")
    return [FourierSeries.parse(s) for s in specs]


def cmd_sigma(a):
    fs = _functions(a.functions)
    alpha = None if a.alpha is None or a.alpha == 1.0 else a.alpha
    cov = sigma_matrix(fs, a.T, alpha=alpha)
    payload = cov.to_dict()
    labels = payload["functions"]
    rows = [["function"] + labels] + [[labels[i]] + [_g(x) for x in row] for i, row in enumerate(cov.entries)]
    text = "\n".join(" ".join(_g(x) for x in row) for row in cov.entries)
    return payload, text, rows


def _config(a) -> BrownianConfig:
    return BrownianConfig(a.N, a.T, a.steps, Metric.parse(a.variant), a.seed)


def cmd_simulate(a):
    cfg = _config(a)
    header = ["sample", "seed"]
    for j in range(1, a.traces + 1):
        header += [f"re_tr{j}", f"im_tr{j}"]
    rows = [header]
    seeds = [cfg.seed + s for s in range(a.samples)]
    for start in range(0, len(seeds), 50):
        chunk = seeds[start : start + 50]
        finals, _ = simulate_batch(cfg, chunk)
        P = power_traces_batch(finals, a.traces)
        for b, s in enumerate(chunk):
            row = [start + b, s]
            for j in range(1, a.traces + 1):
                row += [_g(P[b, j].real), _g(P[b, j].imag)]
            rows.append(row)
    payload = {"config": cfg.as_dict(), "columns": header, "rows": rows[1:]}
    return payload, _csv_text(rows), rows


def cmd_clt(a):
    cfg = _config(a)
    report = clt_report(cfg, _functions(a.functions), a.samples, a.workers)
    return report.to_dict(), report.to_text(), None


def cmd_exact_cov(a):
    if a.mc:
        payload = exact_cov_mc_check(a.N, a.n, a.m, a.t, a.mc, seed=a.seed, workers=a.workers)
    else:
        payload = {
            "N": a.N,
            "n": a.n,
            "m": a.m,
            "t": a.t,
            "composed": exact_power_trace_covariance(a.N, a.n, a.m, a.t),
            "literal": literal_power_trace_covariance(a.N, a.n, a.m, a.t),
        }
    gap = abs(payload["composed"] - payload["literal"])
    payload["disagreement"] = gap
    payload["agree"] = gap <= 1e-9 * max(1.0, abs(payload["composed"]))
    text = json.dumps(payload, indent=2)
    return payload, text, [list(payload), [payload[k] for k in payload]]


def cmd_walks(a):
    if a.verify_itocombi is not None:
        cases = []
        for total in range(2, a.verify_itocombi + 1):
            for j in range(1, total):
                k = total - j
                for n in range(0, 6 - total + 1 if total <= 5 else 1):
                    if n + 1 <= 6 and n <= 4:
                        cases.append({"j": j, "k": k, "n": n, "ok": verify_itocombi(j, k, n)})
        payload = {"jmax": a.verify_itocombi, "cases": len(cases), "all_pass": all(c["ok"] for c in cases), "failures": [c for c in cases if not c["ok"]]}
        return payload, json.dumps(payload, indent=2), None
    if a.j is None or a.n is None:
        raise InvalidParameter("walks needs --j and --n (or --verify-itocombi)")
    if a.split:
        if a.k is None:
            raise InvalidParameter("--split needs --k")
        v = count_walks_split(a.j, a.k, a.n)
    else:
        sigma = cycle(a.j) if a.k is None else concat(cycle(a.j), cycle(a.k))
        v = count_walks(sigma, a.n, a.d)
    payload = {"j": a.j, "k": a.k, "n": a.n, "d": a.d, "split": a.split, "value": v}
    return payload, str(v), None


def cmd_lr(a):
    alpha, beta = _rows(a.alpha), _rows(a.beta)
    fn = lr_hook_bruteforce if a.brute else lr_hook
    v = fn(alpha, a.n, a.r, beta)
    payload = {"alpha": list(alpha), "beta": list(beta), "n": a.n, "r": a.r, "method": "brute" if a.brute else "snake", "value": v}
    return payload, str(v), None


def cmd_figure(a):
    if a.step <= 0 or a.Tmax < 0:
        raise InvalidParameter("need step > 0 and Tmax >= 0")
    count = int(round(a.Tmax / a.step))
    times = [round(i * a.step, 12) for i in range(count + 1)]
    names = sorted(FIGURE_PANELS) if a.panel == "all" else [a.panel]
    tables = None
    if any(n != "moments" for n in names):
        tables = tau_tables(32, times)
    panels = {name: figure_panel(name, times, None if name == "moments" else tables) for name in names}
    if a.out_dir:
        os.makedirs(a.out_dir, exist_ok=True)
        for name, data in panels.items():
            write_panel_csv(data, os.path.join(a.out_dir, f"{name}.csv"))
    if len(names) == 1:
        rows = [["T", "label", "value"]] + [[repr(t), label, _g(v)] for t, label, v in panels[names[0]]]
    else:
        rows = [["panel", "T", "label", "value"]]
        for name, data in panels.items():
            rows += [[name, repr(t), label, _g(v)] for t, label, v in data]
    payload = {"panels": names, "columns": rows[0], "rows": rows[1:]}
    return payload, _csv_text(rows), rows


# ---------------------------------------------------------------- parser

COMMANDS = {}


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue().rstrip("\n")


def _command(name, fn, help_, defaults, fmt="text"):
    COMMANDS[name] = (fn, defaults, fmt, help_)


_command("moments", cmd_moments, "free unitary Brownian motion moment mu_k(T)", {"k": None, "T": None})
_command("tau", cmd_tau, "table of the covariance kernel tau_{j,k}(T)", {"jmax": None, "T": None, "method": "auto", "ode_steps": 2000, "compare": False}, "json")
_command("sigma", cmd_sigma, "limiting covariance matrix of trace fluctuations", {"T": None, "functions": None, "alpha": None}, "json")
_command(
    "simulate",
    cmd_simulate,
    "simulate Brownian paths and emit power traces",
    {"N": None, "T": None, "steps": None, "variant": "full", "samples": 1, "traces": 1},
    "csv",
)
_command(
    "clt",
    cmd_clt,
    "Monte Carlo check of the trace central limit theorem",
    {"N": None, "T": None, "steps": None, "variant": "full", "samples": None, "functions": None, "workers": 1},
    "json",
)
_command("exact-cov", cmd_exact_cov, "exact SU(N) power-trace covariance", {"N": None, "n": None, "m": None, "t": None, "mc": 0, "workers": 1}, "json")
_command(
    "walks",
    cmd_walks,
    "count transposition walks by length and defect",
    {"j": None, "k": None, "n": None, "d": 0, "split": False, "verify_itocombi": None},
)
_command("lr", cmd_lr, "hook Littlewood-Richardson coefficient", {"alpha": None, "n": None, "r": None, "beta": None, "brute": False})
_command("figure", cmd_figure, "data for the covariance figure panels", {"panel": "all", "Tmax": 6.0, "step": 0.05, "out_dir": None}, "csv")

_TYPES = {
    "k": int, "T": float, "jmax": int, "method": str, "ode_steps": int, "alpha": str, "N": int, "steps": int,
    "variant": str, "samples": int, "traces": int, "n": int, "m": int, "t": float, "mc": int, "workers": int,
    "j": int, "d": int, "r": int, "beta": str, "panel": str, "Tmax": float, "step": float, "out_dir": str,
}  # fmt: skip
_FLAGS = {"compare", "split", "brute"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unitary-clt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, defaults, fmt, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file with default values for the flags below")
        p.add_argument("--seed", type=int, default=None, help="base random seed (default 0)")
        p.add_argument("--out", help="write output to this file instead of stdout")
        p.add_argument("--format", choices=("text", "json", "csv"), default=None, help=f"output format (default {fmt})")
        for key in defaults:
            flag = "--" + key.replace("_", "-")
            if key in _FLAGS:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
            elif key == "functions":
                p.add_argument(flag, dest=key, nargs="+", default=None, help="cos:k, sin:k, const:c, poly:j=c,... or @file.json")
            elif key == "verify_itocombi":
                p.add_argument(flag, dest=key, type=int, default=None, metavar="JMAX")
            elif key == "alpha" and name == "sigma":
                p.add_argument(flag, dest=key, type=float, default=None)
            elif key == "panel":
                p.add_argument(flag, dest=key, choices=sorted(FIGURE_PANELS) + ["all"], default=None)
            else:
                p.add_argument(flag, dest=key, type=_TYPES[key], default=None)
        p.set_defaults(_fmt=fmt)
    return parser


def _merge(args, defaults: dict) -> None:
    """Fill unset flags from the config file, then from built-in defaults."""
    file_values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, ValueError) as exc:
            raise InvalidParameter(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidParameter("config file must hold a JSON object")
        allowed = set(defaults) | {"seed", "out", "format"}
        for key, value in raw.items():
            norm = key.replace("-", "_")
            if norm not in allowed:
                raise InvalidParameter(f"unknown config key {key!r}")
            file_values[norm] = value
    for key in list(defaults) + ["seed", "out", "format"]:
        if getattr(args, key) is None:
            if key in file_values:
                setattr(args, key, file_values[key])
            elif key in defaults:
                setattr(args, key, defaults[key])
    if args.seed is None:
        args.seed = 0
    if args.format is None:
        args.format = args._fmt
    missing = [k for k, v in defaults.items() if v is None and getattr(args, k) is None and k not in _OPTIONAL]
    if missing:
        raise InvalidParameter("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


_OPTIONAL = {"steps", "alpha", "k", "j", "n", "verify_itocombi", "out_dir"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fn, defaults, _, _ = COMMANDS[args.command]
    try:
        _merge(args, defaults)
        if args.command == "walks" and args.n is None and args.verify_itocombi is None:
            raise InvalidParameter("walks needs --n or --verify-itocombi")
        payload, text, rows = fn(args)
        if args.format == "json":
            out = json.dumps(payload, indent=2)
        elif args.format == "csv":
            if rows is None:
                raise InvalidParameter(f"{args.command} has no CSV output")
            out = _csv_text(rows)
        else:
            out = text
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(out + "\n")
        else:
            print(out)
    except UnitaryCLTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
