"""Command-line front end.

Subcommands::

    wconc run      --alphas 0.5,0.5,0.5,0.3,0.4 --gate cpc --max-m 8
    wconc sweep    --alphas ... --max-m 8 --out fig.csv
    wconc verify   --n-max 6 --instances 100 --seed 1
    wconc estimate --alphas ... --gate ppc --trials 1000000 --seed 3

Every option can also come from a JSON object passed with ``--config``;
flags win over the file. Exit codes: 0 ok, 1 verification mismatch,
2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytic
from .analytic import step_order
from .montecarlo import estimate
from .protocol import GateKind, concentrate, cpc_run, ppc_run, select_pivot
from .qstate import ATOL, CoefficientError, WCoefficients

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID = 0, 1, 2
SWEEP_HEADER = ["k", "m", "p_step", "p_step_cumsum", "p_total_cumprod"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    alphas: list[complex]
    gate: GateKind = GateKind.PPC
    max_m: int = 1
    pivot: str | int = 2
    trials: int = 100_000
    seed: int = 0
    format: str = "json"
    out: str | None = None

    @property
    def coeffs(self) -> WCoefficients:
        try:
            return WCoefficients(tuple(self.alphas))
        except CoefficientError as exc:
            raise ConfigError(f"invalid coefficients: {exc}") from exc

    def resolved_pivot(self) -> int:
        coeffs = self.coeffs
        if self.pivot == "auto":
            return select_pivot(coeffs)
        pivot = int(self.pivot)
        if not 1 <= pivot <= coeffs.n:
            raise ConfigError(f"pivot must be 'auto' or an index in 1..{coeffs.n}, got {pivot}")
        return pivot


def _parse_alpha(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex coefficients are [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.strip().replace(" ", ""))
    return complex(value)


def _parse_alpha_list(text: str) -> list[complex]:
    try:
        return [_parse_alpha(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --alphas {text!r}: {exc}") from exc


def load_config(args: argparse.Namespace, default_format: str = "json") -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")

    for key in ("gate", "max_m", "pivot", "trials", "seed", "format", "out"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "alphas", None) is not None:
        data["alphas"] = _parse_alpha_list(args.alphas)

    if "alphas" not in data:
        raise ConfigError("no coefficients given (use --alphas or a config file)")
    try:
        alphas = [_parse_alpha(a) for a in data["alphas"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad coefficient list: {exc}") from exc
    if "n" in data and int(data["n"]) != len(alphas):
        raise ConfigError(f"n = {data['n']} but {len(alphas)} coefficients given")

    try:
        gate = GateKind(str(data.get("gate", "ppc")).lower())
    except ValueError:
        raise ConfigError(f"gate must be ppc or cpc, got {data.get('gate')!r}") from None
    max_m = int(data.get("max_m", 1))
    if max_m < 1:
        raise ConfigError(f"max_m must be >= 1, got {max_m}")
    pivot = data.get("pivot", 2)
    if pivot != "auto":
        try:
            pivot = int(pivot)
        except (TypeError, ValueError):
            raise ConfigError(f"pivot must be 'auto' or an integer, got {pivot!r}") from None
    fmt = data.get("format", default_format)
    if fmt not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {fmt!r}")
    trials = int(data.get("trials", 100_000))
    if trials < 1:
        raise ConfigError("trials must be >= 1")

    cfg = RunConfig(alphas, gate, max_m, pivot, trials, int(data.get("seed", 0)), fmt, data.get("out"))
    cfg.coeffs  # validates
    cfg.resolved_pivot()
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _headline(label: str, p: float) -> str:
    return f"{label} = {p:.6g} (rounded {p:.5f})"


def table_rows(table: dict[tuple[int, int], float], steps: list[int], max_m: int) -> list[list]:
    """Rows ``(k, m, p_step, p_step_cumsum, p_total_cumprod)`` ordered by ``(k, m)``.

    ``p_total_cumprod`` multiplies the cumulative sums at the same ``m`` over
    the steps up to and including ``k``; on the last step it is the total
    success probability with at most ``m`` tries per photon.
    """
    cumsum = {}
    for k in steps:
        acc = 0.0
        for m in range(1, max_m + 1):
            acc += table.get((k, m), 0.0)
            cumsum[k, m] = acc
    rows = []
    for i, k in enumerate(steps):
        for m in range(1, max_m + 1):
            prod = math.prod(cumsum[j, m] for j in steps[: i + 1])
            rows.append([k, m, table.get((k, m), 0.0), cumsum[k, m], prod])
    return rows


def sweep_rows(coeffs: WCoefficients, max_m: int, pivot: int, source: str = "analytic") -> list[list]:
    if source == "simulator":
        table = cpc_run(coeffs, max_m, pivot).step_table
    else:
        table = analytic.p_total_cpc(coeffs.alphas2, max_m, pivot).per_step_per_m
    return table_rows(table, step_order(coeffs.n, pivot), max_m)


def _rows_to_csv(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for k, m, *vals in rows:
        writer.writerow([k, m, *(repr(float(v)) for v in vals)])
    return buf.getvalue()


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    coeffs, pivot = cfg.coeffs, cfg.resolved_pivot()
    report = concentrate(coeffs, cfg.gate, cfg.max_m, pivot)
    if cfg.gate is GateKind.PPC:
        closed = analytic.p_total_ppc(coeffs.alphas2, pivot)
    else:
        closed = analytic.p_total_cpc(coeffs.alphas2, cfg.max_m, pivot).total

    if cfg.format == "csv":
        text = _rows_to_csv(table_rows(report.step_table, step_order(coeffs.n, pivot), report.max_m))
    else:
        data = report.to_dict()
        data["analytic_total_p"] = closed
        text = json.dumps(data, indent=2) + "\n"
    _emit(text, cfg.out)
    log = sys.stdout if cfg.out else sys.stderr
    for k, p in report.per_step_p.items():
        print(_headline(f"step {k}", p), file=log)
    print(_headline("total_p", report.total_p), file=log)
    print(_headline("analytic total_p", closed), file=log)
    print(f"final fidelity = {report.final_fidelity:.6g}", file=log)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args, default_format="csv")
    rows = sweep_rows(cfg.coeffs, cfg.max_m, cfg.resolved_pivot(), source=args.source)
    if cfg.format == "json":
        text = json.dumps([dict(zip(SWEEP_HEADER, r)) for r in rows], indent=2) + "\n"
    else:
        text = _rows_to_csv(rows)
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    coeffs, pivot = cfg.coeffs, cfg.resolved_pivot()
    t0 = time.perf_counter()
    est = estimate(coeffs, cfg.gate, cfg.max_m, pivot, cfg.trials, cfg.seed)
    elapsed = time.perf_counter() - t0
    if cfg.gate is GateKind.PPC:
        closed = analytic.p_total_ppc(coeffs.alphas2, pivot)
    else:
        closed = analytic.p_total_cpc(coeffs.alphas2, cfg.max_m, pivot).total
    data = {
        "p_hat": est.p_hat,
        "stderr": est.stderr,
        "trials": est.trials,
        "successes": est.successes,
        "seed": est.seed,
        "analytic_total_p": closed,
        "z_score": (est.p_hat - closed) / est.stderr if est.stderr > 0 else None,
        "seconds": elapsed,
    }
    _emit(json.dumps(data, indent=2) + "\n", cfg.out)
    return EXIT_OK


# -- oracle verification ----------------------------------------------------

CHECKS = [
    "first_single",
    "second_single",
    "middle_single",
    "last_single",
    "total_single",
    "first_retry2",
    "first_retry",
    "middle_retry",
    "last_retry",
    "total_retry",
    "literal_form",
    "bell_pair",
]


def _label(k: int, m: int, steps: list[int]) -> str:
    position = steps.index(k)
    if position == 0:
        kind = "first"
    elif k == steps[-1]:
        kind = "last"
    elif position == 1 and m == 1:
        kind = "second"
    else:
        kind = "middle"
    if m == 1:
        return f"{kind}_single"
    if kind == "first" and m == 2:
        return "first_retry2"
    return f"{'middle' if kind == 'second' else kind}_retry"


def random_instances(n: int, count: int, rng: np.random.Generator, complex_phases: bool) -> list[WCoefficients]:
    out = []
    for _ in range(count):
        mods = rng.uniform(0.05, 1.0, n)
        phases = rng.uniform(0, 2 * np.pi, n) if complex_phases else np.zeros(n)
        out.append(WCoefficients.normalized(mods * np.exp(1j * phases) if complex_phases else mods))
    return out


def verify_suite(n_max: int = 6, instances: int = 100, seed: int = 0, max_m: int = 4, atol: float = ATOL) -> dict:
    """Compare every simulated branch probability with its closed form.

    Runs ``instances`` real and ``instances`` complex coefficient vectors for
    each ``n`` in ``2..n_max`` with both gates. Returns per-check counts and
    the first mismatch of each check.
    """
    if not 2 <= n_max <= 8:
        raise ConfigError("n_max must be in 2..8")
    if instances < 1 or max_m < 1:
        raise ConfigError("instances and max_m must be >= 1")
    rng = np.random.default_rng(seed)
    passed = {c: 0 for c in CHECKS}
    failed = {c: 0 for c in CHECKS}
    dumps: dict[str, dict] = {}
    worst = 0.0

    def check(name: str, sim: float, closed: float, coeffs: WCoefficients, **where) -> None:
        nonlocal worst
        err = abs(sim - closed)
        worst = max(worst, err)
        if err <= atol:
            passed[name] += 1
            return
        failed[name] += 1
        dumps.setdefault(
            name,
            {
                "check": name,
                "alphas": [[a.real, a.imag] for a in coeffs.alphas],
                "simulator": sim,
                "analytic": closed,
                **where,
            },
        )

    for n in range(2, n_max + 1):
        for complex_phases in (False, True):
            for coeffs in random_instances(n, instances, rng, complex_phases):
                a2 = coeffs.alphas2
                steps = step_order(n, 2)
                ppc = ppc_run(coeffs)
                for k in steps:
                    check(_label(k, 1, steps), ppc.per_step_p[k], analytic.p_step_ppc(a2, k), coeffs, k=k, m=1, gate="ppc")
                check("total_single", ppc.total_p, analytic.p_total_ppc(a2), coeffs, gate="ppc")
                if n == 2:
                    check("bell_pair", ppc.total_p, 2 * a2[0] * a2[1], coeffs)

                cpc = cpc_run(coeffs, max_m)
                for (k, m), p in cpc.step_table.items():
                    check(_label(k, m, steps), p, analytic.p_step_cpc(a2, k, m), coeffs, k=k, m=m, gate="cpc")
                    check("literal_form", p, analytic.p_step_cpc(a2, k, m, literal_form=True), coeffs, k=k, m=m)
                check("total_retry", cpc.total_p, analytic.p_total_cpc(a2, max_m).total, coeffs, gate="cpc")

    return {
        "ok": not any(failed.values()),
        "passed": passed,
        "failed": failed,
        "mismatches": list(dumps.values()),
        "max_abs_error": worst,
        "n_max": n_max,
        "instances": instances,
        "seed": seed,
        "max_m": max_m,
    }


def cmd_verify(args: argparse.Namespace) -> int:
    summary = verify_suite(args.n_max, args.instances, args.seed, args.max_m)
    lines = [f"{'check':<16} {'pass':>6} {'fail':>6}  status"]
    for name in CHECKS:
        p, f = summary["passed"][name], summary["failed"][name]
        status = "n/a" if p + f == 0 else ("PASS" if f == 0 else "FAIL")
        lines.append(f"{name:<16} {p:>6} {f:>6}  {status}")
    lines.append(f"max |simulator - analytic| = {summary['max_abs_error']:.3e}")
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")
    if not summary["ok"]:
        for dump in summary["mismatches"]:
            print("mismatch: " + json.dumps(dump), file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wconc", description="W-state concentration calculator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--alphas", help="comma-separated coefficients, e.g. 0.5,0.5,0.5,0.3,0.4 or 0.3+0.4j,...")
        p.add_argument("--gate", choices=["ppc", "cpc"])
        p.add_argument("--max-m", dest="max_m", type=int)
        p.add_argument("--pivot", help="'auto' or a 1-based photon index")
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", help="output path (stdout if omitted)")

    p_run = sub.add_parser("run", help="exhaustive simulation of one configuration")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="per-step and total probabilities for m = 1..max-m")
    common(p_sweep)
    p_sweep.add_argument("--source", choices=["analytic", "simulator"], default="analytic")
    p_sweep.set_defaults(func=cmd_sweep)

    p_est = sub.add_parser("estimate", help="Monte Carlo estimate of the total success probability")
    common(p_est)
    p_est.add_argument("--trials", type=int)
    p_est.set_defaults(func=cmd_estimate)

    p_ver = sub.add_parser("verify", help="simulator versus closed forms on random instances")
    p_ver.add_argument("--n-max", dest="n_max", type=int, default=6)
    p_ver.add_argument("--instances", type=int, default=100)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--max-m", dest="max_m", type=int, default=4)
    p_ver.add_argument("--out", help="write the JSON summary here")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CoefficientError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
