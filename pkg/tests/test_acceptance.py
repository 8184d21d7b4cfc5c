"""End-to-end acceptance checks, one printed PASS/FAIL line per criterion."""

import math
import time

import numpy as np
import pytest

from conftest import REF_ALPHAS, random_coeffs
from wconc import analytic
from wconc.cli import CHECKS, sweep_rows, verify_suite
from wconc.montecarlo import estimate
from wconc.optics import ParityOutcome
from wconc.protocol import GateKind, cpc_run, ppc_run, run_step, select_pivot, success_fidelities
from wconc.qstate import WCoefficients, max_w_fidelity, states_close, w_state

REF = WCoefficients(REF_ALPHAS)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail

    return emit


def test_criterion_1_single_shot_endpoint(report):
    t0 = time.perf_counter()
    closed = analytic.p_total_ppc(REF.alphas2)
    simulated = ppc_run(REF).total_p
    est = estimate(REF, GateKind.PPC, trials=1_000_000, seed=2024)
    elapsed = time.perf_counter() - t0
    z = (est.p_hat - closed) / est.stderr
    ok = (
        abs(closed - 0.03228) <= 1e-4
        and abs(simulated - 0.03228) <= 1e-4
        and abs(simulated - closed) <= 1e-12
        and abs(z) <= 4
        and elapsed < 5
    )
    report(1, ok, f"analytic={closed:.8f} simulator={simulated:.8f} mc={est.p_hat:.6f} z={z:+.2f} t={elapsed:.2f}s")


def test_criterion_2_retry_endpoint(report):
    closed = analytic.p_total_cpc(REF.alphas2, 8).total
    simulated = cpc_run(REF, 8).total_p
    ok = abs(simulated - 0.28575) <= 1e-3 and abs(closed - simulated) <= 1e-12
    report(2, ok, f"analytic={closed!r} simulator={simulated!r} |diff|={abs(closed - simulated):.1e}")


def test_criterion_3_bell_pair(report):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        coeffs = random_coeffs(rng, 2)
        a2 = coeffs.alphas2
        worst = max(worst, abs(ppc_run(coeffs).total_p - 2 * a2[0] * a2[1]))
    report(3, worst <= 1e-12, f"50 pairs, max |P - 2 a1^2 a2^2| = {worst:.1e}")


def test_criterion_4_oracle_suite(report):
    t0 = time.perf_counter()
    summary = verify_suite(n_max=6, instances=100, seed=0, max_m=4, atol=1e-12)
    elapsed = time.perf_counter() - t0
    checked = sum(summary["passed"].values()) + sum(summary["failed"].values())
    literal = summary["passed"]["literal_form"], summary["failed"]["literal_form"]
    ok = summary["ok"] and elapsed < 60 and all(summary["passed"][c] > 0 for c in CHECKS)
    report(
        4,
        ok,
        f"{checked} comparisons, max err {summary['max_abs_error']:.1e}, "
        f"literal form {literal[0]} agree / {literal[1]} disagree, t={elapsed:.1f}s",
    )


def _shared_walk(coeffs, gate, max_m):
    """Every success path, sharing subtrees whose states agree up to a global phase.

    Each attempt's + and - children are compared to 1e-12 before one of them
    stands in for both, so every leaf fidelity is that of a real path.
    Returns (fidelities, number of paths represented, minus-paths seen).
    """
    steps = analytic.step_order(coeffs.n)
    max_m = 1 if gate is GateKind.PPC else max_m
    fids, minus_seen = [], 0

    def walk(state, idx, m, paths):
        nonlocal minus_seen
        if idx == len(steps):
            fids.append((max_w_fidelity(state), paths))
            return
        records = run_step(state, steps[idx], m, gate, max_m=max_m)
        for parity in ParityOutcome:
            kids = [r for r in records if r.parity is parity and not r.terminal]
            if not kids:
                continue
            first = kids[0].post_state
            if not all(states_close(first, r.post_state, atol=1e-12, up_to_phase=True) for r in kids[1:]):
                raise AssertionError("corrected branches differ")
            minus_seen += sum(r.corrected for r in kids)
            if parity is ParityOutcome.EVEN:
                walk(first, idx + 1, 1, paths * len(kids))
            else:
                walk(first, idx, m + 1, paths * len(kids))

    walk(w_state(coeffs), 0, 1, 1)
    return fids, minus_seen


def test_criterion_5_success_fidelity(report):
    rng = np.random.default_rng(5)
    worst, paths, minus = 0.0, 0, 0
    for n in range(2, 7):
        for complex_phases in (False, True):
            for _ in range(6):
                coeffs = random_coeffs(rng, n, complex_phases)
                for gate in GateKind:
                    for max_m in (1, 2, 3, 4) if gate is GateKind.CPC else (1,):
                        fids, seen = _shared_walk(coeffs, gate, max_m)
                        worst = max([worst] + [abs(f - 1) for f, _ in fids])
                        paths += sum(p for _, p in fids)
                        minus += seen
    # literal enumeration, no sharing, on smaller trees
    literal = 0
    for n in (2, 3, 4):
        coeffs = random_coeffs(rng, n, complex_phases=True)
        for gate, max_m in ((GateKind.PPC, 1), (GateKind.CPC, 3)):
            for _, f in success_fidelities(coeffs, gate, max_m):
                worst = max(worst, abs(f - 1))
                literal += 1
    ok = worst <= 1e-12 and minus > 0
    report(5, ok, f"{paths} success paths ({literal} enumerated literally), {minus} corrected branches, max |F-1| = {worst:.1e}")


def test_criterion_6_pivot_optimality(report):
    rng = np.random.default_rng(6)
    violations = 0
    for i in range(200):
        n = 2 + i % 5
        coeffs = random_coeffs(rng, n, complex_phases=bool(i % 2))
        best = select_pivot(coeffs)
        for alt in range(1, n + 1):
            if ppc_run(coeffs, alt).total_p > ppc_run(coeffs, best).total_p + 1e-12:
                violations += 1
            for max_m in (2, 4, 8):
                table = analytic.p_total_cpc
                if table(coeffs.alphas2, max_m, alt).total > table(coeffs.alphas2, max_m, best).total + 1e-12:
                    violations += 1
    # five-photon sets that differ only in which coefficient sits second
    sets = [(0.4, 0.3, 0.5, 0.5, 0.5), (0.5, 0.4, 0.3, 0.5, 0.5), REF_ALPHAS]
    totals = [analytic.p_total_cpc([a * a for a in s], 8).total for s in sets]
    ordered = totals[0] > totals[1] > totals[2]
    report(6, violations == 0 and ordered, f"200 instances, {violations} violations; smaller second coefficient ranks {ordered}")


def test_criterion_7_figure_shapes(report):
    rows = sweep_rows(REF, 8, 2, "simulator")
    cum = {}
    for k, m, _p, p_cum, _tot in rows:
        cum.setdefault(k, []).append(p_cum)
    same = cum[1] == cum[3]

    rng = np.random.default_rng(7)
    families = [REF] + [random_coeffs(rng, 2 + i % 5, bool(i % 2)) for i in range(40)]
    # four-photon sets; the second one is renormalized
    for squares in ((1 / 6, 1 / 12, 1 / 2, 1 / 4), (1 / 4, 1 / 6, 1 / 2, 1 / 4), (1 / 2, 1 / 4, 1 / 6, 1 / 12), (1 / 12, 1 / 2, 1 / 4, 1 / 6)):
        families.append(WCoefficients.normalized([math.sqrt(x) for x in squares]))
    monotone = equal_single = True
    for coeffs in families:
        totals = [r[4] for r in sweep_rows(coeffs, 8, 2, "analytic") if r[0] == analytic.step_order(coeffs.n)[-1]]
        monotone &= all(b >= a for a, b in zip(totals, totals[1:]))
        single, retry = ppc_run(coeffs), cpc_run(coeffs, 1)
        equal_single &= single.step_table == pytest.approx(retry.step_table, abs=1e-15)
    ok = same and monotone and equal_single
    report(7, ok, f"k=1 vs k=3 identical {same}; totals nondecreasing {monotone}; one-try retry equals single shot {equal_single}")


def test_criterion_8_uniform_input(report):
    worst = 0.0
    for n in range(2, 9):
        coeffs = WCoefficients.normalized([1.0] * n)
        for result in (ppc_run(coeffs), cpc_run(coeffs, 1)):
            worst = max([worst] + [abs(p - 0.5) for p in result.per_step_p.values()])
            worst = max(worst, abs(result.total_p - 2.0 ** -(n - 1)))
        worst = max(worst, abs(analytic.p_total_ppc(coeffs.alphas2) - 2.0 ** -(n - 1)))
    report(8, worst <= 1e-12, f"n=2..8, max deviation {worst:.1e}")
