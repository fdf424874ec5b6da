"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the pytest terminal summary.
"""

import json
import math
import numbers
import time

import numpy as np
import pytest

from orbitlf import characters as ch
from orbitlf.cli import run
from orbitlf.congruence import small_box_probe
from orbitlf.lfunc import l_one
from orbitlf.mollifier import desk_params, log_bound_margins, mollified_vth_moment, asymptotic_params
from orbitlf.moments import moment_error_sweep, second_moment
from orbitlf.report import strip_timing
from orbitlf.verify import (
    check_afe_vs_oracle,
    check_congruence,
    check_diagonal_convergence,
    check_gauss_sums,
    check_holder,
    check_mollifier,
    check_moment_routes,
    check_orbit_averages,
    check_orbit_partition,
    check_pth_roots_of_unity,
    check_weighted_averages,
    random_boxes,
    twist_residues,
)

IDENTITY_LADDER = [(3, 3), (3, 4), (3, 5), (3, 6), (5, 3)]


def summarize(results):
    failed = [r.name for r in results if not r.passed]
    worst = max((r.worst for r in results), default=0.0)
    return not failed, f"checks={len(results)} failed={failed} worst={worst:.2e}"


def test_criterion_1_exact_identity_suite(record_criterion):
    start = time.perf_counter()
    results = [check_pth_roots_of_unity(3**8)]
    for p, k in IDENTITY_LADDER:
        mod = ch.build_modulus(p, k)
        results += [check_orbit_partition(mod), check_orbit_averages(mod), check_gauss_sums(mod),
                    check_weighted_averages(mod)]
    elapsed = time.perf_counter() - start
    ok, detail = summarize(results)
    passed = ok and elapsed < 180
    record_criterion(1, "exact identity suite on 3^3..3^6, 5^3", passed, f"{detail} elapsed={elapsed:.1f}s")
    for r in results:
        print(r.line())
    assert passed


def test_criterion_2_congruence_counting(record_criterion):
    boxes = random_boxes(50, seed=0)
    assert all(b.p in (3, 5, 7) and b.alpha <= 8 and b.A * b.B <= 10**6 for b in boxes)
    result = check_congruence(50, seed=0)
    passed = result.passed and result.elapsed < 60
    record_criterion(2, "congruence counts vs brute force, naive bound", passed,
                     f"{result.detail} elapsed={result.elapsed:.1f}s")
    assert passed


def test_criterion_3_afe_vs_oracle(record_criterion):
    mod = ch.build_modulus(3, 5)
    result = check_afe_vs_oracle(mod, configs=[(2, 1), (3, 1)])
    passed = result.passed and result.elapsed < 120
    record_criterion(3, "AFE product vs oracle, q=3^5, heights (2,1),(3,1)", passed,
                     f"worst={result.worst:.2e} evaluations={result.detail['evaluations']} elapsed={result.elapsed:.1f}s")
    assert passed


def test_criterion_4_moment_decomposition(record_criterion):
    results = [check_moment_routes(ch.build_modulus(3, k)) for k in (4, 5)]
    passed = all(r.passed for r in results)
    detail = "; ".join(f"q={3**k} route={r.worst:.2e} reassembly={r.detail['reassembly_gap']:.2e}"
                       for k, r in zip((4, 5), results))
    record_criterion(4, "direct vs AFE moments, full and thin orbits", passed, detail)
    assert passed


def test_criterion_5_second_moment_main_term(record_criterion):
    mod = ch.build_modulus(3, 5)
    b1, b2 = twist_residues(mod, 2, 1)
    eta1, eta2 = mod.character(b1), mod.character(b2)
    value = second_moment(ch.full_orbit(mod, 1), eta1, eta2)
    main = l_one(eta1 * eta2.conj())
    diag = check_diagonal_convergence(mod)
    routes = check_moment_routes(mod)
    passed = diag.passed and routes.passed
    errors = ", ".join(f"X={x:g}:{e:.2e}" for x, e in zip(diag.detail["X"], diag.detail["errors"]))
    record_criterion(5, "second moment vs L(1, eta), diagonal convergence", passed,
                     f"|M - L(1,eta)|={abs(value - main):.3e} diagonal errors {errors}")
    assert passed


def test_criterion_6_mollifier_structure(record_criterion):
    result = check_mollifier(ch.build_modulus(3, 4))
    d = result.detail
    record_criterion(6, "mollifier two routes, exp grid, case split, c bound", result.passed,
                     f"worst={result.worst:.2e} grid_min={d['exp_grid_min_gap']:.2e} cases={d['cases']} "
                     f"rejects_c={d['asymptotic_rejects_c_at_bound']} c_bound={d['c_bound']:.4e}")
    assert result.passed


def test_criterion_7_holder_chain(record_criterion):
    results = [check_holder(ch.build_modulus(3, k)) for k in (4, 5)]
    passed = all(r.passed for r in results)
    detail = "; ".join(f"q={3**k} count={r.detail['count']}/{r.detail['size']} "
                       f"lower={r.detail['lower_bound']:.3f} slack={r.detail['relative_slack']:.3f}"
                       for k, r in zip((4, 5), results))
    record_criterion(7, "Hoelder chain and count lower bound", passed, detail)
    assert passed


MOMENT_ARGS = ["moment", "--p", "3", "--k", "5", "--c", "1", "--eta1", "27", "--eta2", "9", "--m1", "2", "--m2", "1"]
MOLLIFY_ARGS = ["mollify", "--p", "3", "--k", "4", "--eta1", "9", "--eta2", "27"]


def _run_json(capsys, argv):
    code = run(argv)
    out, _ = capsys.readouterr()
    assert code == 0
    return json.loads(out)


def _numeric(node, path=""):
    if isinstance(node, dict):
        for k, v in node.items():
            yield from _numeric(v, f"{path}/{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            yield from _numeric(v, f"{path}/{i}")
    elif isinstance(node, numbers.Number) and not isinstance(node, bool):
        yield path, node


def test_criterion_8_reproducibility(capsys, record_criterion):
    identical = True
    worst = 0.0
    for argv in (MOMENT_ARGS, MOLLIFY_ARGS):
        a = strip_timing(_run_json(capsys, argv))
        b = strip_timing(_run_json(capsys, argv))
        identical &= json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
        one = strip_timing(_run_json(capsys, argv + ["--workers", "1"]))
        eight = strip_timing(_run_json(capsys, argv + ["--workers", "8"]))
        one["config"].pop("workers")
        eight["config"].pop("workers")
        x, y = dict(_numeric(one)), dict(_numeric(eight))
        identical &= x.keys() == y.keys()
        worst = max(worst, max(abs(x[k] - y[k]) for k in x))
    passed = identical and worst <= 1e-10
    record_criterion(8, "bitwise reruns, 1 vs 8 workers", passed, f"identical={identical} worker_gap={worst:.1e}")
    assert passed


def test_criterion_9_report_envelopes(record_criterion):
    start = time.perf_counter()
    mod = ch.build_modulus(3, 5)
    orbit = ch.full_orbit(mod, 1)
    b1, b2 = twist_residues(mod, 2, 1)
    eta1, eta2 = mod.character(b1), mod.character(b2)
    lines = []
    for theta in (0.0, 0.1, 0.2, 0.3):
        s = moment_error_sweep(orbit, eta1, eta2, theta)
        lines.append(f"sweep theta={theta} twists={s['twists']} |E|={s['abs_error']:.3e} "
                     f"envelope={s['envelope']:.3e} ratio={s['ratio']:.3f}")
    for label, make in (("desk v=4", lambda q: desk_params(q, (0.15, 0.35), (4, 4), v=4)),
                        ("asymptotic v=2", lambda q: asymptotic_params(q, v=2))):
        for p, k in [(3, 3), (3, 4), (3, 5), (5, 3)]:
            m = ch.build_modulus(p, k)
            params = make(m.q)
            total = mollified_vth_moment(m, params.v, params)
            lines.append(f"ladder {label} q={m.q} sum={total:.4f} ratio={total / m.q:.4f}")
    margins = log_bound_margins(orbit, float(mod.q))
    lines.append(f"log bound x=q: min={margins['min_margin']:.3f} max={margins['max_margin']:.3f} "
                 f"violations={margins['violations']}")
    for p, top in ((3, 14), (5, 12), (11, 9), (13, 9)):
        probe = small_box_probe(p, list(range(2, top + 1)), 0.05)
        hits = [r.alpha for r in probe["rows"] if r.violating_boxes]
        lines.append(f"small boxes p={p}: alphas with solutions={hits} clean_from={probe['clean_from_alpha']}")
    elapsed = time.perf_counter() - start
    for line in lines:
        print(line)
    emitted = bool(lines) and math.isfinite(margins["min_margin"])
    passed = emitted and elapsed < 600
    record_criterion(9, "report-only envelopes emitted", passed, f"rows={len(lines)} elapsed={elapsed:.1f}s")
    assert passed
