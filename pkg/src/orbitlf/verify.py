"""Exhaustive identity checks over a ladder of moduli.

Each check returns a ``CheckResult`` carrying the largest observed deviation
and the tolerance it was held to.  The CLI ``verify`` subcommand and the
acceptance tests both run these.
"""

from __future__ import annotations

import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from sympy import mobius, totient

from . import characters as ch
from .congruence import (
    DyadicBox,
    count_congruence,
    count_congruence_bruteforce,
    naive_bound_check,
    plus_minus_separation_holds,
    pth_roots_of_unity_check,
)
from .lfunc import AfeRequest, afe_product, functional_equation_gap, l_half_table
from .mollifier import (
    E2,
    desk_params,
    exp_inequality_gap,
    holder_lower_bound,
    prime_sums_small,
    size_case,
    mollifier_divisor_sum,
    mollifier_pieces,
    mollifier_power_divisor_sum,
    asymptotic_c_bound,
    asymptotic_params,
)
from .errors import ParameterError
from .moments import TwistPair, diagonal_term, thin_reassembly_gap, twisted_moment_afe, twisted_moment_direct
from .summation import ordered_map

GAUSS_TOL = 1e-6
ROUTE_TOL = 1e-8
AFE_TOL = 1e-6
MOMENT_TOL = 1e-6
REASSEMBLY_TOL = 1e-10
MOLLIFIER_TOL = 1e-12
DEFAULT_LADDER = ((3, 3), (3, 4), (3, 5), (5, 3))
DESK_BETA = (0.15, 0.35)
DESK_ELL = (4, 4)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float = 0.0
    tolerance: Optional[float] = None
    detail: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tol = f" tol={self.tolerance:.0e}" if self.tolerance is not None else ""
        return f"{status} {self.name} worst={self.worst:.3e}{tol}"


def _timed(fn: Callable[..., CheckResult]) -> Callable[..., CheckResult]:
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed = time.perf_counter() - start
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def parse_modulus(text: str) -> tuple[int, int]:
    """'3^5' -> (3, 5); a bare prime p means p^1."""
    if "^" in text:
        p, k = text.split("^")
        return int(p), int(k)
    n = int(text)
    for p in range(3, n + 1, 2):
        if n % p == 0:
            k = round(math.log(n, p))
            if p**k == n:
                return p, k
            break
    raise ValueError(f"{text} is not an odd prime power")


def twist_residues(mod: ch.PrimePowerModulus, h1: int, h2: int) -> tuple[int, int]:
    """Residues of imprimitive characters of heights h1, h2."""
    def res(h):
        return 0 if h == 0 else mod.p ** (mod.k - h)

    return res(h1), res(h2)


def height_configs(mod: ch.PrimePowerModulus) -> list[tuple[int, int]]:
    out = [(2, 1)] if mod.k > 2 else [(1, 0)]
    if mod.k > 3:
        out.append((3, 1))
    return out


@lru_cache(maxsize=64)
def _survival_mask(mod: ch.PrimePowerModulus, tau: int) -> np.ndarray:
    modulus = mod.p**tau
    return np.array([pow(int(n), mod.p - 1, modulus) == 1 for n in mod.power_table])


def _closed_form_table(orbit: ch.GaloisOrbit) -> np.ndarray:
    mod = orbit.modulus
    j = np.arange(mod.phi)
    orders = mod.phi // np.gcd(orbit.c * j, mod.phi)
    lookup = {int(r): float(Fraction(int(mobius(int(r))), int(totient(int(r))))) for r in set(orders.tolist())}
    return np.array([lookup[int(r)] for r in orders])


@_timed
def check_orbit_partition(mod: ch.PrimePowerModulus) -> CheckResult:
    orbits = ch.all_full_orbits(mod)
    covered = sorted(a for o in orbits for a in o.residues)
    ok = covered == sorted(mod.primitive_residues().tolist())
    sizes_ok = all(o.size == int(totient(mod.phi // o.c)) for o in orbits)
    thin_ok = True
    for o in orbits:
        for kappa in range(mod.k):
            pieces = ch.thin_orbits(mod, kappa, o)
            expected = mod.q_h(mod.k - 1) if kappa == mod.k - 1 else mod.p**kappa
            thin_ok &= sorted(a for t in pieces for a in t.residues) == list(o.residues)
            thin_ok &= all(t.size == expected for t in pieces)
    passed = ok and sizes_ok and thin_ok
    return CheckResult(f"orbit partition q={mod.q}", passed, 0.0 if passed else 1.0,
                       detail={"orbits": [o.size for o in orbits]})


@_timed
def check_orbit_averages(mod: ch.PrimePowerModulus) -> CheckResult:
    """Closed form vs summed roots, and the vanishing of the plain orbit average."""
    worst = 0.0
    passed = True
    survive_full = _survival_mask(mod, mod.k - 1)
    for orbit in ch.all_full_orbits(mod):
        brute = ch.orbit_average_table(orbit)
        closed = _closed_form_table(orbit)
        worst = max(worst, float(np.max(np.abs(brute - closed))))
        passed &= not np.any((closed != 0) & ~survive_full)
        for kappa in range(mod.k):
            survive = _survival_mask(mod, min(kappa + 1, mod.k - 1))
            for thin in ch.thin_orbits(mod, kappa, orbit):
                table = ch.orbit_average_table(thin)
                passed &= not np.any((np.abs(table) > 1e-9) & ~survive)
    passed &= worst <= 1e-10
    return CheckResult(f"orbit average closed form and vanishing q={mod.q}", bool(passed), worst, 1e-10)


def _ord_p(n: int, p: int, k: int) -> int:
    return k if n % p**k == 0 else ch.p_adic_valuation(n, p)


@_timed
def check_gauss_sums(mod: ch.PrimePowerModulus) -> CheckResult:
    """Support and size of Gauss sums of imprimitive characters, |eps| = 1 for primitive ones."""
    worst = 0.0
    n = np.arange(mod.q)
    ordp = np.array([_ord_p(int(x), mod.p, mod.k) for x in n])
    for b in mod.imprimitive_residues():
        eta = mod.character(int(b))
        h = eta.height
        if not 0 < h < mod.k:
            continue
        table = ch.gauss_sum_table(eta)
        support = ordp == mod.k - h
        worst = max(worst, float(np.max(np.abs(table[~support]))))
        worst = max(worst, float(np.max(np.abs(np.abs(table[support]) - mod.p ** (mod.k - h / 2)))))
    eps = ch.epsilon_table(mod)[mod.primitive_residues()]
    worst = max(worst, float(np.max(np.abs(np.abs(eps) - 1))))
    return CheckResult(f"Gauss sum support and magnitude q={mod.q}", worst <= GAUSS_TOL, worst, GAUSS_TOL)


def _twist_pairs(mod: ch.PrimePowerModulus) -> list[tuple[int, int]]:
    """For every height 0 < h < k, a pair against the principal character and one
    between two non-trivial twists."""
    pairs = []
    for h in range(1, mod.k):
        b = mod.p ** (mod.k - h)
        pairs.append((b, 0))
        other = mod.p ** (mod.k - 1) * (2 if mod.p > 3 else 1)
        if (b + other) % mod.phi != other and (b + other) % mod.p == 0:
            pairs.append(((b + other) % mod.phi, other))
    return pairs


@_timed
def check_weighted_averages(mod: ch.PrimePowerModulus, max_thin_per_level: Optional[int] = None) -> CheckResult:
    """Both routes to the root-number weighted average agree, vanish where forced,
    and respect the w-sum bound."""
    worst = 0.0
    bound_ok = True
    checked = 0
    for b1, b2 in _twist_pairs(mod):
        eta1, eta2 = mod.character(b1), mod.character(b2)
        h = (eta1 * eta2.conj()).height
        for orbit in ch.all_full_orbits(mod):
            family = [orbit]
            for kappa in range(mod.k):
                pieces = ch.thin_orbits(mod, kappa, orbit)
                family.extend(pieces[:max_thin_per_level] if max_thin_per_level else pieces)
            for o in family:
                direct, via_w = ch.epsilon_average_tables(o, eta1, eta2)
                survive = _survival_mask(mod, ch.vanishing_level(o, h))
                worst = max(worst, float(np.max(np.abs(direct - via_w))))
                worst = max(worst, float(np.max(np.abs(direct[~survive]), initial=0.0)))
                bound_ok &= bool(np.all(np.abs(direct) <= ch.weighted_average_bound(o, h) + ROUTE_TOL))
                checked += 1
    return CheckResult(f"weighted orbit average routes q={mod.q}", worst <= ROUTE_TOL and bound_ok, worst, ROUTE_TOL,
                       detail={"orbits_checked": checked, "bound_respected": bound_ok})


@_timed
def check_pth_roots_of_unity(limit: int = 3**8) -> CheckResult:
    failures = []
    cases = 0
    for p in (3, 5, 7, 11, 13, 17, 19, 23):
        alpha = 1
        while p**alpha <= limit:
            holds, _ = pth_roots_of_unity_check(p, alpha)
            cases += 1
            if not holds:
                failures.append((p, alpha))
            alpha += 1
    return CheckResult(f"m^p = 1 forces m = 1 mod p^(alpha-1), p^alpha <= {limit}", not failures,
                       float(len(failures)), 0.0, detail={"cases": cases, "failures": failures})


def random_boxes(n: int, seed: int, max_area: int = 10**6) -> list[DyadicBox]:
    rng = random.Random(seed)
    boxes = []
    for _ in range(n):
        p = rng.choice((3, 5, 7))
        alpha = rng.randint(1, 8)
        A = rng.randint(1, 1000)
        B = rng.randint(1, max_area // A)
        boxes.append(DyadicBox(A, B, p, alpha))
    return boxes


@_timed
def check_congruence(n_boxes: int = 50, seed: int = 0) -> CheckResult:
    mismatches = 0
    bound_failures = 0
    split_failures = 0
    separation_failures = 0
    for box in random_boxes(n_boxes, seed):
        c = count_congruence(box)
        split_failures += c.d0_raw != c.d1_raw + c.d2_raw
        mismatches += (c.d0_raw, c.d1_raw, c.d2_raw) != count_congruence_bruteforce(box)
        bound_failures += not naive_bound_check(box, c.d0_raw).holds
        separation_failures += not plus_minus_separation_holds(box)
    bad = mismatches + bound_failures + split_failures + separation_failures
    return CheckResult(f"congruence counts on {n_boxes} random boxes", bad == 0, float(bad), 0.0,
                       detail={"mismatches": mismatches, "bound_failures": bound_failures,
                               "split_failures": split_failures, "separation_failures": separation_failures})


@_timed
def check_afe_vs_oracle(mod: ch.PrimePowerModulus, configs=None, workers: int = 1) -> CheckResult:
    """AFE product against oracle values for every primitive character."""
    table = l_half_table(mod)
    worst = 0.0
    evaluations = 0
    for h1, h2 in configs or height_configs(mod):
        b1, b2 = twist_residues(mod, h1, h2)
        eta1, eta2 = mod.character(b1), mod.character(b2)
        h = (eta1 * eta2.conj()).height
        for X in (1.0, mod.p ** (h / 2)):
            def one(a, X=X):
                chi = mod.character(int(a))
                exact = table[(a + b1) % mod.phi] * np.conj(table[(a + b2) % mod.phi])
                return abs(afe_product(AfeRequest(chi, eta1, eta2, X)) - exact)

            gaps = ordered_map(one, mod.primitive_residues().tolist(), workers)
            worst = max(worst, max(gaps))
            evaluations += len(gaps)
    return CheckResult(f"AFE vs oracle q={mod.q}", worst <= AFE_TOL, worst, AFE_TOL, detail={"evaluations": evaluations})


@_timed
def check_functional_equation(mod: ch.PrimePowerModulus, samples: int = 6) -> CheckResult:
    residues = mod.primitive_residues()[:: max(1, len(mod.primitive_residues()) // samples)]
    worst = max(functional_equation_gap(mod.character(int(a)), s) for a in residues for s in (0.1, 0.3j))
    return CheckResult(f"functional equation q={mod.q}", worst <= 1e-10, worst, 1e-10)


@_timed
def check_moment_routes(mod: ch.PrimePowerModulus, workers: int = 1, s_minus_sign: int = 1) -> CheckResult:
    """Direct and AFE moments on full and thin (kappa = k-2) orbits; thin pieces reassemble the full one."""
    worst = 0.0
    reassembly = 0.0
    twists = [TwistPair(1, 1), TwistPair(2, 1), TwistPair(4, 2)]
    for h1, h2 in height_configs(mod):
        b1, b2 = twist_residues(mod, h1, h2)
        eta1, eta2 = mod.character(b1), mod.character(b2)
        full = ch.full_orbit(mod, 1)
        pieces = ch.thin_orbits(mod, max(mod.k - 2, 0), full)
        for pair in twists:
            for orbit in (full, pieces[0]):
                d = twisted_moment_direct(orbit, eta1, eta2, pair, workers)
                a = twisted_moment_afe(orbit, eta1, eta2, pair, workers=workers, s_minus_sign=s_minus_sign).total
                worst = max(worst, abs(d - a))
            reassembly = max(reassembly, thin_reassembly_gap(full, pieces, eta1, eta2, pair))
    passed = worst <= MOMENT_TOL and reassembly <= REASSEMBLY_TOL
    return CheckResult(f"moment routes q={mod.q}", passed, worst, MOMENT_TOL, detail={"reassembly_gap": reassembly})


@_timed
def check_diagonal_convergence(mod: ch.PrimePowerModulus) -> CheckResult:
    h1, h2 = height_configs(mod)[0]
    b1, b2 = twist_residues(mod, h1, h2)
    eta1, eta2 = mod.character(b1), mod.character(b2)
    h = (eta1 * eta2.conj()).height
    parity = ch.full_orbit(mod, 1).parity
    kappas = ((parity + b1) % 2, (parity + b2) % 2)
    Xs = [1.0, mod.p ** (h / 2), float(mod.p**h)]
    errors = [diagonal_term(TwistPair(1, 1), eta1, eta2, X, kappas).error for X in Xs]
    monotone = all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))
    return CheckResult(f"diagonal term approaches main term q={mod.q}", monotone, errors[-1], None,
                       detail={"X": Xs, "errors": errors})


@_timed
def check_mollifier(mod: ch.PrimePowerModulus, beta=DESK_BETA, ell=DESK_ELL) -> CheckResult:
    """Truncated exponential vs divisor-sum expansion (and its square), the
    exponential inequality, the case split, and the asymptotic-mode bound on c."""
    params = desk_params(mod.q, beta, ell)
    worst = 0.0
    cases = Counter()
    trichotomy_ok = True
    residues = mod.primitive_residues()
    pieces = mollifier_pieces(mod, residues, params)
    for row, a in zip(pieces, residues):
        chi = mod.character(int(a))
        for j in range(params.K + 1):
            worst = max(worst, abs(row[j] - mollifier_divisor_sum(chi, j, params)))
            worst = max(worst, abs(row[j] ** 2 - mollifier_power_divisor_sum(chi, j, 2, params)))
        case = size_case(chi, params)
        cases[str(case)] += 1
        member = [prime_sums_small(chi, r, params) for r in range(params.K + 1)]
        labels = [not member[0], all(member), member[0] and not all(member)]
        trichotomy_ok &= sum(labels) == 1
    grid_gap = min(float(np.min(exp_inequality_gap(l, np.linspace(-l / E2, l / E2, 401)))) for l in range(2, 41, 2))
    bound = asymptotic_c_bound(4)
    try:
        asymptotic_params(mod.q, 4, c=bound * (1 + 1e-9))
        rejects = False
    except ParameterError:
        rejects = True
    passed = worst <= MOLLIFIER_TOL and grid_gap >= 0 and trichotomy_ok and rejects
    return CheckResult(f"mollifier structure q={mod.q}", passed, worst, MOLLIFIER_TOL,
                       detail={"cases": dict(cases), "exp_grid_min_gap": grid_gap, "asymptotic_rejects_c_at_bound": rejects,
                               "c_bound": bound})


@_timed
def check_holder(mod: ch.PrimePowerModulus, beta=DESK_BETA, ell=DESK_ELL, workers: int = 1) -> CheckResult:
    params = desk_params(mod.q, beta, ell, v=4)
    h1, h2 = height_configs(mod)[0]
    b1, b2 = twist_residues(mod, h1, h2)
    chain = holder_lower_bound(ch.full_orbit(mod, 1), mod.character(b1), mod.character(b2), params, workers=workers)
    passed = chain.holds and chain.lower_bound <= chain.count
    slack = (chain.lhs - chain.rhs) / chain.lhs if chain.lhs else 0.0
    return CheckResult(f"Hoelder chain q={mod.q}", passed, max(0.0, -slack), 1e-9,
                       detail={"count": chain.count, "size": chain.size, "lower_bound": chain.lower_bound,
                               "relative_slack": slack})


def run_suite(ladder: Iterable[tuple[int, int]] = DEFAULT_LADDER, workers: int = 1, seed: int = 0,
              fault: Optional[str] = None) -> list[CheckResult]:
    """Run every check on each modulus in the ladder plus the modulus-free checks."""
    s_minus_sign = -1 if fault == "s-minus-sign" else 1
    results = [check_pth_roots_of_unity(), check_congruence(50, seed)]
    for p, k in ladder:
        mod = ch.build_modulus(p, k)
        results += [
            check_orbit_partition(mod),
            check_orbit_averages(mod),
            check_gauss_sums(mod),
            check_weighted_averages(mod),
            check_afe_vs_oracle(mod, workers=workers),
            check_functional_equation(mod),
            check_moment_routes(mod, workers, s_minus_sign),
            check_mollifier(mod),
            check_holder(mod, workers=workers),
        ]
    return results
