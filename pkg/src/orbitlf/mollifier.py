"""A short Euler-product mollifier and the inequalities used to bound moments.

Primes up to q^(beta_K) are cut into intervals I_0, ..., I_K.  On each one
the mollifier piece is a truncated exponential of the prime sum
P_I(chi; K), and M(chi) is the product of the pieces.  Two parameter modes
exist: ``asymptotic`` follows the large-q recipe (and empties every interval at
computable q), ``desk`` takes user-chosen cut points so the structure can be
exercised on small moduli.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .arith import ArithmeticFunctionTable
from .characters import DirichletCharacter, GaloisOrbit, PrimePowerModulus, check_twist_pair
from .errors import OddEll, ParameterError, VerificationFailure, XTooSmall
from .lfunc import l_half_table, l_one
from .summation import fsum_complex, fsum_real, ordered_map

E2 = math.e**2


@lru_cache(maxsize=1)
def lambda_constant() -> float:
    """The root of exp(-x) = x + x^2/2 (about 0.4912)."""
    return brentq(lambda x: math.exp(-x) - x - x * x / 2, 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def asymptotic_c_bound(v: int) -> float:
    """Upper limit 4 (e^(1/4) - 1)^4 / (e (v+2)^4) for the last cut point."""
    return 4 * (math.exp(0.25) - 1) ** 4 / (math.e * (v + 2) ** 4)


def _default_s(beta: float) -> int:
    return 2 * math.floor(1 / (8 * beta))


@dataclass(frozen=True)
class MollifierParams:
    q: int
    v: int
    lam: float
    beta: tuple
    ell: tuple
    s: tuple
    mode: str
    c: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("asymptotic", "desk"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if not (len(self.beta) == len(self.ell) == len(self.s)) or not self.beta:
            raise ParameterError("beta, ell and s must be non-empty and of equal length")
        if any(b <= 0 for b in self.beta) or any(b2 <= b1 for b1, b2 in zip(self.beta, self.beta[1:])):
            raise ParameterError("beta must be positive and strictly increasing")
        if self.v < 1:
            raise ParameterError("v must be a positive integer")

    @property
    def K(self) -> int:
        return len(self.beta) - 1

    @property
    def log_q(self) -> float:
        return math.log(self.q)

    def upper_edge(self, j: int) -> float:
        return self.q ** self.beta[j]

    def lower_edge(self, j: int) -> float:
        return 1.0 if j == 0 else self.q ** self.beta[j - 1]

    @cached_property
    def _primes(self) -> np.ndarray:
        top = int(math.floor(self.upper_edge(self.K) + 1e-9))
        return ArithmeticFunctionTable(max(top, 2)).primes

    def interval_primes(self, j: int) -> np.ndarray:
        pr = self._primes
        return pr[(pr > self.lower_edge(j)) & (pr <= self.upper_edge(j))]

    @property
    def all_intervals_empty(self) -> bool:
        return all(self.interval_primes(j).size == 0 for j in range(self.K + 1))

    def technical_hypothesis_holds(self) -> bool:
        """(v + 2) sum_r ell_r beta_r < 1."""
        return (self.v + 2) * sum(l * b for l, b in zip(self.ell, self.beta)) < 1

    def describe(self) -> dict:
        return {
            "q": self.q,
            "v": self.v,
            "lambda": self.lam,
            "K": self.K,
            "beta": list(self.beta),
            "ell": list(self.ell),
            "s": list(self.s),
            "mode": self.mode,
            "c": self.c,
        }


def desk_params(q: int, beta: Sequence[float], ell: Sequence[int], v: int = 4, s: Optional[Sequence[int]] = None) -> MollifierParams:
    for l in ell:
        if l < 2 or l % 2:
            raise OddEll(f"ell={l} must be even and at least 2")
    s = tuple(s) if s is not None else tuple(_default_s(b) for b in beta)
    return MollifierParams(q, v, lambda_constant(), tuple(float(b) for b in beta), tuple(int(x) for x in ell), s, "desk")


def asymptotic_params(q: int, v: int = 4, c: Optional[float] = None, check_even: bool = True) -> MollifierParams:
    """Cut points e^j log log q / log q below the last one, which is c.

    K is the number of those cut points lying below c, so at any computable
    q the list collapses to the single point beta_0 = c.
    """
    bound = asymptotic_c_bound(v)
    log_q = math.log(q)
    if log_q <= 1:
        raise ParameterError("q too small for log log q")
    if c is None:
        # walk down from half the bound until every ell_j comes out even
        for i in range(1000):
            candidate = bound * (0.5 - 1e-4 * i)
            if all(l % 2 == 0 for l in _asymptotic_schedule(log_q, candidate)[2]):
                c = candidate
                break
        else:
            raise OddEll("no even schedule found below the bound")
    if not 0 < c < bound:
        raise ParameterError(f"c={c} must lie in (0, {bound:.6g})")
    beta, s, ell = _asymptotic_schedule(log_q, c)
    if check_even:
        for l in ell:
            if l % 2:
                raise OddEll(f"ell={l} from floor(s^(3/4)) is odd")
    return MollifierParams(q, v, lambda_constant(), beta, ell, s, "asymptotic", c)


def _asymptotic_schedule(log_q: float, c: float):
    base = math.log(log_q) / log_q
    beta = []
    j = 0
    while math.exp(j) * base < c:
        beta.append(math.exp(j) * base)
        j += 1
    beta.append(c)
    s = tuple(_default_s(b) for b in beta)
    ell = tuple(math.floor(x**0.75) for x in s)
    return tuple(beta), s, ell


def truncated_exp(t, ell: int, check_even: bool = True):
    """E_ell(t) = sum_{s <= ell} t^s / s!."""
    if ell < 0:
        raise ParameterError("ell must be non-negative")
    if check_even and ell % 2:
        raise OddEll(f"ell={ell} is odd; E_ell is only positive for even ell")
    term = np.ones_like(t) if isinstance(t, np.ndarray) else 1.0 + 0 * t
    total = term
    for s in range(1, ell + 1):
        term = term * t / s
        total = total + term
    return total


def exp_inequality_gap(ell: int, t) -> np.ndarray:
    """(1 + e^(-ell/2)) E_ell(t) - e^t, non-negative for t <= ell/e^2."""
    t = np.asarray(t, dtype=float)
    return (1 + math.exp(-ell / 2)) * truncated_exp(t, ell) - np.exp(t)


def a_coefficient(prime, u: int, params: MollifierParams):
    scale = params.beta[u] * params.log_q
    lp = np.log(prime)
    return (1 - lp / scale) * np.exp(-params.lam * lp / scale)


def b_coefficient(prime, j: int, params: MollifierParams):
    scale = params.beta[j] * params.log_q
    lp = np.log(prime)
    return (1 - 2 * lp / scale) * np.exp(-2 * params.lam * lp / scale)


def _char_matrix(mod: PrimePowerModulus, residues: np.ndarray, primes: np.ndarray, power: int = 1) -> np.ndarray:
    """chi_r(prime^power) for every residue r (rows) and prime (columns)."""
    residues = np.asarray(residues, dtype=np.int64)
    idx = mod.index_table[np.asarray(primes, dtype=np.int64) % mod.q]
    e = (residues[:, None] * power * idx[None, :]) % mod.phi
    vals = mod.roots[e]
    return np.where(idx[None, :] >= 0, vals, 0)


def _check_modulus(mod: PrimePowerModulus, params: MollifierParams) -> None:
    if mod.q != params.q:
        raise ParameterError(f"parameters are for q={params.q}, character modulus is {mod.q}")


def prime_sums(mod: PrimePowerModulus, residues, j: int, u: int, params: MollifierParams) -> np.ndarray:
    """P_{I_j}(chi_r; u) for an array of residues r."""
    _check_modulus(mod, params)
    residues = np.atleast_1d(np.asarray(residues, dtype=np.int64))
    primes = params.interval_primes(j)
    if primes.size == 0:
        return np.zeros(residues.size, dtype=complex)
    weights = a_coefficient(primes.astype(float), u, params) / np.sqrt(primes)
    terms = _char_matrix(mod, residues, primes) * weights[None, :]
    return np.array([fsum_complex(row) for row in terms])


def p_interval(chi: DirichletCharacter, j: int, u: int, params: MollifierParams) -> complex:
    return complex(prime_sums(chi.modulus, [chi.residue], j, u, params)[0])


def mollifier_pieces(mod: PrimePowerModulus, residues, params: MollifierParams) -> np.ndarray:
    """M_j(chi_r) = E_{ell_j}(-P_{I_j}(chi_r; K)); rows are residues, columns j."""
    residues = np.atleast_1d(np.asarray(residues, dtype=np.int64))
    cols = [truncated_exp(-prime_sums(mod, residues, j, params.K, params), params.ell[j]) for j in range(params.K + 1)]
    return np.stack(cols, axis=1)


def mollifier_values(mod: PrimePowerModulus, residues, params: MollifierParams) -> np.ndarray:
    return np.prod(mollifier_pieces(mod, residues, params), axis=1)


def mollifier(chi: DirichletCharacter, params: MollifierParams) -> complex:
    return complex(mollifier_values(chi.modulus, [chi.residue], params)[0])


def _exponent_vectors(n_primes: int, max_total: int):
    for e in itertools.product(range(max_total + 1), repeat=n_primes):
        if sum(e) <= max_total:
            yield e


def _divisor_term(chi: DirichletCharacter, primes, e, params: MollifierParams) -> complex:
    mod = chi.modulus
    n = 1
    phase = 0
    for prime, a in zip(primes, e):
        if not a:
            continue
        if prime % mod.p == 0:
            return 0j
        n *= int(prime) ** a
        phase += a * mod.index(int(prime))
    a_n = float(np.prod([a_coefficient(float(pr), params.K, params) ** a for pr, a in zip(primes, e)]))
    sign = -1.0 if sum(e) % 2 else 1.0
    return mod.roots[chi.residue * phase % mod.phi] * sign * a_n / math.sqrt(n)


def mollifier_divisor_sum(chi: DirichletCharacter, j: int, params: MollifierParams) -> complex:
    """The piece M_j(chi) expanded over n built from primes of I_j with Omega(n) <= ell_j.

    Each n contributes chi(n) liouville(n) a(n; K) nu(n) / sqrt(n).
    """
    _check_modulus(chi.modulus, params)
    primes = [int(x) for x in params.interval_primes(j)]
    terms = []
    for e in _exponent_vectors(len(primes), params.ell[j]):
        nu = 1.0 / math.prod(math.factorial(a) for a in e)
        terms.append(nu * _divisor_term(chi, primes, e, params))
    return fsum_complex(terms)


def _restricted_nu_power(n_primes: int, ell: int, v: int) -> dict:
    """nu_v(n; ell) on exponent vectors: v-fold convolution of nu with Omega <= ell."""
    base = {e: 1.0 / math.prod(math.factorial(a) for a in e) for e in _exponent_vectors(n_primes, ell)}
    out = dict(base)
    for _ in range(v - 1):
        nxt: dict = {}
        for e1, w1 in out.items():
            for e2, w2 in base.items():
                key = tuple(x + y for x, y in zip(e1, e2))
                nxt[key] = nxt.get(key, 0.0) + w1 * w2
        out = nxt
    return out


def mollifier_power_divisor_sum(chi: DirichletCharacter, j: int, v: int, params: MollifierParams) -> complex:
    """M_j(chi)^v expanded with the restricted convolution weights nu_v(n; ell_j)."""
    _check_modulus(chi.modulus, params)
    primes = [int(x) for x in params.interval_primes(j)]
    weights = _restricted_nu_power(len(primes), params.ell[j], v)
    return fsum_complex([w * _divisor_term(chi, primes, e, params) for e, w in sorted(weights.items())])


def square_prime_factor(chi: DirichletCharacter, j: int, v: int, params: MollifierParams) -> float:
    """exp(v Re sum_{p <= q^(beta_j/2)} chi(p^2) b(p; j) / p)."""
    mod = chi.modulus
    pr = params._primes
    pr = pr[pr <= params.q ** (params.beta[j] / 2)]
    if pr.size == 0:
        return 1.0
    vals = _char_matrix(mod, [chi.residue], pr, power=2)[0]
    inner = fsum_real(np.real(vals * b_coefficient(pr.astype(float), j, params) / pr))
    return math.exp(v * inner)


def exp_majorant_product(chi: DirichletCharacter, j: int, v: int, params: MollifierParams) -> float:
    """prod_{r <= j} (1 + e^(-ell_r/2)) E_{ell_r}(v Re P_{I_r}(chi; j))."""
    out = 1.0
    for r in range(j + 1):
        P = p_interval(chi, r, j, params)
        out *= (1 + math.exp(-params.ell[r] / 2)) * truncated_exp(v * P.real, params.ell[r])
    return out


def prime_sums_small(chi: DirichletCharacter, r: int, params: MollifierParams) -> bool:
    """max over r <= u <= K of |Re P_{I_r}(chi; u)| is at most ell_r / (v e^2)."""
    limit = params.ell[r] / (params.v * E2)
    return all(abs(p_interval(chi, r, u, params).real) <= limit for u in range(r, params.K + 1))


@dataclass(frozen=True)
class SizeCase:
    kind: str  # NOT_IN_T0, IN_ALL_T_r or FIRST_FAILURE_AT
    index: Optional[int] = None

    def __str__(self) -> str:
        return f"{self.kind}({self.index})" if self.index is not None else self.kind


def size_case(chi: DirichletCharacter, params: MollifierParams) -> SizeCase:
    membership = [prime_sums_small(chi, r, params) for r in range(params.K + 1)]
    if not membership[0]:
        return SizeCase("NOT_IN_T0")
    if all(membership):
        return SizeCase("IN_ALL_T_r")
    return SizeCase("FIRST_FAILURE_AT", membership.index(False))


def log_l_upper_rhs(chi: DirichletCharacter, x: float, lam: Optional[float] = None) -> float:
    """Prime-power sum bounding log|L(1/2, chi)| from above, with the log q term."""
    if x <= 0 or math.log(x) < 2:
        raise XTooSmall("log x must be at least 2")
    lam = lambda_constant() if lam is None else lam
    mod = chi.modulus
    N = int(math.floor(x))
    table = ArithmeticFunctionTable(N)
    n = np.arange(2, N + 1)
    vm = table.von_mangoldt[2:]
    keep = vm > 0
    n, vm = n[keep], vm[keep]
    lx = math.log(x)
    vals = chi.values[n % mod.q]
    terms = vm * vals / (n ** (0.5 + lam / lx) * np.log(n)) * np.log(x / n) / lx
    return fsum_real(np.real(terms)) + (1 + lam) / 2 * math.log(mod.q) / lx


def log_bound_margins(orbit: GaloisOrbit, x: float) -> dict:
    """rhs - log|L(1/2, chi)| for every member of the orbit."""
    table = l_half_table(orbit.modulus)
    margins = [log_l_upper_rhs(chi, x) - math.log(abs(table[chi.residue])) for chi in orbit.members]
    return {
        "x": x,
        "size": orbit.size,
        "min_margin": min(margins),
        "max_margin": max(margins),
        "violations": sum(m < 0 for m in margins),
        "margins": margins,
    }


# ---------------------------------------------------------------------------
# moments with the mollifier


def _orbit_mollified(orbit: GaloisOrbit, eta1: DirichletCharacter, eta2: DirichletCharacter, params: MollifierParams, workers: int = 1):
    mod = orbit.modulus
    _check_modulus(mod, params)
    phi = mod.phi
    a = orbit.residue_array
    table = l_half_table(mod)
    r1, r2 = (a + eta1.residue) % phi, (a + eta2.residue) % phi
    blocks = np.array_split(np.arange(orbit.size), max(1, workers))
    m1 = np.concatenate(ordered_map(lambda b: mollifier_values(mod, r1[b], params), blocks, workers))
    m2 = np.concatenate(ordered_map(lambda b: mollifier_values(mod, r2[b], params), blocks, workers))
    return table[r1], table[r2], m1, m2


def main_term_euler_product(eta: DirichletCharacter, params: MollifierParams, degree: int = 12) -> tuple[complex, float]:
    """L(1, eta) times the local factors at p <= q^(beta_K), truncated at total degree ``degree``.

    Returns the value and a bound on the discarded tail, summed over primes.
    """
    mod = eta.modulus
    pr = params._primes
    pr = pr[pr <= params.upper_edge(params.K)]
    product = l_one(eta)
    tail = 0.0
    for prime in pr:
        z = eta.value(int(prime))
        if z == 0:
            continue
        a = float(a_coefficient(float(prime), params.K, params))
        terms = []
        for d in range(degree + 1):
            for i in range(d + 1):
                rest = d - i
                for j, k in {(rest, 0), (0, rest)}:
                    terms.append(
                        a ** (2 * i + j + k) * (-1) ** (j + k) * z**d
                        / (math.factorial(i + j) * math.factorial(i + k) * float(prime) ** d)
                    )
        product *= fsum_complex(terms)
        tail += sum((2 * d + 1) / float(prime) ** d for d in range(degree + 1, degree + 40))
    return product, tail


@dataclass(frozen=True)
class MollifiedMoment:
    value: complex
    main_term: complex
    tail_bound: float

    @property
    def ratio(self) -> float:
        return abs(self.value) / abs(self.main_term)


def mollified_second_moment(
    orbit: GaloisOrbit,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    params: MollifierParams,
    workers: int = 1,
) -> MollifiedMoment:
    """Orbit mean of L(1/2, chi eta1) L(1/2, conj(chi eta2)) M(chi eta1) M(conj(chi eta2))."""
    if params.v != 4:
        raise ParameterError("the mollified second moment is normalised for v = 4")
    check_twist_pair(orbit.modulus, eta1, eta2)
    l1, l2, m1, m2 = _orbit_mollified(orbit, eta1, eta2, params, workers)
    value = fsum_complex(l1 * np.conj(l2) * m1 * np.conj(m2)) / orbit.size
    main, tail = main_term_euler_product(eta1 * eta2.conj(), params)
    return MollifiedMoment(value, main, tail)


def mollified_vth_moment(mod: PrimePowerModulus, v: int, params: MollifierParams) -> float:
    """sum over primitive chi mod q of |L(1/2, chi) M(chi)|^v."""
    residues = mod.primitive_residues()
    if residues.size == 0:
        return 0.0
    L = l_half_table(mod)[residues]
    M = mollifier_values(mod, residues, params)
    return fsum_real(np.abs(L * M) ** v)


@dataclass(frozen=True)
class HolderChain:
    count: int
    size: int
    fourth_1: float
    fourth_2: float
    mollified_sum: complex
    lhs: float
    rhs: float
    holds: bool
    lower_bound: float
    scaled_lower_bound: float


def holder_lower_bound(
    orbit: GaloisOrbit,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    params: MollifierParams,
    threshold: float = 1e-8,
    slack: float = 1e-9,
    workers: int = 1,
) -> HolderChain:
    """count^2 * sum|L1 M1|^4 * sum|L2 M2|^4 >= |sum L1 conj(L2) M1 conj(M2)|^4 on the data.

    ``lower_bound`` is the count this forces, |sum|^2 / sqrt(F1 F2).
    ``scaled_lower_bound`` is |O| * |mean|^2, which drops the fourth-moment
    normalisation and is reported, not asserted.
    """
    check_twist_pair(orbit.modulus, eta1, eta2)
    l1, l2, m1, m2 = _orbit_mollified(orbit, eta1, eta2, params, workers)
    count = int(np.count_nonzero(np.abs(l1 * l2) > threshold))
    f1 = fsum_real(np.abs(l1 * m1) ** 4)
    f2 = fsum_real(np.abs(l2 * m2) ** 4)
    total = fsum_complex(l1 * np.conj(l2) * m1 * np.conj(m2))
    lhs = count**2 * f1 * f2
    rhs = abs(total) ** 4
    holds = lhs >= rhs * (1 - slack)
    if not holds:
        raise VerificationFailure(f"Hoelder chain violated: {lhs} < {rhs}")
    lower = abs(total) ** 2 / math.sqrt(f1 * f2) if f1 * f2 > 0 else 0.0
    scaled = orbit.size * abs(total / orbit.size) ** 2
    return HolderChain(count, orbit.size, f1, f2, total, lhs, rhs, holds, lower, scaled)
