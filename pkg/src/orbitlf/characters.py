"""Dirichlet characters modulo odd prime powers.

A modulus ``q = p**k`` is fixed together with a generator ``g`` of the unit
group, chosen as the smallest primitive root modulo ``p**2`` so that the same
generator works for every power of ``p``.  With ``phi = q_k = p**(k-1)*(p-1)``
the character of residue ``a`` is

    chi_a(n) = exp(2 pi i * a * ind(n) / phi),

where ``ind`` is the discrete logarithm to base ``g``.  Values are carried as
exact exponents modulo ``phi`` and only rendered to floating point at the end.

Galois orbits act on residues by multiplication with units modulo ``phi``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
from sympy import divisors, factorint, isprime, mobius, n_order, totient

from .errors import (
    EtaEqual,
    EtaNotImprimitive,
    EvenPrime,
    JOutOfRange,
    KappaOutOfRange,
    ModulusTooLarge,
    NotADivisor,
    NotCoprime,
    NotPrime,
)
from .summation import fsum_complex

DEFAULT_MAX_MODULUS = 10**7
TWO_PI_I = 2j * math.pi


def p_adic_valuation(n: int, p: int) -> int:
    n = abs(int(n))
    if n == 0:
        raise ValueError("valuation of zero is infinite")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def multiplicative_order(n: int, q: int) -> int:
    if math.gcd(n, q) != 1:
        raise NotCoprime(f"{n} is not a unit modulo {q}")
    if q == 1:
        return 1
    return int(n_order(n % q, q))


def _is_primitive_root(g: int, m: int, phi: int, prime_factors) -> bool:
    if math.gcd(g, m) != 1 or pow(g, phi, m) != 1:
        return False
    return all(pow(g, phi // ell, m) != 1 for ell in prime_factors)


class PrimePowerModulus:
    """The modulus ``p**k`` with its generator and discrete-log tables.

    ``index_table[n]`` is ``ind(n)`` for units and ``-1`` otherwise;
    ``power_table[j]`` is ``g**j mod q``.  Both arrays are read-only.
    Instances compare and hash by ``(p, k)``.
    """

    def __init__(self, p: int, k: int, max_modulus: int = DEFAULT_MAX_MODULUS):
        if not isinstance(p, (int, np.integer)) or p < 2 or not isprime(int(p)):
            raise NotPrime(f"p={p} is not prime")
        if p == 2:
            raise EvenPrime("only odd primes are supported")
        if k < 1:
            raise ValueError("k must be at least 1")
        p, k = int(p), int(k)
        q = p**k
        if q > max_modulus:
            raise ModulusTooLarge(f"q={q} exceeds the cap {max_modulus}")
        self.p, self.k, self.q = p, k, q
        self.phi = p ** (k - 1) * (p - 1)

        # smallest primitive root mod p^2, then confirmed against q itself
        factors_p2 = list(factorint(p * (p - 1)))
        g = 2
        while not _is_primitive_root(g, p * p, p * (p - 1), factors_p2):
            g += 1
        if not _is_primitive_root(g, q, self.phi, list(factorint(self.phi))):
            raise AssertionError(f"generator {g} failed the order check modulo {q}")
        self.generator = g

        index = np.full(q, -1, dtype=np.int64)
        power = np.empty(self.phi, dtype=np.int64)
        cur = 1
        for j in range(self.phi):
            index[cur] = j
            power[j] = cur
            cur = cur * g % q
        if cur != 1:
            raise AssertionError("generator cycle did not close")
        index.flags.writeable = False
        power.flags.writeable = False
        self.index_table = index
        self.power_table = power

    def __repr__(self) -> str:
        return f"PrimePowerModulus(p={self.p}, k={self.k})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimePowerModulus) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self) -> int:
        return hash((self.p, self.k))

    def q_h(self, h: int) -> int:
        """Size of the unit group modulo ``p**h``."""
        return 1 if h == 0 else self.p ** (h - 1) * (self.p - 1)

    @cached_property
    def roots(self) -> np.ndarray:
        """``exp(2 pi i j / phi)`` for ``j`` in ``range(phi)``."""
        r = np.exp(TWO_PI_I * np.arange(self.phi) / self.phi)
        r.flags.writeable = False
        return r

    @cached_property
    def units(self) -> np.ndarray:
        u = np.flatnonzero(self.index_table >= 0)
        u.flags.writeable = False
        return u

    def index(self, n: int) -> int:
        j = int(self.index_table[int(n) % self.q])
        if j < 0:
            raise NotCoprime(f"{n} is divisible by {self.p}")
        return j

    def is_unit(self, n: int) -> bool:
        return int(n) % self.p != 0

    def character(self, residue: int) -> "DirichletCharacter":
        return DirichletCharacter(self, int(residue) % self.phi)

    def primitive_residues(self) -> np.ndarray:
        a = np.arange(self.phi)
        return a[a % self.p != 0]

    def imprimitive_residues(self) -> np.ndarray:
        a = np.arange(self.phi)
        return a[a % self.p == 0]

    def height_of_residue(self, residue: int) -> int:
        a = int(residue) % self.phi
        if a == 0:
            return 0
        return self.k - min(p_adic_valuation(a, self.p), self.k - 1)


@lru_cache(maxsize=64)
def _cached_modulus(p: int, k: int) -> PrimePowerModulus:
    return PrimePowerModulus(p, k)


def build_modulus(p: int, k: int, max_modulus: int = DEFAULT_MAX_MODULUS) -> PrimePowerModulus:
    if max_modulus == DEFAULT_MAX_MODULUS and isinstance(p, int) and isinstance(k, int):
        return _cached_modulus(p, k)
    return PrimePowerModulus(p, k, max_modulus)


@dataclass(frozen=True)
class UnitRootValue:
    """``exp(2 pi i numerator / order)``, or zero when ``numerator`` is None."""

    numerator: Optional[int]
    order: int

    @property
    def is_zero(self) -> bool:
        return self.numerator is None

    def to_complex(self) -> complex:
        if self.numerator is None:
            return 0j
        return cmath.exp(TWO_PI_I * self.numerator / self.order)

    def __complex__(self) -> complex:
        return self.to_complex()


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: PrimePowerModulus
    residue: int

    def __post_init__(self):
        object.__setattr__(self, "residue", int(self.residue) % self.modulus.phi)

    def __repr__(self) -> str:
        return f"chi[{self.residue} mod {self.modulus.q}]"

    @property
    def height(self) -> int:
        return self.modulus.height_of_residue(self.residue)

    @property
    def is_primitive(self) -> bool:
        return self.residue % self.modulus.p != 0

    @property
    def is_principal(self) -> bool:
        return self.residue == 0

    @property
    def characteristic(self) -> int:
        return math.gcd(self.residue, self.modulus.phi)

    @property
    def parity(self) -> int:
        """0 for even characters, 1 for odd ones; ``ind(-1) = phi/2``."""
        return self.residue % 2

    @property
    def order(self) -> int:
        return self.modulus.phi // math.gcd(self.residue, self.modulus.phi)

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, -self.residue)

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.modulus != self.modulus:
            raise ValueError("characters to different moduli")
        return DirichletCharacter(self.modulus, self.residue + other.residue)

    def __call__(self, n: int) -> UnitRootValue:
        return char_eval(self, n)

    def value(self, n: int) -> complex:
        return char_eval(self, n).to_complex()

    @cached_property
    def exponents(self) -> np.ndarray:
        """Exponent of ``chi(n)`` for every ``n mod q``; ``-1`` marks zeros."""
        idx = self.modulus.index_table
        e = np.where(idx >= 0, (self.residue * idx) % self.modulus.phi, -1)
        e.flags.writeable = False
        return e

    @cached_property
    def values(self) -> np.ndarray:
        e = self.exponents
        v = np.where(e >= 0, self.modulus.roots[np.maximum(e, 0)], 0)
        v.flags.writeable = False
        return v


def char_eval(chi: DirichletCharacter, n: int) -> UnitRootValue:
    mod = chi.modulus
    j = int(mod.index_table[int(n) % mod.q])
    if j < 0:
        return UnitRootValue(None, mod.phi)
    return UnitRootValue(chi.residue * j % mod.phi, mod.phi)


# ---------------------------------------------------------------------------
# Galois orbits


@dataclass(frozen=True)
class GaloisOrbit:
    """A set of primitive characters closed under a Galois subgroup.

    ``kind`` is ``"full"`` for the orbit of all primitive characters of a
    given characteristic ``c`` and ``"thin"`` for an orbit of the subgroup of
    multipliers ``t = 1 mod q_{k-kappa}``.  Residues are stored ascending.
    """

    modulus: PrimePowerModulus
    kind: str
    c: int
    residues: tuple
    kappa: Optional[int] = None

    @property
    def size(self) -> int:
        return len(self.residues)

    def __len__(self) -> int:
        return len(self.residues)

    @property
    def members(self) -> list[DirichletCharacter]:
        return [DirichletCharacter(self.modulus, a) for a in self.residues]

    @cached_property
    def residue_array(self) -> np.ndarray:
        arr = np.array(self.residues, dtype=np.int64)
        arr.flags.writeable = False
        return arr

    @property
    def base(self) -> int:
        return self.residues[0]

    @property
    def parity(self) -> int:
        return self.residues[0] % 2

    @property
    def label(self) -> str:
        if self.kind == "full":
            return f"FULL(c={self.c})"
        return f"THIN(kappa={self.kappa}, base={self.base})"

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "q": self.modulus.q,
            "p": self.modulus.p,
            "k": self.modulus.k,
            "c": self.c,
            "kappa": self.kappa,
            "size": self.size,
            "residues": list(self.residues),
        }


def characteristics(mod: PrimePowerModulus) -> list[int]:
    """Characteristics ``c | p-1`` that carry at least one primitive character."""
    cs = [int(c) for c in divisors(mod.p - 1)]
    if mod.k == 1:
        cs.remove(mod.p - 1)
    return cs


def full_orbit(mod: PrimePowerModulus, c: int) -> GaloisOrbit:
    if c < 1 or (mod.p - 1) % c != 0:
        raise NotADivisor(f"c={c} does not divide p-1={mod.p - 1}")
    if mod.k == 1 and c == mod.p - 1:
        raise NotADivisor("modulo a prime, characteristic p-1 is the principal character only")
    a = mod.primitive_residues()
    members = a[np.gcd(a, mod.p - 1) == c]
    return GaloisOrbit(mod, "full", c, tuple(int(x) for x in members))


def all_full_orbits(mod: PrimePowerModulus) -> list[GaloisOrbit]:
    return [full_orbit(mod, c) for c in characteristics(mod)]


def thin_subgroup(mod: PrimePowerModulus, kappa: int) -> np.ndarray:
    """Units ``t mod phi`` with ``t = 1 mod q_{k-kappa}``."""
    if not 0 <= kappa <= mod.k - 1:
        raise KappaOutOfRange(f"kappa={kappa} outside [0, {mod.k - 1}]")
    step = mod.q_h(mod.k - kappa)
    t = 1 + step * np.arange(mod.phi // step)
    return t[np.gcd(t, mod.phi) == 1]


def thin_orbits(mod: PrimePowerModulus, kappa: int, parent: GaloisOrbit) -> list[GaloisOrbit]:
    """Split ``parent`` into orbits of the thin subgroup of level ``kappa``."""
    subgroup = thin_subgroup(mod, kappa)
    remaining = set(parent.residues)
    out = []
    for a in parent.residues:
        if a not in remaining:
            continue
        orbit = sorted({int(x) for x in (subgroup * a) % mod.phi})
        remaining.difference_update(orbit)
        out.append(GaloisOrbit(mod, "thin", parent.c, tuple(orbit), kappa))
    return out


def thin_orbit_of(mod: PrimePowerModulus, kappa: int, base: int) -> GaloisOrbit:
    chi = mod.character(base)
    if not chi.is_primitive:
        raise ValueError(f"base residue {base} is not primitive")
    parent = full_orbit(mod, chi.characteristic)
    for orb in thin_orbits(mod, kappa, parent):
        if chi.residue in orb.residues:
            return orb
    raise AssertionError("base residue not covered by thin orbits")


@dataclass(frozen=True)
class OrbitAverage:
    brute_force: complex
    closed_form: Optional[Fraction] = None

    @property
    def value(self):
        return self.closed_form if self.closed_form is not None else self.brute_force


def orbit_average_closed_form(mod: PrimePowerModulus, c: int, n: int) -> Fraction:
    """mu(r)/phi(r) with ``r`` the multiplicative order of ``n**c``."""
    if n % mod.p == 0:
        raise NotCoprime(f"{n} is divisible by {mod.p}")
    r = multiplicative_order(pow(int(n), c, mod.q), mod.q)
    return Fraction(int(mobius(r)), int(totient(r)))


def orbit_average(orbit: GaloisOrbit, n: int) -> OrbitAverage:
    mod = orbit.modulus
    if n % mod.p == 0:
        raise NotCoprime(f"{n} is divisible by {mod.p}")
    j = mod.index(n)
    brute = fsum_complex(mod.roots[(orbit.residue_array * j) % mod.phi]) / orbit.size
    closed = orbit_average_closed_form(mod, orbit.c, n) if orbit.kind == "full" else None
    return OrbitAverage(brute, closed)


@lru_cache(maxsize=256)
def orbit_average_table(orbit: GaloisOrbit) -> np.ndarray:
    """Average of ``chi(g**j)`` over the orbit, for every ``j mod phi``."""
    mod = orbit.modulus
    indicator = np.zeros(mod.phi)
    indicator[orbit.residue_array] = 1.0
    table = np.fft.ifft(indicator) * (mod.phi / orbit.size)
    table.flags.writeable = False
    return table


# ---------------------------------------------------------------------------
# Gauss sums


def gauss_sum(chi: DirichletCharacter, n: int) -> complex:
    """sum over units u of chi(u) e(u n / q), summed with exact phases."""
    mod = chi.modulus
    u = mod.units
    # common denominator of a*ind(u)/phi and u*n/q is p**k * (p-1)
    den = mod.q * (mod.p - 1)
    phase = (chi.residue * mod.index_table[u] * mod.p + u * (int(n) % mod.q) * (mod.p - 1)) % den
    return fsum_complex(np.exp(TWO_PI_I * phase / den))


def gauss_sum_table(chi: DirichletCharacter) -> np.ndarray:
    """Gauss sums ``c_chi(n)`` for all ``n mod q`` at once."""
    return np.fft.ifft(chi.values) * chi.modulus.q


def epsilon_factor(chi: DirichletCharacter) -> complex:
    return gauss_sum(chi, 1) / math.sqrt(chi.modulus.q)


@lru_cache(maxsize=32)
def epsilon_table(mod: PrimePowerModulus) -> np.ndarray:
    """``c_{chi_b}(1)/sqrt(q)`` for every residue ``b mod phi``."""
    additive = np.exp(TWO_PI_I * mod.power_table / mod.q)
    table = np.fft.ifft(additive) * (mod.phi / math.sqrt(mod.q))
    table.flags.writeable = False
    return table


def teichmuller_lift(j: int, p: int, alpha: int) -> int:
    """The root of unity of order dividing p-1 modulo p**alpha that is j mod p."""
    if not 1 <= j <= p - 1:
        raise JOutOfRange(f"j={j} outside [1, {p - 1}]")
    return pow(j, p ** (alpha - 1), p**alpha)


def teichmuller_set(p: int, alpha: int) -> list[int]:
    return [teichmuller_lift(j, p, alpha) for j in range(1, p)]


# ---------------------------------------------------------------------------
# epsilon-weighted orbit averages


def check_twist_pair(mod: PrimePowerModulus, eta1: DirichletCharacter, eta2: DirichletCharacter) -> int:
    """Validate a pair of imprimitive twists; returns the height of eta1 * conj(eta2)."""
    for eta in (eta1, eta2):
        if eta.modulus != mod:
            raise ValueError("twist characters must share the orbit's modulus")
        if eta.is_primitive:
            raise EtaNotImprimitive(f"{eta} is primitive")
    if eta1.residue == eta2.residue:
        raise EtaEqual("eta1 and eta2 must differ")
    return (eta1 * eta2.conj()).height


def vanishing_level(orbit: GaloisOrbit, h: int) -> int:
    """Exponent ``tau``: the weighted average vanishes unless n^(p-1) = 1 mod p^tau."""
    k = orbit.modulus.k
    if orbit.kind == "full":
        return k - h
    return min(orbit.kappa + 1, k - h)


def weighted_average_bound(orbit: GaloisOrbit, h: int) -> float:
    """Triangle-inequality bound from the w-sum, counting the surviving w."""
    mod = orbit.modulus
    p, k = mod.p, mod.k
    tau = k - 1 if orbit.kind == "full" else min(orbit.kappa + 1, k - 1)
    return (p - 1) * p ** (k - h / 2 - tau)


@dataclass(frozen=True)
class EpsilonAverage:
    value: complex
    direct: complex
    via_w_sum: complex
    vanishes: bool
    bound: float


def epsilon_weighted_orbit_average(
    orbit: GaloisOrbit, eta1: DirichletCharacter, eta2: DirichletCharacter, n: int
) -> EpsilonAverage:
    """Average of eps(chi eta1) eps(conj(chi eta2)) chi(n) over the orbit.

    ``direct`` sums the root numbers member by member; ``via_w_sum`` uses the
    unfolded form (1/q) sum_w eta1(w) E[chi(n w)] c_eta(w + 1).
    """
    mod = orbit.modulus
    h = check_twist_pair(mod, eta1, eta2)
    if n % mod.p == 0:
        raise NotCoprime(f"{n} is divisible by {mod.p}")
    j = mod.index(n)

    terms = []
    for a in orbit.residues:
        chi = mod.character(a)
        terms.append(epsilon_factor(chi * eta1) * epsilon_factor((chi * eta2).conj()) * mod.roots[a * j % mod.phi])
    direct = fsum_complex(terms) / orbit.size

    eta = eta1 * eta2.conj()
    avg = orbit_average_table(orbit)
    u = mod.units
    w_terms = [
        eta1.value(int(w)) * avg[(mod.index_table[w] + j) % mod.phi] * gauss_sum(eta, int(w) + 1) for w in u
    ]
    via_w = fsum_complex(w_terms) / mod.q

    tau = vanishing_level(orbit, h)
    vanishes = pow(int(n), mod.p - 1, mod.p**tau) != 1
    value = 0j if vanishes else direct
    return EpsilonAverage(value, direct, via_w, vanishes, weighted_average_bound(orbit, h))


def epsilon_average_tables(orbit: GaloisOrbit, eta1: DirichletCharacter, eta2: DirichletCharacter):
    """Both routes of the weighted average for every ``n = g**j`` at once.

    Returns ``(direct, via_w_sum)`` indexed by ``j mod phi``.
    """
    mod = orbit.modulus
    check_twist_pair(mod, eta1, eta2)
    phi = mod.phi
    eps = epsilon_table(mod)
    a = orbit.residue_array
    weights = np.zeros(phi, dtype=complex)
    weights[a] = eps[(a + eta1.residue) % phi] * eps[(-(a + eta2.residue)) % phi]
    direct = np.fft.ifft(weights) * (phi / orbit.size)

    eta = eta1 * eta2.conj()
    c_eta = gauss_sum_table(eta)
    j = np.arange(phi)
    coeff = mod.roots[(eta1.residue * j) % phi] * c_eta[(mod.power_table + 1) % mod.q]
    avg = orbit_average_table(orbit)
    # correlation sum_j coeff[j] avg[i + j] as a circular convolution
    reflected = coeff[(-j) % phi]
    via_w = np.fft.ifft(np.fft.fft(reflected) * np.fft.fft(avg)) / mod.q
    return direct, via_w


def vanishing_mask(orbit: GaloisOrbit, h: int) -> np.ndarray:
    """True at ``j`` where n = g**j fails n^(p-1) = 1 mod p^tau."""
    mod = orbit.modulus
    modulus = mod.p ** vanishing_level(orbit, h)
    n = mod.power_table
    return np.array([pow(int(x), mod.p - 1, modulus) != 1 for x in n])
