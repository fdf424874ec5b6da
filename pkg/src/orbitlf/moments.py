"""Twisted second moments of L(1/2, chi eta1) L(1/2, conj(chi eta2)) over an orbit.

Two independent routes are provided:

* ``twisted_moment_direct`` averages oracle L-values member by member;
* ``twisted_moment_afe`` inserts the approximate functional equation and
  swaps the orbit average inside, so the first sum sees the plain orbit
  average E[chi(n)] and the second sees the root-number weighted one.

The diagonal ``m1 n1 = m2 n2`` of the first sum tends to the main term
eta1(m2') conj(eta2(m1')) L(1, eta) / sqrt(m1' m2') as X grows.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from sympy import mobius as _mobius

from .characters import (
    DirichletCharacter,
    GaloisOrbit,
    check_twist_pair,
    epsilon_table,
    orbit_average_table,
    vanishing_level,
)
from .errors import EtaPrincipal, TwistNotCoprime
from .lfunc import (
    DEFAULT_KERNEL,
    DEFAULT_TAIL_MULTIPLIER,
    SmoothingKernel,
    coprime_pairs,
    cutoffs,
    l_half_table,
    l_one,
    l_value_oracle,
    smoothed_weights,
    v_kernel_array,
)
from .summation import blockwise_terms, fsum_complex


@dataclass(frozen=True)
class TwistPair:
    m1: int
    m2: int

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 1:
            raise ValueError("twists must be positive integers")

    @property
    def reduced(self) -> tuple[int, int]:
        g = math.gcd(self.m1, self.m2)
        return self.m1 // g, self.m2 // g

    def check(self, p: int) -> None:
        if (self.m1 * self.m2) % p == 0:
            raise TwistNotCoprime(f"p={p} divides m1*m2={self.m1 * self.m2}")


def default_X(orbit: GaloisOrbit, h: int) -> float:
    """Balance point p^(h/2) of the diagonal error against the dual sum."""
    return orbit.modulus.p ** (h / 2)


def _orbit_pair_values(orbit: GaloisOrbit, eta1: DirichletCharacter, eta2: DirichletCharacter):
    table = l_half_table(orbit.modulus)
    phi = orbit.modulus.phi
    a = orbit.residue_array
    return table[(a + eta1.residue) % phi], table[(a + eta2.residue) % phi]


def twisted_moment_direct(
    orbit: GaloisOrbit,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    pair: TwistPair,
    workers: int = 1,
) -> complex:
    """Orbit mean of L(1/2, chi eta1) L(1/2, conj(chi eta2)) chi(m1) conj(chi(m2))."""
    mod = orbit.modulus
    check_twist_pair(mod, eta1, eta2)
    pair.check(mod.p)
    l1, l2 = _orbit_pair_values(orbit, eta1, eta2)
    shift = mod.index(pair.m1) - mod.index(pair.m2)
    a = orbit.residue_array

    def block(sl):
        return l1[sl] * np.conj(l2[sl]) * mod.roots[(a[sl] * shift) % mod.phi]

    return fsum_complex(blockwise_terms(block, orbit.size, workers)) / orbit.size


@dataclass(frozen=True)
class AfeMoment:
    total: complex
    s_plus: complex
    s_minus: complex
    root_phase: complex
    diagonal: complex
    off_diagonal: complex
    X: float
    cutoffs: tuple
    s_minus_vanishes: bool


def weighted_average_table(orbit: GaloisOrbit, eta1: DirichletCharacter, eta2: DirichletCharacter, h: int) -> np.ndarray:
    """Root-number weighted orbit average at n = g**j, with the forced zeros applied."""
    mod = orbit.modulus
    phi = mod.phi
    eps = epsilon_table(mod)
    a = orbit.residue_array
    weights = np.zeros(phi, dtype=complex)
    weights[a] = eps[(a + eta1.residue) % phi] * eps[(-(a + eta2.residue)) % phi]
    table = np.fft.ifft(weights) * (phi / orbit.size)
    modulus = mod.p ** vanishing_level(orbit, h)
    survives = np.array([pow(int(n), mod.p - 1, modulus) == 1 for n in mod.power_table])
    return np.where(survives, table, 0)


def twisted_moment_afe(
    orbit: GaloisOrbit,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    pair: TwistPair,
    X: Optional[float] = None,
    kernel: SmoothingKernel = DEFAULT_KERNEL,
    tail_cutoff_multiplier: float = DEFAULT_TAIL_MULTIPLIER,
    workers: int = 1,
    s_minus_sign: int = 1,
) -> AfeMoment:
    """The same moment assembled as S+ + i^-(kappa1+kappa2) S-.

    ``s_minus_sign`` exists for fault injection only: passing -1 flips the
    dual sum and must make verification fail.
    """
    mod = orbit.modulus
    h = check_twist_pair(mod, eta1, eta2)
    pair.check(mod.p)
    if X is None:
        X = default_X(orbit, h)
    q, phi, idx = mod.q, mod.phi, mod.index_table
    k1 = (orbit.parity + eta1.residue) % 2
    k2 = (orbit.parity + eta2.residue) % 2
    n_plus, n_minus = cutoffs(q, X, tail_cutoff_multiplier)
    w_plus = smoothed_weights(math.pi / (q * X), n_plus, k1, k2, kernel)
    w_minus = smoothed_weights(math.pi * X / q, n_minus, k1, k2, kernel)
    shift = mod.index(pair.m1) - mod.index(pair.m2)

    avg = orbit_average_table(orbit)
    m, n, t = coprime_pairs(n_plus, mod.p)
    m1, m2 = pair.m1, pair.m2

    def plus_block(sl):
        i1, i2 = idx[m[sl] % q], idx[n[sl] % q]
        twist = mod.roots[(eta1.residue * i1 - eta2.residue * i2) % phi]
        return twist * w_plus[t[sl]] * avg[(shift + i1 - i2) % phi]

    plus_terms = blockwise_terms(plus_block, m.size, workers)
    s_plus = fsum_complex(plus_terms)
    on_diag = m1 * m == m2 * n
    diagonal = fsum_complex(plus_terms[on_diag])
    off_diagonal = fsum_complex(plus_terms[~on_diag])

    weighted = weighted_average_table(orbit, eta1, eta2, h)
    m, n, t = coprime_pairs(n_minus, mod.p)

    def minus_block(sl):
        i1, i2 = idx[m[sl] % q], idx[n[sl] % q]
        twist = mod.roots[(-eta1.residue * i1 + eta2.residue * i2) % phi]
        return twist * w_minus[t[sl]] * weighted[(shift - i1 + i2) % phi]

    minus_terms = blockwise_terms(minus_block, m.size, workers)
    s_minus = fsum_complex(minus_terms) * s_minus_sign
    phase = (1j) ** (-(k1 + k2))
    return AfeMoment(
        total=s_plus + phase * s_minus,
        s_plus=s_plus,
        s_minus=s_minus,
        root_phase=phase,
        diagonal=diagonal,
        off_diagonal=off_diagonal,
        X=float(X),
        cutoffs=(n_plus, n_minus),
        s_minus_vanishes=not np.any(minus_terms),
    )


def twist_eta(eta1: DirichletCharacter, eta2: DirichletCharacter) -> DirichletCharacter:
    return eta1 * eta2.conj()


def main_term(pair: TwistPair, eta1: DirichletCharacter, eta2: DirichletCharacter) -> complex:
    eta = twist_eta(eta1, eta2)
    if eta.is_principal:
        raise EtaPrincipal("eta1 * conj(eta2) is principal")
    pair.check(eta.modulus.p)
    r1, r2 = pair.reduced
    return eta1.value(r2) * eta2.value(r1).conjugate() / math.sqrt(r1 * r2) * l_one(eta)


@dataclass(frozen=True)
class DiagonalTerm:
    value: complex
    main: complex
    error: float
    envelope: float
    X: float


def diagonal_term(
    pair: TwistPair,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    X: float,
    kappas: tuple[int, int] = (0, 0),
    kernel: SmoothingKernel = DEFAULT_KERNEL,
    tail_cutoff_multiplier: float = DEFAULT_TAIL_MULTIPLIER,
) -> DiagonalTerm:
    """Diagonal of the first AFE sum, compared with the main term.

    ``kappas`` are the parities of chi eta1 and chi eta2, constant on an orbit.
    The envelope is the shape p^(h/2) q^(-1/2) X^(-1/2) of the gap.
    """
    eta = twist_eta(eta1, eta2)
    mod = eta.modulus
    if eta.is_principal:
        raise EtaPrincipal("eta1 * conj(eta2) is principal")
    pair.check(mod.p)
    r1, r2 = pair.reduced
    limit = int(math.sqrt(tail_cutoff_multiplier * mod.q * X / (math.pi * r1 * r2)))
    n = np.arange(1, limit + 1)
    n = n[n % mod.p != 0]
    v, _ = v_kernel_array(math.pi * r1 * r2 * n.astype(float) ** 2 / (mod.q * X), *kappas, kernel)
    inner = fsum_complex(eta.values[n % mod.q] * v / n)
    prefactor = eta1.value(r2) * eta2.value(r1).conjugate() / math.sqrt(r1 * r2)
    value = prefactor * inner
    main = main_term(pair, eta1, eta2)
    envelope = mod.p ** (eta.height / 2) / math.sqrt(mod.q * X)
    return DiagonalTerm(value, main, abs(value - main), envelope, float(X))


def error_envelope(orbit: GaloisOrbit, h: int, theta: float) -> float:
    """Unit-constant shape of the off-diagonal error, epsilon set to 0."""
    mod = orbit.modulus
    p, k, q = mod.p, mod.k, mod.q
    if orbit.kind == "full":
        return p ** (h / 4) * q ** (-0.5 + theta) + p ** (-h / 4) * q ** (-0.25)
    kappa = orbit.kappa
    return p ** (h / 4 - kappa) * q ** (0.5 + theta) + p ** (-kappa / 4) + p ** (-kappa + (3 * k - h) / 4)


def _coefficient(kind: str) -> Callable[[int], float]:
    if kind == "one":
        return lambda m: 1.0
    if kind == "mobius":
        return lambda m: float(_mobius(m))
    raise ValueError(f"unknown coefficient family {kind!r}")


def moment_error_sweep(
    orbit: GaloisOrbit,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    theta: float,
    coefficients: str = "mobius",
    workers: int = 1,
) -> dict:
    """Weighted sum of (moment - main term) over twists m1, m2 <= q^theta.

    Twists divisible by p are skipped since chi vanishes on them.
    """
    mod = orbit.modulus
    h = check_twist_pair(mod, eta1, eta2)
    x = _coefficient(coefficients)
    length = int(math.floor(mod.q**theta + 1e-9))
    ms = [m for m in range(1, length + 1) if m % mod.p]
    terms = []
    for m1 in ms:
        for m2 in ms:
            pair = TwistPair(m1, m2)
            gap = twisted_moment_direct(orbit, eta1, eta2, pair, workers) - main_term(pair, eta1, eta2)
            terms.append(x(m1) * x(m2) / math.sqrt(m1 * m2) * gap)
    total = fsum_complex(terms) if terms else 0j
    envelope = error_envelope(orbit, h, theta)
    return {
        "theta": theta,
        "coefficients": coefficients,
        "length": length,
        "twists": len(ms),
        "error": total,
        "abs_error": abs(total),
        "envelope": envelope,
        "ratio": abs(total) / envelope,
    }


@dataclass(frozen=True)
class NonvanishingCount:
    count: int
    size: int
    threshold: float
    flagged: tuple = field(default_factory=tuple)

    @property
    def proportion(self) -> float:
        return self.count / self.size


def nonvanishing_count(
    orbit: GaloisOrbit,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    threshold: float = 1e-8,
) -> NonvanishingCount:
    """Members with |L(1/2, chi eta1) L(1/2, chi eta2)| above ``threshold``.

    Values below the threshold are recomputed with doubled Euler-Maclaurin
    settings and reported in ``flagged``.
    """
    mod = orbit.modulus
    l1, l2 = _orbit_pair_values(orbit, eta1, eta2)
    mags = np.abs(l1 * l2)
    flagged = []
    count = 0
    for a, mag in zip(orbit.residues, mags):
        if mag > threshold:
            count += 1
            continue
        chi = mod.character(a)
        refined = abs(
            l_value_oracle(0.5, chi * eta1, terms=60, corrections=20)
            * l_value_oracle(0.5, chi * eta2, terms=60, corrections=20)
        )
        flagged.append((a, float(refined)))
        if refined > threshold:
            count += 1
    return NonvanishingCount(count, orbit.size, threshold, tuple(flagged))


def second_moment(orbit: GaloisOrbit, eta1: DirichletCharacter, eta2: DirichletCharacter) -> complex:
    """Untwisted (m1 = m2 = 1) moment, the quantity compared with L(1, eta)."""
    return twisted_moment_direct(orbit, eta1, eta2, TwistPair(1, 1))


@dataclass
class MomentReport:
    orbit: dict
    eta1: dict
    eta2: dict
    twist: tuple
    X: float
    main_term: complex
    direct: complex
    afe: complex
    s_plus: complex
    s_minus: complex
    diagonal: complex
    off_diagonal: complex
    error: complex
    route_gap: float
    envelope: float
    cutoffs: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def _char_descriptor(eta: DirichletCharacter) -> dict:
    return {"residue": eta.residue, "height": eta.height, "parity": eta.parity}


def moment_report(
    orbit: GaloisOrbit,
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    pair: TwistPair,
    X: Optional[float] = None,
    theta: float = 0.0,
    kernel: SmoothingKernel = DEFAULT_KERNEL,
    workers: int = 1,
    s_minus_sign: int = 1,
) -> MomentReport:
    h = check_twist_pair(orbit.modulus, eta1, eta2)
    direct = twisted_moment_direct(orbit, eta1, eta2, pair, workers)
    afe = twisted_moment_afe(orbit, eta1, eta2, pair, X, kernel, workers=workers, s_minus_sign=s_minus_sign)
    main = main_term(pair, eta1, eta2)
    return MomentReport(
        orbit=orbit.describe(),
        eta1=_char_descriptor(eta1),
        eta2=_char_descriptor(eta2),
        twist=(pair.m1, pair.m2),
        X=afe.X,
        main_term=main,
        direct=direct,
        afe=afe.total,
        s_plus=afe.s_plus,
        s_minus=afe.s_minus,
        diagonal=afe.diagonal,
        off_diagonal=afe.off_diagonal,
        error=direct - main,
        route_gap=abs(direct - afe.total),
        envelope=error_envelope(orbit, h, theta),
        cutoffs=afe.cutoffs,
    )


def thin_reassembly_gap(
    parent: GaloisOrbit,
    pieces: Sequence[GaloisOrbit],
    eta1: DirichletCharacter,
    eta2: DirichletCharacter,
    pair: TwistPair,
) -> float:
    """|size-weighted mean over the pieces - moment over the parent|."""
    whole = twisted_moment_direct(parent, eta1, eta2, pair)
    parts = fsum_complex([len(o) * twisted_moment_direct(o, eta1, eta2, pair) for o in pieces]) / parent.size
    return abs(parts - whole)
