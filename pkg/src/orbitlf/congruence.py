"""Counting solutions of a^(p-1) = b^(p-1) mod p^alpha in dyadic boxes.

Two units share a (p-1)-th power modulo p^alpha exactly when a = zeta b for a
Teichmuller root zeta (an element of order dividing p-1).  The count splits
into the zeta = +-1 part ``D1`` and the rest ``D2``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .characters import teichmuller_lift
from .errors import BoxTooLarge, DeltaOutOfRange, NotPrime, EvenPrime
from sympy import isprime

log = logging.getLogger(__name__)

DEFAULT_AREA_CAP = 10**10
BRUTE_FORCE_AREA_CAP = 4 * 10**6


@dataclass(frozen=True)
class DyadicBox:
    """Pairs A <= a < 2A, B <= b < 2B with p not dividing a b."""

    A: int
    B: int
    p: int
    alpha: int

    def __post_init__(self):
        for name in ("A", "B"):
            raw = getattr(self, name)
            anchor = math.ceil(raw)
            if anchor != raw:
                log.info("rounding fractional anchor %s=%s up to %d", name, raw, anchor)
            if anchor < 1:
                raise ValueError(f"anchor {name} must be at least 1")
            object.__setattr__(self, name, int(anchor))
        if self.p == 2:
            raise EvenPrime("p must be odd")
        if not isprime(self.p):
            raise NotPrime(f"p={self.p} is not prime")
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")

    @property
    def modulus(self) -> int:
        return self.p**self.alpha

    @property
    def area(self) -> int:
        return self.A * self.B


@dataclass(frozen=True)
class CongruenceCount:
    box: DyadicBox
    d0_raw: int
    d1_raw: int
    d2_raw: int
    per_root: dict
    elapsed: float

    @property
    def scale(self) -> float:
        return math.sqrt(self.box.A * self.box.B)

    @property
    def d0(self) -> float:
        return self.d0_raw / self.scale

    @property
    def d1(self) -> float:
        return self.d1_raw / self.scale

    @property
    def d2(self) -> float:
        return self.d2_raw / self.scale


def _units_in(lo: int, hi: int, p: int) -> np.ndarray:
    r = np.arange(lo, hi, dtype=np.int64)
    return r[r % p != 0]


def _count_in_progression(lo: int, hi: int, residues, P: int):
    """Number of integers in [lo, hi) congruent to each residue mod P."""
    residues = np.asarray(residues, dtype=object if P > 2**62 else np.int64)
    return (hi - 1 - residues) // P - (lo - 1 - residues) // P


def count_congruence(box: DyadicBox, area_cap: int = DEFAULT_AREA_CAP) -> CongruenceCount:
    """Count pairs by walking the progressions a = zeta b mod p^alpha.

    The roles of the two intervals are swapped so the loop runs over the
    shorter one; zeta is then replaced by its inverse in the breakdown.
    """
    if box.area > area_cap:
        raise BoxTooLarge(f"A*B={box.area} exceeds cap {area_cap}")
    start = time.perf_counter()
    p, P = box.p, box.modulus
    swapped = box.B > box.A
    long_lo, short_lo = (box.B, box.A) if swapped else (box.A, box.B)
    bs = _units_in(short_lo, 2 * short_lo, p)
    per_root = {}
    d1 = d2 = 0
    exact_int64 = (P - 1) * (2 * short_lo) < 2**62
    for j in range(1, p):
        zeta = teichmuller_lift(j, p, box.alpha)
        if exact_int64:
            r = (zeta * bs) % P
        else:
            r = np.array([zeta * int(b) % P for b in bs], dtype=object)
        hits = int(np.sum(_count_in_progression(long_lo, 2 * long_lo, r, P)))
        if j == 1:
            # drop a = b, which lies in the progression whenever b is in both ranges
            hits -= int(np.count_nonzero((bs >= long_lo) & (bs < 2 * long_lo)))
        key = j if not swapped else pow(j, -1, p)
        per_root[key] = hits
        if j in (1, p - 1):
            d1 += hits
        else:
            d2 += hits
    per_root = dict(sorted(per_root.items()))
    return CongruenceCount(box, d1 + d2, d1, d2, per_root, time.perf_counter() - start)


def _power_residues(values: np.ndarray, e: int, P: int) -> list[int]:
    return [pow(int(v), e, P) for v in values]


def count_congruence_bruteforce(box: DyadicBox) -> tuple[int, int, int]:
    """Direct a^(p-1) = b^(p-1) testing over every pair; returns (D0, D1, D2)."""
    if box.area > BRUTE_FORCE_AREA_CAP:
        raise BoxTooLarge(f"A*B={box.area} too large for the exhaustive count")
    p, P = box.p, box.modulus
    a = _units_in(box.A, 2 * box.A, p)
    b = _units_in(box.B, 2 * box.B, p)
    dtype = object if P > 2**62 else np.int64
    pa = np.array(_power_residues(a, p - 1, P), dtype=dtype)
    pb = np.array(_power_residues(b, p - 1, P), dtype=dtype)
    same = (pa[:, None] == pb[None, :]) & (a[:, None] != b[None, :])
    plus_minus = ((a[:, None] - b[None, :]) % P == 0) | ((a[:, None] + b[None, :]) % P == 0)
    d0 = int(np.count_nonzero(same))
    d1 = int(np.count_nonzero(same & plus_minus))
    return d0, d1, d0 - d1


def plus_minus_pairs(box: DyadicBox) -> Iterable[tuple[int, int]]:
    """All pairs with a = +-b mod p^alpha and a != b."""
    P = box.modulus
    for b in _units_in(box.B, 2 * box.B, box.p):
        b = int(b)
        for r in {b % P, (-b) % P}:
            first = box.A + (r - box.A) % P
            for a in range(first, 2 * box.A, P):
                if a != b:
                    yield a, b


def plus_minus_separation_holds(box: DyadicBox) -> bool:
    """Every +-1 solution satisfies max(a, b) >= p^alpha - min(a, b)."""
    P = box.modulus
    return all(max(a, b) >= P - min(a, b) for a, b in plus_minus_pairs(box))


@dataclass(frozen=True)
class NaiveBound:
    bound: float
    measured: int
    holds: bool

    @property
    def margin(self) -> float:
        return self.bound - self.measured


def naive_bound_check(box: DyadicBox, d0_raw: Optional[int] = None) -> NaiveBound:
    """(p-1) min(A,B) (max(A,B)/p^alpha + 1) against the measured count."""
    lo, hi = sorted((box.A, box.B))
    bound = (box.p - 1) * lo * (hi / box.modulus + 1)
    if d0_raw is None:
        d0_raw = count_congruence(box).d0_raw
    return NaiveBound(bound, d0_raw, d0_raw <= bound)


def pth_roots_of_unity_check(p: int, alpha: int) -> tuple[bool, list[int]]:
    """Check that m^p = 1 mod p^alpha forces m = 1 mod p^(alpha-1).

    Returns (holds, solutions) with the solutions enumerated exhaustively.
    """
    P = p**alpha
    m = np.arange(P, dtype=np.int64)
    acc = np.ones(P, dtype=np.int64)
    for _ in range(p):
        acc = acc * m % P
    solutions = [int(x) for x in np.flatnonzero(acc == 1 % P)]
    step = p ** (alpha - 1)
    return all((x - 1) % step == 0 for x in solutions), solutions


@dataclass(frozen=True)
class SmallBoxRow:
    alpha: int
    size_limit: float
    boxes: int
    skipped: int
    violating_boxes: int
    d1_total: int
    d2_total: int


def small_box_probe(
    p: int,
    alphas: Sequence[int],
    delta: float,
    boxes: Optional[Sequence[tuple[int, int]]] = None,
) -> dict:
    """Count solutions in boxes well below sqrt(p^alpha).

    For each alpha only boxes with 2A, 2B < p^(alpha(1/2 - delta)) are
    counted.  With ``boxes`` omitted every power-of-two box under the limit
    is used.  The report records the smallest alpha from which every later
    alpha in the sweep is free of solutions.
    """
    if not 0 < delta < 0.25:
        raise DeltaOutOfRange(f"delta={delta} outside (0, 1/4)")
    rows = []
    for alpha in alphas:
        limit = p ** (alpha * (0.5 - delta))
        if boxes is None:
            anchors = [2**i for i in range(64) if 2 ** (i + 1) < limit]
            candidates = [(A, B) for A in anchors for B in anchors]
        else:
            candidates = list(boxes)
        kept = [(A, B) for A, B in candidates if 2 * A < limit and 2 * B < limit]
        violating = d1 = d2 = 0
        for A, B in kept:
            c = count_congruence(DyadicBox(A, B, p, alpha))
            violating += c.d0_raw > 0
            d1 += c.d1_raw
            d2 += c.d2_raw
        rows.append(SmallBoxRow(alpha, limit, len(kept), len(candidates) - len(kept), violating, d1, d2))
    clean_from = None
    for row in reversed(rows):
        if row.violating_boxes:
            break
        clean_from = row.alpha
    return {"p": p, "delta": delta, "rows": rows, "clean_from_alpha": clean_from}

roth_ridout_probe = small_box_probe
