import pytest

from orbitlf.congruence import (
    DyadicBox,
    count_congruence,
    count_congruence_bruteforce,
    naive_bound_check,
    plus_minus_separation_holds,
    pth_roots_of_unity_check,
    small_box_probe,
)
from orbitlf.errors import BoxTooLarge, DeltaOutOfRange, EvenPrime, NotPrime


def by_hand(A, B, p, alpha):
    P = p**alpha
    d0 = d1 = 0
    for a in range(A, 2 * A):
        for b in range(B, 2 * B):
            if a % p == 0 or b % p == 0 or a == b:
                continue
            if pow(a, p - 1, P) == pow(b, p - 1, P):
                d0 += 1
                d1 += (a - b) % P == 0 or (a + b) % P == 0
    return d0, d1, d0 - d1


@pytest.mark.parametrize("A,B,p,alpha", [(25, 25, 5, 2), (30, 11, 3, 3), (7, 40, 7, 2), (13, 13, 3, 1), (50, 9, 5, 3)])
def test_counts_match_hand_enumeration(A, B, p, alpha):
    box = DyadicBox(A, B, p, alpha)
    c = count_congruence(box)
    assert (c.d0_raw, c.d1_raw, c.d2_raw) == by_hand(A, B, p, alpha)
    assert (c.d0_raw, c.d1_raw, c.d2_raw) == count_congruence_bruteforce(box)
    assert sum(c.per_root.values()) == c.d0_raw


def test_reference_box():
    box = DyadicBox(25, 25, 5, 2)
    assert count_congruence_bruteforce(box) == (60, 20, 40)


def test_naive_bound_value():
    box = DyadicBox(100, 100, 5, 3)
    check = naive_bound_check(box)
    assert check.bound == 720
    assert check.measured == 188
    assert check.holds


def test_normalised_counts():
    c = count_congruence(DyadicBox(100, 100, 5, 3))
    assert c.d0 == pytest.approx(1.88)


def test_fractional_anchor_rounds_up():
    assert DyadicBox(2.5, 3, 3, 2).A == 3


@pytest.mark.parametrize("p,exc", [(2, EvenPrime), (9, NotPrime)])
def test_box_rejects_bad_primes(p, exc):
    with pytest.raises(exc):
        DyadicBox(10, 10, p, 2)


def test_area_caps():
    with pytest.raises(BoxTooLarge):
        count_congruence(DyadicBox(10**6, 10**6, 3, 2), area_cap=10**11)
    with pytest.raises(BoxTooLarge):
        count_congruence_bruteforce(DyadicBox(3000, 3000, 3, 2))


def test_separation_of_trivial_solutions():
    assert plus_minus_separation_holds(DyadicBox(40, 60, 5, 3))


def test_prime_power_lemma():
    holds, sols = pth_roots_of_unity_check(3, 4)
    assert holds
    assert sols == [1, 28, 55]


def test_probe_reports_rows():
    out = small_box_probe(3, [4, 6, 8], 0.1)
    assert [r.alpha for r in out["rows"]] == [4, 6, 8]
    with pytest.raises(DeltaOutOfRange):
        small_box_probe(3, [4], 0.3)
