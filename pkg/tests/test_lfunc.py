import math

import mpmath
import numpy as np
import pytest

from orbitlf import characters as ch
from orbitlf.errors import NonPositiveArgument, NotPrimitive, ParameterError, PoleAtOne, PrincipalCharacter
from orbitlf.lfunc import (
    AfeRequest,
    SmoothingKernel,
    afe_decomposition,
    afe_product,
    cutoffs,
    functional_equation_gap,
    hurwitz_zeta,
    l_half_table,
    l_one,
    l_value_oracle,
    v_kernel,
    v_kernel_array,
)


def test_hurwitz_known_values():
    assert hurwitz_zeta(2, 1) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert hurwitz_zeta(2, 0.5) == pytest.approx(math.pi**2 / 2, rel=1e-14)
    with pytest.raises(PoleAtOne):
        hurwitz_zeta(1, 0.5)


@pytest.mark.parametrize("s", [0.5, 0.5 + 3j, -0.7, 2.5 - 1j])
@pytest.mark.parametrize("a", [0.1, 0.5, 0.93])
def test_hurwitz_against_mpmath(s, a):
    ref = complex(mpmath.zeta(s, a))
    assert abs(hurwitz_zeta(s, a) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_quadratic_character_mod3_at_one():
    chi = ch.build_modulus(3, 1).character(1)
    assert l_one(chi) == pytest.approx(math.pi / (3 * math.sqrt(3)), abs=1e-13)


@pytest.mark.parametrize("p,k", [(3, 3), (5, 2)])
def test_l_values_against_mpmath(p, k):
    mod = ch.build_modulus(p, k)
    for a in list(mod.primitive_residues()[:4]) + [p ** (k - 1)]:
        chi = mod.character(int(a))
        for s in (0.5, 0.5 + 2j, 2.0):
            ref = complex(
                mpmath.fsum(chi.value(u) * mpmath.zeta(s, mpmath.mpf(u) / mod.q) for u in range(1, mod.q))
                * mpmath.power(mod.q, -s)
            )
            assert abs(l_value_oracle(s, chi) - ref) < 1e-11


def test_half_table_matches_single_evaluations():
    mod = ch.build_modulus(3, 3)
    table = l_half_table(mod)
    for a in (1, 2, 5, 9):
        assert table[a] == pytest.approx(l_value_oracle(0.5, mod.character(a)), abs=1e-12)


def test_principal_character_rejected():
    with pytest.raises(PrincipalCharacter):
        l_value_oracle(0.5, ch.build_modulus(3, 2).character(0))


def test_functional_equation():
    mod = ch.build_modulus(3, 4)
    for a in mod.primitive_residues()[::7]:
        assert functional_equation_gap(mod.character(int(a)), 0.2 + 1j) < 1e-10


def test_completed_l_rejects_gamma_poles():
    chi = ch.build_modulus(3, 2).character(2)
    with pytest.raises(ParameterError):
        functional_equation_gap(chi, 0.5)


def test_oracle_is_stable_next_to_one():
    chi = ch.build_modulus(3, 2).character(1)
    assert abs(l_value_oracle(1 + 1e-13j, chi) - l_one(chi)) < 1e-11


def test_kernel_validation():
    with pytest.raises(ParameterError):
        SmoothingKernel(scale=-1.0)


def test_v_kernel_shape():
    near_zero = v_kernel(1e-6, 0, 0).value
    assert abs(near_zero - 1) < 0.02
    xs = np.array([0.5, 1.0, 2.0, 5.0, 10.0])
    vals, _ = v_kernel_array(xs, 1, 1)
    assert np.all(np.diff(vals.real) < 0)
    assert abs(v_kernel(10.0, 1, 1).value) < 1e-5
    assert abs(v_kernel(50.0, 0, 1).value) < 1e-12
    with pytest.raises(NonPositiveArgument):
        v_kernel(0.0, 0, 0)


def test_cutoffs_grow_with_modulus():
    assert cutoffs(243, 1.0, 50)[0] > cutoffs(27, 1.0, 50)[0]


@pytest.mark.parametrize("X", [1.0, 3.0, 0.4])
def test_afe_matches_oracle_product(X):
    mod = ch.build_modulus(3, 4)
    eta1, eta2 = mod.character(9), mod.character(27)
    for a in mod.primitive_residues()[::9]:
        chi = mod.character(int(a))
        exact = l_value_oracle(0.5, chi * eta1) * l_value_oracle(0.5, (chi * eta2).conj())
        assert abs(afe_product(AfeRequest(chi, eta1, eta2, X)) - exact) < 1e-9


def test_afe_parts_consistent():
    mod = ch.build_modulus(3, 3)
    parts = afe_decomposition(AfeRequest(mod.character(1), mod.character(3), mod.character(0)))
    assert parts.value == pytest.approx(parts.first + parts.root_factor * parts.second, abs=1e-14)
    assert abs(parts.root_factor) == pytest.approx(1.0, abs=1e-12)


def test_afe_needs_primitive_chi():
    mod = ch.build_modulus(3, 3)
    with pytest.raises(NotPrimitive):
        afe_product(AfeRequest(mod.character(3), mod.character(9), mod.character(0)))


def test_afe_workers_agree():
    mod = ch.build_modulus(3, 4)
    req = AfeRequest(mod.character(5), mod.character(9), mod.character(27), 2.0)
    assert afe_product(req, workers=1) == afe_product(req, workers=4)


@pytest.mark.parametrize("kappas", [(0, 0), (0, 1), (1, 1)])
def test_v_kernel_decay_within_engineering_budget(kappas):
    small = np.geomspace(1e-6, 1.0, 25)
    large = np.geomspace(10.0, 1000.0, 25)
    v_small, _ = v_kernel_array(small, *kappas)
    v_large, _ = v_kernel_array(large, *kappas)
    assert np.all(np.abs(v_small) <= 2)
    assert np.all(np.abs(v_large) <= 10 * (1 + large) ** -3)


def test_v_kernel_quadrature_error_is_small():
    _, err = v_kernel_array(np.array([0.01, 1.0, 5.0]), 0, 1)
    assert np.all(np.asarray(err) < 1e-10)
