import math

import numpy as np
import pytest

from orbitlf import characters as ch
from orbitlf.errors import OddEll, ParameterError, VerificationFailure, XTooSmall
from orbitlf.moments import second_moment
from orbitlf.mollifier import (
    desk_params,
    exp_inequality_gap,
    holder_lower_bound,
    lambda_constant,
    log_bound_margins,
    log_l_upper_rhs,
    size_case,
    mollified_second_moment,
    mollified_vth_moment,
    mollifier,
    mollifier_divisor_sum,
    mollifier_pieces,
    mollifier_power_divisor_sum,
    p_interval,
    asymptotic_c_bound,
    asymptotic_params,
    truncated_exp,
)


@pytest.fixture(scope="module")
def desk81():
    mod = ch.build_modulus(3, 4)
    return mod, desk_params(mod.q, (0.15, 0.35), (4, 4))


def test_lambda_constant_solves_its_equation():
    x = lambda_constant()
    assert math.exp(-x) == pytest.approx(x + x * x / 2, abs=1e-15)
    assert 0.49 < x < 0.50


def test_c_bound_for_v4():
    assert asymptotic_c_bound(4) == pytest.approx(4 * (math.exp(0.25) - 1) ** 4 / (math.e * 6**4))
    assert asymptotic_c_bound(4) == pytest.approx(7.389e-6, rel=1e-3)


def test_truncated_exp_is_taylor_sum():
    for t in (-3.0, -0.5, 0.0, 1.2):
        assert truncated_exp(t, 6) == pytest.approx(sum(t**n / math.factorial(n) for n in range(7)), rel=1e-15)
    with pytest.raises(OddEll):
        truncated_exp(1.0, 5)


def test_exponential_inequality_on_grid():
    for ell in range(2, 31, 2):
        t = np.linspace(-ell / math.e**2, ell / math.e**2, 201)
        assert np.all(exp_inequality_gap(ell, t) >= 0)


def test_desk_params_shape(desk81):
    _, params = desk81
    assert params.K == 1
    # 81^0.15 < 2 < 3 < 81^0.35 < 5
    assert params.interval_primes(0).tolist() == []
    assert params.interval_primes(1).tolist() == [2, 3]
    with pytest.raises(OddEll):
        desk_params(81, (0.15, 0.35), (4, 3))


def test_prime_sum_by_hand(desk81):
    mod, params = desk81
    chi = mod.character(5)
    scale = params.beta[1] * params.log_q
    a2 = (1 - math.log(2) / scale) * math.exp(-params.lam * math.log(2) / scale)
    # the prime 3 divides q, so only 2 contributes
    assert p_interval(chi, 1, 1, params) == pytest.approx(chi.value(2) * a2 / math.sqrt(2), abs=1e-15)
    assert p_interval(chi, 0, 1, params) == 0


def test_mollifier_routes_agree(desk81):
    mod, params = desk81
    residues = mod.primitive_residues()
    pieces = mollifier_pieces(mod, residues, params)
    for row, a in zip(pieces, residues):
        chi = mod.character(int(a))
        for j in range(params.K + 1):
            assert abs(row[j] - mollifier_divisor_sum(chi, j, params)) < 1e-12
            assert abs(row[j] ** 2 - mollifier_power_divisor_sum(chi, j, 2, params)) < 1e-12
        assert mollifier(chi, params) == pytest.approx(row.prod(), abs=1e-15)


def test_case_split_is_a_partition(desk81):
    mod, params = desk81
    kinds = {size_case(mod.character(int(a)), params).kind for a in mod.primitive_residues()}
    assert kinds <= {"NOT_IN_T0", "IN_ALL_T_r", "FIRST_FAILURE_AT"}


def test_asymptotic_params_reject_large_c():
    with pytest.raises(ParameterError):
        asymptotic_params(81, 4, c=asymptotic_c_bound(4) * 1.0001)
    params = asymptotic_params(81)
    assert params.K == 0
    assert all(l % 2 == 0 for l in params.ell)
    assert params.all_intervals_empty


def test_asymptotic_mode_mollifier_is_trivial():
    mod = ch.build_modulus(3, 4)
    orbit = ch.full_orbit(mod, 1)
    eta1, eta2 = mod.character(9), mod.character(27)
    mm = mollified_second_moment(orbit, eta1, eta2, asymptotic_params(mod.q))
    assert mm.value == pytest.approx(second_moment(orbit, eta1, eta2), abs=1e-14)


def test_mollified_moment_requires_v4(desk81):
    mod, _ = desk81
    params = desk_params(mod.q, (0.15, 0.35), (4, 4), v=2)
    with pytest.raises(ParameterError):
        mollified_second_moment(ch.full_orbit(mod, 1), mod.character(9), mod.character(27), params)
    assert mollified_vth_moment(mod, 2, params) > 0


def test_holder_chain(desk81):
    mod, params = desk81
    chain = holder_lower_bound(ch.full_orbit(mod, 1), mod.character(9), mod.character(27), params)
    assert chain.holds
    assert chain.lower_bound <= chain.count <= chain.size


def test_holder_chain_raises_on_violation(desk81):
    mod, params = desk81
    with pytest.raises(VerificationFailure):
        # a threshold above every |L L| value makes the count zero
        holder_lower_bound(ch.full_orbit(mod, 1), mod.character(9), mod.character(27), params, threshold=1e9)


def test_log_bound():
    mod = ch.build_modulus(3, 4)
    margins = log_bound_margins(ch.full_orbit(mod, 1), 81.0)
    assert margins["size"] == 18
    with pytest.raises(XTooSmall):
        log_l_upper_rhs(mod.character(1), 5.0)
