import random

import numpy as np
import pytest
from sympy import factorint, mobius, totient

from orbitlf.arith import ArithmeticFunctionTable, dirichlet_convolve
from orbitlf.summation import blockwise_terms, fsum_complex, fsum_real, ordered_map, split_blocks


@pytest.fixture(scope="module")
def table():
    return ArithmeticFunctionTable(400)


def test_against_sympy(table):
    for n in range(1, 401):
        assert table.mobius[n] == int(mobius(n))
        assert table.euler_phi[n] == int(totient(n))
        assert table.big_omega[n] == sum(factorint(n).values())


def test_mobius_inverts_one(table):
    ones = np.ones(401)
    ones[0] = 0
    delta = dirichlet_convolve(table.mobius, ones)
    assert delta[1] == 1 and not np.any(delta[2:])


def test_nu_powers_are_convolution_powers(table):
    np.testing.assert_allclose(dirichlet_convolve(table.nu, table.nu)[1:], table.nu_power(2)[1:], rtol=1e-13)


def test_restricted_nu_truncates(table):
    full = table.nu_restricted(2, 40)
    np.testing.assert_allclose(full[1:], table.nu_power(2)[1:], rtol=1e-13)


def test_von_mangoldt(table):
    assert table.von_mangoldt[8] == pytest.approx(np.log(2))
    assert table.von_mangoldt[12] == 0
    assert table.liouville[12] == -1


def test_fsum_is_order_independent():
    rng = random.Random(3)
    values = [complex(rng.uniform(-1e6, 1e6), rng.uniform(-1, 1)) for _ in range(2000)] + [1e-9j]
    shuffled = values[:]
    rng.shuffle(shuffled)
    assert fsum_complex(values) == fsum_complex(shuffled)
    assert fsum_real([1e16, 1.0, -1e16]) == 1.0


def test_split_blocks_cover_range():
    for n, b in [(10, 3), (5, 8), (0, 4)]:
        parts = split_blocks(n, b)
        assert sum(s.stop - s.start for s in parts) == n


def test_ordered_map_keeps_order():
    assert ordered_map(lambda x: x * x, range(20), workers=6) == [x * x for x in range(20)]
    out = blockwise_terms(lambda s: np.arange(s.start, s.stop), 17, workers=4)
    assert out.tolist() == list(range(17))
