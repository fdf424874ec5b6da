"""Sieved multiplicative functions up to a bound N."""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np


def dirichlet_convolve(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(f * g)(n) = sum_{d | n} f(d) g(n / d) for 1 <= n < len(f); index 0 ignored."""
    N = len(f) - 1
    out = np.zeros(N + 1, dtype=np.result_type(f, g))
    for d in range(1, N + 1):
        if f[d] == 0:
            continue
        out[d :: d] += f[d] * g[1 : N // d + 1]
    return out


class ArithmeticFunctionTable:
    """Omega, Liouville, Moebius, Euler phi, von Mangoldt and the nu family for n <= N.

    ``nu(n) = prod 1/a!`` over the prime powers p^a exactly dividing n;
    ``nu_j(n) = prod j^a / a!`` is its j-fold Dirichlet convolution power.
    """

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be positive")
        self.N = N
        spf = np.zeros(N + 1, dtype=np.int64)
        for i in range(2, N + 1):
            if spf[i] == 0:
                spf[i::i][spf[i::i] == 0] = i
        self.smallest_prime_factor = spf

        omega = np.zeros(N + 1, dtype=np.int64)
        top_exp = np.zeros(N + 1, dtype=np.int64)  # exponent of spf(n) in n
        cofactor = np.ones(N + 1, dtype=np.int64)  # n with spf(n)^a removed
        for n in range(2, N + 1):
            p = spf[n]
            m = n // p
            omega[n] = omega[m] + 1
            if m > 1 and spf[m] == p:
                top_exp[n] = top_exp[m] + 1
                cofactor[n] = cofactor[m]
            else:
                top_exp[n] = 1
                cofactor[n] = m
        self.big_omega = omega
        self._top_exp = top_exp
        self._cofactor = cofactor

    @cached_property
    def primes(self) -> np.ndarray:
        n = np.arange(self.N + 1)
        return n[(n >= 2) & (self.smallest_prime_factor == n)]

    @cached_property
    def liouville(self) -> np.ndarray:
        out = (-1.0) ** self.big_omega
        out[0] = 0
        return out

    def _multiplicative(self, on_prime_power) -> np.ndarray:
        out = np.zeros(self.N + 1)
        if self.N >= 1:
            out[1] = 1.0
        for n in range(2, self.N + 1):
            p, a = int(self.smallest_prime_factor[n]), int(self._top_exp[n])
            out[n] = out[self._cofactor[n]] * on_prime_power(p, a)
        return out

    @cached_property
    def mobius(self) -> np.ndarray:
        return self._multiplicative(lambda p, a: -1.0 if a == 1 else 0.0)

    @cached_property
    def euler_phi(self) -> np.ndarray:
        return self._multiplicative(lambda p, a: float(p ** (a - 1) * (p - 1)))

    @cached_property
    def nu(self) -> np.ndarray:
        return self._multiplicative(lambda p, a: 1.0 / math.factorial(a))

    def nu_power(self, j: int) -> np.ndarray:
        """nu_j(n) = prod j^a / a!."""
        return self._multiplicative(lambda p, a: j**a / math.factorial(a))

    def nu_restricted(self, v: int, ell: int) -> np.ndarray:
        """v-fold convolution of nu restricted to Omega(n) <= ell."""
        base = np.where(self.big_omega <= ell, self.nu, 0.0)
        base[0] = 0
        out = base
        for _ in range(v - 1):
            out = dirichlet_convolve(out, base)
        return out

    @cached_property
    def von_mangoldt(self) -> np.ndarray:
        out = np.zeros(self.N + 1)
        prime_power = self._cofactor[2:] == 1
        out[2:][prime_power] = np.log(self.smallest_prime_factor[2:][prime_power])
        return out
