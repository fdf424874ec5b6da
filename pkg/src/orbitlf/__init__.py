"""Moments of Dirichlet L-functions over Galois orbits of characters to prime-power moduli."""

from .characters import (
    DirichletCharacter,
    GaloisOrbit,
    PrimePowerModulus,
    all_full_orbits,
    build_modulus,
    epsilon_weighted_orbit_average,
    full_orbit,
    gauss_sum,
    orbit_average,
    thin_orbits,
)
from .congruence import DyadicBox, count_congruence, naive_bound_check, small_box_probe
from .errors import OrbitLFError, VerificationFailure
from .lfunc import AfeRequest, SmoothingKernel, afe_product, l_value_oracle, v_kernel
from .mollifier import desk_params, holder_lower_bound, mollified_second_moment, asymptotic_params
from .moments import TwistPair, main_term, twisted_moment_afe, twisted_moment_direct

__all__ = [
    "AfeRequest",
    "DirichletCharacter",
    "DyadicBox",
    "GaloisOrbit",
    "OrbitLFError",
    "PrimePowerModulus",
    "SmoothingKernel",
    "TwistPair",
    "VerificationFailure",
    "afe_product",
    "all_full_orbits",
    "build_modulus",
    "count_congruence",
    "desk_params",
    "epsilon_weighted_orbit_average",
    "full_orbit",
    "gauss_sum",
    "holder_lower_bound",
    "l_value_oracle",
    "main_term",
    "mollified_second_moment",
    "naive_bound_check",
    "orbit_average",
    "asymptotic_params",
    "small_box_probe",
    "thin_orbits",
    "twisted_moment_afe",
    "twisted_moment_direct",
    "v_kernel",
]

__version__ = "0.1.0"
