"""Explicit solutions of the conformal Toda equations for the classical
series A-D, built from iterated integrals, with exact-derivative checks of
every identity they rest on."""

from .errors import TodaForgeError
from .liedata import LieType, cartan_matrix
from .iterint import IntegrandSet
from .leznov import ChiralVector, build_solution_vector, verify_conditions
from .taukit import sigma_fields, tau_table, toda_grid, toda_residual

__version__ = "0.1.0"

__all__ = [
    "ChiralVector",
    "IntegrandSet",
    "LieType",
    "TodaForgeError",
    "build_solution_vector",
    "cartan_matrix",
    "sigma_fields",
    "tau_table",
    "toda_grid",
    "toda_residual",
    "verify_conditions",
]
