"""Spectral analysis of the viscoelastic wave equation with Prony-series memory.

Submodules
----------
prony      Prony-series models and constrained fits to ``exp(-t**beta)``.
spectrum   System matrix, characteristic polynomial, eigenvalues, limit spectrum.
burgers    Burgers (two-term) kernel: derived constants, modal roots, closed form.
disk       Bessel functions, zeros and the Fourier-Bessel basis of the disk.
assembly   Disk solution from modal data, RK4 oracle and validation report.
cli        ``viscoprony`` command-line interface.
"""

from .burgers import BurgersDerived, BurgersParameters, derive, solve_mode
from .errors import NumericalError
from .prony import PronyModel, fit_prony
from .spectrum import eigenvalues, limit_spectrum, spectrum

__all__ = [
    "BurgersDerived",
    "BurgersParameters",
    "NumericalError",
    "PronyModel",
    "derive",
    "eigenvalues",
    "fit_prony",
    "limit_spectrum",
    "solve_mode",
    "spectrum",
]

__version__ = "0.1.0"
