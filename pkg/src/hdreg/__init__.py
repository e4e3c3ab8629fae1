"""Discretisation-adaptive heuristic discrepancy principle for spectral cut-off
regularization of linear inverse problems under white noise."""

from hdreg.errors import ExcludedIndexError, InvalidInputError, NumericalError

__version__ = "0.1.0"

__all__ = ["ExcludedIndexError", "InvalidInputError", "NumericalError", "__version__"]
