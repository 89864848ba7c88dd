"""mflab: one-pass SGD on Gaussian mixtures, its particle-flow limit, and
the statistics to compare the two."""

__version__ = "0.1.0"

from ._compat import NUMBA_ENABLED

__all__ = ["NUMBA_ENABLED", "__version__"]
