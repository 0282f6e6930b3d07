"""Mean square Bures distance for random density matrices.

Closed forms (``analytic``) for a Hilbert-Schmidt random state against a
fixed state and against a second random state, the special functions they
need (``specfun``), a reproducible sampler (``sampler``), a coupled kicked
tops simulator (``kickedtop``) and the comparison harness and CLI.
"""

__version__ = "0.1.0"

from .errors import ConsistencyError, ConvergenceError, DegenerateSpectrumError, DomainError  # noqa: E402
from .states import DensityMatrix, FixedStateSpectrum  # noqa: E402

__all__ = [
    "ConsistencyError",
    "ConvergenceError",
    "DegenerateSpectrumError",
    "DensityMatrix",
    "DomainError",
    "FixedStateSpectrum",
    "__version__",
]
