"""Array-in, array-out explanation surface over the leafsv core.

Two entry points:

* :func:`load_explainer` reads the model/data/schema files once and returns
  an immutable handle.
* :func:`explain` turns a 2-d batch of query points into an attribution
  matrix plus base values, numerically identical to the command-line
  ``leafsv explain`` run in strict mode.

No computation happens here; every number comes from the core package, so
there is a single numeric source of truth.
"""

from .explainer import (
    ExplainerHandle,
    ValidationError,
    explain,
    load_explainer,
)

__version__ = "0.1.0"

__all__ = ["ExplainerHandle", "ValidationError", "explain", "load_explainer"]
