"""Selection of the numeric kernel backend.

The element-assembly and fracture-quadrature inner loops exist twice: a
numba ``@njit`` version and a vectorized pure-numpy version.  The active
backend is chosen by the environment variable ``POROFRAC_BACKEND``:

* ``auto`` (default): numba when importable, numpy otherwise
* ``numba``: force numba, error if unavailable
* ``numpy``: force the pure-numpy path

The flag is re-read on every dispatch so a single process can time both
paths (see ``benchmarks/bench_assembly.py``).
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    HAVE_NUMBA = False

ENV_VAR = "POROFRAC_BACKEND"
_VALID = ("auto", "numba", "numpy")


def active_backend() -> str:
    """Return "numba" or "numpy" according to the environment flag."""
    mode = os.environ.get(ENV_VAR, "auto").strip().lower()
    if mode not in _VALID:
        raise ValueError(
            f"{ENV_VAR}={mode!r}: expected one of {', '.join(_VALID)}"
        )
    if mode == "numba" and not HAVE_NUMBA:
        raise RuntimeError(f"{ENV_VAR}=numba but numba is not importable")
    if mode == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    return mode
