"""Backend selection for the hot kernels.

Set ``LIDARFOG_BACKEND=numpy`` to force the pure-numpy path; the default is
numba when it imports cleanly. The choice is made once, at import time.
"""

import os

_requested = os.environ.get("LIDARFOG_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"LIDARFOG_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"
