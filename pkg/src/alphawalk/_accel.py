"""Backend switch for the hot kernels.

Set ``ALPHAWALK_NO_NUMBA=1`` in the environment to force the pure-numpy
implementations even when numba is importable.  The flag is read once at
import time.
"""

import os

_flag = os.environ.get("ALPHAWALK_NO_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not _disabled
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(func):
    """Compile ``func`` with numba when it is installed, else return it as is.

    Compilation happens whether or not the backend flag selects numba, so
    tests and the benchmark can compare both paths in one process.
    """
    if _numba is None:
        return func
    return _numba.njit(cache=True, nogil=True)(func)
