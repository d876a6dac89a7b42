"""Numba on/off switch.

Hot kernels in :mod:`resolab.kernels` come in two flavors: a numba
``@njit`` build and a pure-numpy fallback.  The flavor is chosen once at
import time from the environment variable ``RESOLAB_NUMBA``:

* ``RESOLAB_NUMBA=0`` forces the numpy path,
* anything else (or unset) uses numba when it imports cleanly.

``resolab.kernels`` re-exports whichever implementation was selected, so
the rest of the package never checks the flag again.
"""

import os

USE_NUMBA = os.environ.get("RESOLAB_NUMBA", "1") != "0"

if USE_NUMBA:
    try:
        from numba import njit, prange  # noqa: F401
    except Exception:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        """Identity decorator standing in for numba.njit."""
        if args and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn
        return wrap

    prange = range
