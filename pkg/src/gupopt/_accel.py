"""Optional numba acceleration.

Hot kernels are written once and compiled with ``numba.njit`` when numba is
importable and the environment variable ``GUPOPT_NO_NUMBA`` is unset (or "0").
Setting ``GUPOPT_NO_NUMBA=1`` selects the pure-numpy fallback path, which runs
the identical source uncompiled.  ``python -m gupopt.benchmark`` compares the
two paths.
"""

import os

NUMBA_DISABLED = os.environ.get("GUPOPT_NO_NUMBA", "0") not in ("0", "")

try:
    if NUMBA_DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when acceleration is active, identity decorator otherwise."""
    return _njit(*args, **kwargs)
