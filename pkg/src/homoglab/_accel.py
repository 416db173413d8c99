"""Backend selection for the hot kernels.

Set ``HOMOGLAB_DISABLE_NUMBA=1`` to force the pure-numpy path.  The flag is
read once at import time; :func:`use_numba` reports the active choice.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

# The bundled TBB is often too old for numba; pick the portable layer unless
# the user chose one.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:  # pragma: no cover - exercised implicitly by whichever backend is live
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

NUMBA_DISABLED = os.environ.get("HOMOGLAB_DISABLE_NUMBA", "").strip().lower() not in _FALSY


def use_numba():
    return HAVE_NUMBA and not NUMBA_DISABLED


def set_threads(n):
    """Cap kernel parallelism (numba threads); no-op on the numpy path."""
    if n is None or not use_numba():
        return
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
