"""Backend selection for the compiled kernels.

Set ``QMSVM_DISABLE_NUMBA=1`` to force the pure-numpy fallback path. The
fallback is also used automatically when numba cannot be imported.
"""

import os

_FALSY = ("", "0", "false", "no", "off")

NUMBA_DISABLED = os.environ.get("QMSVM_DISABLE_NUMBA", "").strip().lower() not in _FALSY

HAS_NUMBA = False
if not NUMBA_DISABLED:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - depends on environment
        pass

if not HAS_NUMBA:

    def njit(*args, **kwargs):
        # bare decorator or decorator factory, both become no-ops
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


BACKENDS = ("numba", "numpy")
DEFAULT_BACKEND = "numba" if HAS_NUMBA else "numpy"


def resolve_backend(backend=None):
    """Return the backend name to use, validating explicit requests."""
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is disabled or unavailable")
    return backend
