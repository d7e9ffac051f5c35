"""Orbit-time kernels.

The compiled extension ``_orbit`` is used when it imports; otherwise (or when
``LCKLAB_PURE_PYTHON=1``) the NumPy implementation in ``_orbit_py`` is used.
Both return identical status codes and agree to rounding.
"""
import os

from . import _orbit_py

OK, NO_BRACKET, MAX_ITER, DEGENERATE = (_orbit_py.OK, _orbit_py.NO_BRACKET,
                                        _orbit_py.MAX_ITER, _orbit_py.DEGENERATE)

BACKENDS = {"python": _orbit_py}

try:
    from . import _orbit as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("LCKLAB_PURE_PYTHON", "") not in ("1", "true"):
    BACKEND = "compiled"
else:
    BACKEND = "python"


def get_backend(name=None):
    """Kernel module by name; ``None`` means the one selected at import."""
    name = name or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available "
                         f"(have {sorted(BACKENDS)})") from None


def expm_taylor(M, backend=None):
    return get_backend(backend).expm_taylor(M)


def orbit_solve(L, P, Z, tol_root=1e-13, max_t=200.0, max_iter=100, backend=None):
    return get_backend(backend).orbit_solve(L, P, Z, tol_root, max_t, max_iter)
