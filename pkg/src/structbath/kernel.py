"""Backend selection for the resolvent hot loop.

The compiled Cython core (``_kernel``) is used when it was built; otherwise
the numpy implementation in ``_kernel_fallback`` takes over.  Both expose
``resolve_grid`` with identical semantics.
"""
from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from . import _kernel_fallback

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

#: reciprocal 1-norm condition below which the bath resolvent counts as singular
RCOND_MIN = 1e-13

OK = _kernel_fallback.OK
SINGULAR_BATH = _kernel_fallback.SINGULAR_BATH
SYSTEM_POLE = _kernel_fallback.SYSTEM_POLE

_IMPLS = {"python": _kernel_fallback.resolve_grid}
if _compiled is not None:
    _IMPLS["compiled"] = _compiled.resolve_grid

_active = "compiled" if _compiled is not None else "python"


def available_backends() -> tuple:
    return tuple(sorted(_IMPLS))


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _active = name


@contextmanager
def use_backend(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def resolve_grid(omega_s, omega_b, gamma_b, j_bath, j_sb, out_index, omegas,
                 rcond_min=RCOND_MIN, backend=None):
    """Evaluate the Schur-complement quantities on a frequency grid.

    Parameters
    ----------
    omega_s : float
        System frequency.
    omega_b, gamma_b : (n,) array_like
        Bath frequencies and loss half-widths.
    j_bath : (n, n) array_like
        Real symmetric bath coupling matrix.
    j_sb : (n,) array_like
        System-bath couplings.
    out_index : int
        Bath position of the output node; ``-1`` disables the transfer column.
    omegas : (m,) array_like
        Real evaluation frequencies.
    rcond_min : float
        Cells whose reciprocal condition estimate of ``M`` falls below this
        are flagged ``SINGULAR_BATH``.

    Returns
    -------
    sigma, g_ss, g_transfer : (m,) complex arrays
        NaN where the cell is flagged.
    status : (m,) int8 array
        ``OK``, ``SINGULAR_BATH`` or ``SYSTEM_POLE`` per cell.
    rcond : (m,) float array
    """
    impl = _IMPLS[backend or _active]
    return impl(float(omega_s), np.asarray(omega_b, dtype=float),
                np.asarray(gamma_b, dtype=float), np.asarray(j_bath, dtype=float),
                np.asarray(j_sb, dtype=float), int(out_index),
                np.asarray(omegas, dtype=float), float(rcond_min))
