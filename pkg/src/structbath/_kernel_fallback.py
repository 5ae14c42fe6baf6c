"""Pure-numpy resolvent kernel, used when the compiled extension is absent.

Same contract as the Cython ``_kernel.resolve_grid``: vectorised over the
frequency axis with batched ``numpy.linalg.solve`` calls.  Results agree with
the compiled path to rounding, not bit-for-bit.
"""
import numpy as np

OK, SINGULAR_BATH, SYSTEM_POLE = 0, 1, 2
_MAX_HAGER_ITER = 5


def _assemble(omega_b, gamma_b, j_bath, omegas):
    n = omega_b.shape[0]
    mats = np.empty((omegas.shape[0], n, n), dtype=complex)
    mats[...] = -j_bath
    idx = np.arange(n)
    mats[:, idx, idx] = (omegas[:, None] - omega_b[None, :]) + 1j * gamma_b[None, :]
    return mats


def _solve(mats, rhs):
    return np.linalg.solve(mats, rhs[..., None])[..., 0]


def _inv_norm1(mats):
    """Batched Hager-Higham estimate of ||M^-1||_1 (M complex symmetric)."""
    m, n, _ = mats.shape
    x = np.full((m, n), 1.0 / n, dtype=complex)
    est = np.zeros(m)
    est_old = np.zeros(m)
    active = np.ones(m, dtype=bool)
    jprev = np.full(m, -1)
    for it in range(_MAX_HAGER_ITER):
        if not active.any():
            break
        sel = np.flatnonzero(active)
        y = _solve(mats[sel], x[sel])
        e = np.abs(y).sum(axis=1)
        if it > 0:
            stalled = e <= est_old[sel]
            est[sel[stalled]] = est_old[sel[stalled]]
            active[sel[stalled]] = False
            keep = ~stalled
            sel, y, e = sel[keep], y[keep], e[keep]
        est[sel] = e
        est_old[sel] = e
        mod = np.abs(y)
        sign = np.where(mod == 0, 1.0 + 0j, y / np.where(mod == 0, 1.0, mod))
        z = np.conj(_solve(mats[sel], np.conj(sign)))
        zmod = np.abs(z)
        j = np.argmax(zmod, axis=1)
        zmax = zmod[np.arange(sel.size), j]
        jp = jprev[sel]
        dot = np.where(
            jp < 0,
            z.real.sum(axis=1) / n,
            z[np.arange(sel.size), np.maximum(jp, 0)].real,
        )
        done = zmax <= dot
        active[sel[done]] = False
        nxt = sel[~done]
        x[nxt] = 0.0
        x[nxt, j[~done]] = 1.0
        jprev[nxt] = j[~done]
    alt_vec = np.empty(n, dtype=complex)
    for i in range(n):
        v = 1.0 + i / (n - 1) if n > 1 else 1.0
        alt_vec[i] = v if i % 2 == 0 else -v
    alt = np.abs(_solve(mats, np.broadcast_to(alt_vec, (m, n)))).sum(axis=1)
    alt = 2.0 * alt / (3.0 * n)
    return np.maximum(est, alt)


def _resolve_one(mat, j_sb, rcond_min):
    """Per-cell path used when a batch contains an exactly singular matrix."""
    anorm = np.abs(mat).sum(axis=0).max()
    try:
        x = np.linalg.solve(mat, j_sb.astype(complex))
        ainv = _inv_norm1(mat[None])[0]
    except np.linalg.LinAlgError:
        return None, 0.0
    if anorm == 0.0:
        return None, 0.0
    rc = 1.0 / (anorm * ainv)
    return (x if rc >= rcond_min else None), rc


def resolve_grid(omega_s, omega_b, gamma_b, j_bath, j_sb, out_index, omegas, rcond_min):
    """See ``structbath.kernel.resolve_grid``."""
    omega_b = np.ascontiguousarray(omega_b, dtype=float)
    gamma_b = np.ascontiguousarray(gamma_b, dtype=float)
    j_sb = np.ascontiguousarray(j_sb, dtype=float)
    n = omega_b.shape[0]
    j_bath = np.ascontiguousarray(j_bath, dtype=float).reshape(n, n)
    omegas = np.ascontiguousarray(omegas, dtype=float).ravel()
    m = omegas.shape[0]
    status = np.zeros(m, dtype=np.int8)
    nan = complex(np.nan, np.nan)

    if n == 0:
        sigma = np.zeros(m, dtype=complex)
        rcond = np.ones(m)
        x = np.zeros((m, 0), dtype=complex)
    else:
        mats = _assemble(omega_b, gamma_b, j_bath, omegas)
        anorm = np.abs(mats).sum(axis=1).max(axis=1)
        try:
            x = _solve(mats, np.broadcast_to(j_sb.astype(complex), (m, n)))
            rcond = 1.0 / (anorm * _inv_norm1(mats))
            rcond[anorm == 0.0] = 0.0
        except np.linalg.LinAlgError:
            x = np.empty((m, n), dtype=complex)
            rcond = np.empty(m)
            for k in range(m):
                xk, rcond[k] = _resolve_one(mats[k], j_sb, rcond_min)
                x[k] = nan if xk is None else xk
        bad = ~(rcond >= rcond_min)
        status[bad] = SINGULAR_BATH
        x[bad] = nan
        sigma = x @ j_sb

    d = (omegas - omega_s) - sigma
    pole = (d == 0) & (status == OK)
    status[pole] = SYSTEM_POLE
    with np.errstate(divide="ignore", invalid="ignore"):
        gss = np.where(status == OK, 1.0 / np.where(d == 0, 1.0, d), nan)
    if 0 <= out_index < n:
        gtr = np.where(status == OK, x[:, out_index] * gss, nan)
    else:
        gtr = np.full(m, nan)
    sigma = np.where(status == SINGULAR_BATH, nan, sigma)
    return sigma, gss.astype(complex), gtr.astype(complex), status, rcond
