"""Hot numeric kernels with numba and pure-numpy implementations.

Every public function here exists in two flavors: a ``@njit`` build and a
numpy fallback.  ``RESOLAB_NUMBA=0`` selects the fallback at import time
(see :mod:`resolab._accel`).  ``benchmarks/bench_kernels.py`` compares the
two paths.

Kernels:

* ``fill_kernel_matrix``  -- dense Nystrom fill V(x_i) G0(x_i,x_j) w_j
* ``panel_kink_corrections`` -- replace each row's self-panel entries by
  quadrature weights that split the |x-y| kink at y = x_i exactly
* ``rk4_transfer``        -- fixed-step RK4 for -h^2 u'' + V u = lam u,
  propagating two independent solutions
* ``fourier_sum``         -- (1/2pi) sum_q w_q g_q exp(i x_q xi) over a
  batch of xi values
"""

import numpy as np

from ._accel import USE_NUMBA, njit, prange

__all__ = [
    "USE_NUMBA",
    "fill_kernel_matrix",
    "panel_kink_corrections",
    "rk4_transfer",
    "fourier_sum",
]


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

@njit(cache=True)
def _fill_nb(xs, ws, vvals, k, h):
    n = xs.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    pref = 0.5j / (h * k)
    for i in range(n):
        vi = vvals[i]
        for j in range(n):
            d = xs[i] - xs[j]
            if d < 0.0:
                d = -d
            out[i, j] = vi * pref * np.exp(1j * k * d / h) * ws[j]
    return out


@njit(cache=True)
def _bary_at(y, ynodes, bw, out):
    # normalized barycentric cardinal values of the panel basis at y
    n = ynodes.shape[0]
    s = 0.0 + 0.0j
    for j in range(n):
        d = y - ynodes[j]
        if abs(d) < 1e-15:
            for m in range(n):
                out[m] = 0.0
            out[j] = 1.0
            return
        out[j] = bw[j] / d
        s += out[j]
    for j in range(n):
        out[j] /= s


@njit(cache=True)
def _kink_nb(mat, xs, vvals, bw, panel_of, starts, ends, lows, highs,
             k, h, sub_t, sub_w):
    n = xs.shape[0]
    nsub = sub_t.shape[0]
    pref = 0.5j / (h * k)
    for i in range(n):
        p = panel_of[i]
        j0 = starts[p]
        j1 = ends[p]
        nb = j1 - j0
        ynodes = xs[j0:j1]
        bwp = bw[j0:j1]
        xi = xs[i]
        omega = np.zeros(nb, dtype=np.complex128)
        card = np.empty(nb, dtype=np.complex128)
        for side in range(2):
            if side == 0:
                lo = lows[p]
                hi = xi
            else:
                lo = xi
                hi = highs[p]
            if hi - lo < 1e-15:
                continue
            mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            for s in range(nsub):
                y = mid + half * sub_t[s]
                d = xi - y
                if d < 0.0:
                    d = -d
                g = pref * np.exp(1j * k * d / h)
                _bary_at(y, ynodes, bwp, card)
                c = half * sub_w[s] * g
                for m in range(nb):
                    omega[m] += c * card[m]
        vi = vvals[i]
        for m in range(nb):
            mat[i, j0 + m] = vi * omega[m]


@njit(cache=True)
def _rk4_nb(vhalf, x0, dx, nsteps, lam, h):
    # y = (u1, u1', u2, u2'); u'' = (V - lam)/h^2 * u
    inv_h2 = 1.0 / (h * h)
    u1 = 1.0 + 0.0j
    p1 = 0.0 + 0.0j
    u2 = 0.0 + 0.0j
    p2 = 1.0 + 0.0j
    for step in range(nsteps):
        c0 = (vhalf[2 * step] - lam) * inv_h2
        cm = (vhalf[2 * step + 1] - lam) * inv_h2
        c1 = (vhalf[2 * step + 2] - lam) * inv_h2

        a1u, a1p = p1, c0 * u1
        b1u, b1p = p2, c0 * u2

        a2u = p1 + 0.5 * dx * a1p
        a2p = cm * (u1 + 0.5 * dx * a1u)
        b2u = p2 + 0.5 * dx * b1p
        b2p = cm * (u2 + 0.5 * dx * b1u)

        a3u = p1 + 0.5 * dx * a2p
        a3p = cm * (u1 + 0.5 * dx * a2u)
        b3u = p2 + 0.5 * dx * b2p
        b3p = cm * (u2 + 0.5 * dx * b2u)

        a4u = p1 + dx * a3p
        a4p = c1 * (u1 + dx * a3u)
        b4u = p2 + dx * b3p
        b4p = c1 * (u2 + dx * b3u)

        u1 += dx * (a1u + 2 * a2u + 2 * a3u + a4u) / 6.0
        p1 += dx * (a1p + 2 * a2p + 2 * a3p + a4p) / 6.0
        u2 += dx * (b1u + 2 * b2u + 2 * b3u + b4u) / 6.0
        p2 += dx * (b1p + 2 * b2p + 2 * b3p + b4p) / 6.0
    return u1, p1, u2, p2


@njit(cache=True, parallel=True)
def _fourier_nb(xnodes, wg, xi_re, xi_im):
    nxi = xi_re.shape[0]
    out = np.empty(nxi, dtype=np.complex128)
    for r in prange(nxi):
        xi = complex(xi_re[r], xi_im[r])
        acc = 0.0 + 0.0j
        for q in range(xnodes.shape[0]):
            acc += wg[q] * np.exp(1j * xnodes[q] * xi)
        out[r] = acc / (2.0 * np.pi)
    return out


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------

def _fill_np(xs, ws, vvals, k, h):
    dist = np.abs(xs[:, None] - xs[None, :])
    g = (0.5j / (h * k)) * np.exp(1j * k * dist / h)
    return vvals[:, None] * g * ws[None, :]


def _kink_np(mat, xs, vvals, bw, panel_of, starts, ends, lows, highs,
             k, h, sub_t, sub_w):
    pref = 0.5j / (h * k)
    npanel = len(starts)
    for p in range(npanel):
        j0, j1 = starts[p], ends[p]
        rows = np.where(panel_of == np.int64(p))[0]
        if rows.size == 0:
            continue
        ynodes = xs[j0:j1]
        bwp = bw[j0:j1]
        xi = xs[rows]
        omega = np.zeros((rows.size, j1 - j0), dtype=np.complex128)
        for lo, hi in ((np.full_like(xi, lows[p]), xi),
                       (xi, np.full_like(xi, highs[p]))):
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            y = mid[:, None] + half[:, None] * sub_t[None, :]
            g = pref * np.exp(1j * k * np.abs(xi[:, None] - y) / h)
            diff = y[:, :, None] - ynodes[None, None, :]
            cvals = bwp[None, None, :] / diff
            card = cvals / cvals.sum(axis=2)[:, :, None]
            omega += np.einsum("rs,rs,rsj->rj",
                               half[:, None] * sub_w[None, :], g, card)
        mat[rows, j0:j1] = vvals[rows, None] * omega


def _rk4_np(vhalf, x0, dx, nsteps, lam, h):
    inv_h2 = 1.0 / (h * h)
    u = np.array([1.0 + 0j, 0.0 + 0j])
    p = np.array([0.0 + 0j, 1.0 + 0j])
    for step in range(nsteps):
        c0 = (vhalf[2 * step] - lam) * inv_h2
        cm = (vhalf[2 * step + 1] - lam) * inv_h2
        c1 = (vhalf[2 * step + 2] - lam) * inv_h2
        k1u, k1p = p, c0 * u
        k2u = p + 0.5 * dx * k1p
        k2p = cm * (u + 0.5 * dx * k1u)
        k3u = p + 0.5 * dx * k2p
        k3p = cm * (u + 0.5 * dx * k2u)
        k4u = p + dx * k3p
        k4p = c1 * (u + dx * k3u)
        u = u + dx * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0
        p = p + dx * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
    return u[0], p[0], u[1], p[1]


def _fourier_np(xnodes, wg, xi_re, xi_im):
    xi = xi_re + 1j * xi_im
    out = np.empty(xi.shape[0], dtype=complex)
    chunk = max(1, 4_000_000 // max(1, xnodes.shape[0]))
    for lo in range(0, xi.shape[0], chunk):
        block = xi[lo:lo + chunk]
        out[lo:lo + chunk] = np.exp(1j * np.outer(block, xnodes)) @ wg
    return out / (2.0 * np.pi)


# ---------------------------------------------------------------------------
# public dispatch
# ---------------------------------------------------------------------------

def fill_kernel_matrix(xs, ws, vvals, k, h):
    """Dense matrix V(x_i) * G0(x_i, x_j; k, h) * w_j."""
    if USE_NUMBA:
        return _fill_nb(xs, ws, vvals, complex(k), float(h))
    return _fill_np(xs, ws, vvals, complex(k), float(h))


def panel_kink_corrections(mat, xs, vvals, bw, panel_of, starts, ends,
                           lows, highs, k, h, sub_t, sub_w):
    """Overwrite self-panel entries of ``mat`` with kink-split weights.

    For row i the quadrature over the panel containing x_i is replaced by
    two sub-integrals split at y = x_i, integrating the free kernel against
    the panel's Lagrange basis.  Off-panel entries keep plain weights.
    """
    if USE_NUMBA:
        _kink_nb(mat, xs, vvals, bw, panel_of, starts, ends, lows, highs,
                 complex(k), float(h), sub_t, sub_w)
    else:
        _kink_np(mat, xs, vvals, bw, panel_of, starts, ends, lows, highs,
                 complex(k), float(h), sub_t, sub_w)
    return mat


def rk4_transfer(vhalf, x0, dx, nsteps, lam, h):
    """Propagate (u, u') for two independent initial conditions.

    Returns ``(u1, p1, u2, p2)`` at the right endpoint for initial data
    (1, 0) and (0, 1) at the left endpoint.  ``vhalf`` holds V on the
    half-step grid x0 + j*dx/2, j = 0..2*nsteps.
    """
    if USE_NUMBA:
        return _rk4_nb(vhalf, float(x0), float(dx), int(nsteps),
                       complex(lam), float(h))
    return _rk4_np(vhalf, float(x0), float(dx), int(nsteps),
                   complex(lam), float(h))


def fourier_sum(xnodes, wg, xi):
    """(1/2pi) * sum_q wg_q exp(i x_q xi) for each xi in a batch."""
    xi = np.asarray(xi, dtype=complex)
    if USE_NUMBA:
        return _fourier_nb(xnodes, wg.astype(complex),
                           np.ascontiguousarray(xi.real),
                           np.ascontiguousarray(xi.imag))
    return _fourier_np(xnodes, wg.astype(complex), xi.real, xi.imag)
