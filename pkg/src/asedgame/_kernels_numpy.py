"""Pure-numpy versions of the hot kernels.

Every function here has a twin with the same signature in ``_kernels_numba``.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def correlate_valid(image, kernel):
    windows = sliding_window_view(image, kernel.shape)
    return np.einsum("ijkl,kl->ij", windows, kernel)


def correlate_valid_adjoint(resp, kernel, out_shape):
    """Transpose of :func:`correlate_valid` applied to ``resp``."""
    kh, kw = kernel.shape
    out = np.zeros(out_shape)
    oh, ow = resp.shape
    for a in range(kh):
        for b in range(kw):
            out[a:a + oh, b:b + ow] += kernel[a, b] * resp
    return out


def ternary_probs(lam, rho_plus, rho_minus):
    with np.errstate(invalid="ignore", over="ignore"):
        ep = np.where(np.isinf(rho_plus), 0.0, np.exp(-lam * rho_plus))
        em = np.where(np.isinf(rho_minus), 0.0, np.exp(-lam * rho_minus))
    z = 1.0 + ep + em
    return ep / z, em / z


def ternary_entropy(lam, rho_plus, rho_minus):
    """Total entropy in bits of the ternary change distribution at ``lam``."""
    pp, pm = ternary_probs(lam, rho_plus, rho_minus)
    p0 = 1.0 - pp - pm
    h = 0.0
    for p in (pp, pm, p0):
        nz = p > 0
        h -= float(np.sum(p[nz] * np.log2(p[nz])))
    return h


def pivot(tab, row, col):
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    tab -= np.outer(factors, tab[row])
