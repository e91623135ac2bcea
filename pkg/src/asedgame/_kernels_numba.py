"""Numba-compiled versions of the hot kernels (same contracts as ``_kernels_numpy``)."""
import math

import numpy as np
from numba import njit

JIT_OPTIONS = {"nogil": True, "cache": True}


@njit(**JIT_OPTIONS)
def correlate_valid(image, kernel):
    kh, kw = kernel.shape
    oh = image.shape[0] - kh + 1
    ow = image.shape[1] - kw + 1
    out = np.zeros((oh, ow))
    for i in range(oh):
        for j in range(ow):
            acc = 0.0
            for a in range(kh):
                for b in range(kw):
                    acc += image[i + a, j + b] * kernel[a, b]
            out[i, j] = acc
    return out


@njit(**JIT_OPTIONS)
def correlate_valid_adjoint(resp, kernel, out_shape):
    kh, kw = kernel.shape
    out = np.zeros(out_shape)
    oh, ow = resp.shape
    for i in range(oh):
        for j in range(ow):
            r = resp[i, j]
            if r == 0.0:
                continue
            for a in range(kh):
                for b in range(kw):
                    out[i + a, j + b] += kernel[a, b] * r
    return out


@njit(**JIT_OPTIONS)
def ternary_probs(lam, rho_plus, rho_minus):
    pp = np.empty(rho_plus.shape)
    pm = np.empty(rho_plus.shape)
    fp = rho_plus.ravel()
    fm = rho_minus.ravel()
    op = pp.ravel()
    om = pm.ravel()
    for k in range(fp.size):
        ep = 0.0 if math.isinf(fp[k]) else math.exp(-lam * fp[k])
        em = 0.0 if math.isinf(fm[k]) else math.exp(-lam * fm[k])
        z = 1.0 + ep + em
        op[k] = ep / z
        om[k] = em / z
    return pp, pm


@njit(**JIT_OPTIONS)
def ternary_entropy(lam, rho_plus, rho_minus):
    # -sum p log p with log pi = -lam*rho - log z: one log per element instead of three
    fp = rho_plus.ravel()
    fm = rho_minus.ravel()
    h = 0.0
    for k in range(fp.size):
        ep = 0.0 if math.isinf(fp[k]) else math.exp(-lam * fp[k])
        em = 0.0 if math.isinf(fm[k]) else math.exp(-lam * fm[k])
        z = 1.0 + ep + em
        acc = math.log(z)
        if ep > 0.0:
            acc += lam * fp[k] * ep / z
        if em > 0.0:
            acc += lam * fm[k] * em / z
        h += acc
    return h / math.log(2.0)


@njit(**JIT_OPTIONS)
def pivot(tab, row, col):
    m, n = tab.shape
    piv = tab[row, col]
    for j in range(n):
        tab[row, j] /= piv
    for i in range(m):
        if i == row:
            continue
        f = tab[i, col]
        if f == 0.0:
            continue
        for j in range(n):
            tab[i, j] -= f * tab[row, j]
