# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the numpy kernel backend.

Same signatures and semantics as numpy_backend.py; tests assert the two
agree to machine precision. All arrays are C-contiguous float64.
"""

import numpy as np

from libc.math cimport exp, log, sqrt, tanh as ctanh

COMPILED = True


cdef inline double _sig(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


def sigmoid(x):
    out = np.empty_like(x)
    cdef double[::1] xf = x.reshape(-1)
    cdef double[::1] of = out.reshape(-1)
    cdef Py_ssize_t n = xf.shape[0], k
    for k in range(n):
        of[k] = _sig(xf[k])
    return out


def sigmoid_grad(y, gy):
    out = np.empty_like(y)
    cdef double[::1] yf = y.reshape(-1)
    cdef double[::1] gf = gy.reshape(-1)
    cdef double[::1] of = out.reshape(-1)
    cdef Py_ssize_t n = yf.shape[0], k
    for k in range(n):
        of[k] = gf[k] * yf[k] * (1.0 - yf[k])
    return out


def tanh(x):
    out = np.empty_like(x)
    cdef double[::1] xf = x.reshape(-1)
    cdef double[::1] of = out.reshape(-1)
    cdef Py_ssize_t n = xf.shape[0], k
    for k in range(n):
        of[k] = ctanh(xf[k])
    return out


def tanh_grad(y, gy):
    out = np.empty_like(y)
    cdef double[::1] yf = y.reshape(-1)
    cdef double[::1] gf = gy.reshape(-1)
    cdef double[::1] of = out.reshape(-1)
    cdef Py_ssize_t n = yf.shape[0], k
    for k in range(n):
        of[k] = gf[k] * (1.0 - yf[k] * yf[k])
    return out


def softmax_rows(x):
    out = np.empty_like(x)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t nr = xv.shape[0], nc = xv.shape[1], r, c
    cdef double mx, z
    for r in range(nr):
        mx = xv[r, 0]
        for c in range(1, nc):
            if xv[r, c] > mx:
                mx = xv[r, c]
        z = 0.0
        for c in range(nc):
            ov[r, c] = exp(xv[r, c] - mx)
            z += ov[r, c]
        for c in range(nc):
            ov[r, c] /= z
    return out


def softmax_xent_forward(logits, labels):
    cdef Py_ssize_t nr = logits.shape[0], nc = logits.shape[1], r, c
    losses = np.empty(nr, dtype=np.float64)
    probs = np.empty_like(logits)
    cdef double[:, ::1] xv = logits
    cdef double[:, ::1] pv = probs
    cdef double[::1] lv = losses
    cdef long[::1] yv = labels
    cdef double mx, z
    for r in range(nr):
        mx = xv[r, 0]
        for c in range(1, nc):
            if xv[r, c] > mx:
                mx = xv[r, c]
        z = 0.0
        for c in range(nc):
            pv[r, c] = exp(xv[r, c] - mx)
            z += pv[r, c]
        for c in range(nc):
            pv[r, c] /= z
        lv[r] = log(z) - (xv[r, yv[r]] - mx)
    return losses, probs


def softmax_xent_backward(probs, labels, glosses):
    out = np.empty_like(probs)
    cdef double[:, ::1] pv = probs
    cdef double[:, ::1] ov = out
    cdef long[::1] yv = labels
    cdef double[::1] gv = glosses
    cdef Py_ssize_t nr = pv.shape[0], nc = pv.shape[1], r, c
    for r in range(nr):
        for c in range(nc):
            ov[r, c] = pv[r, c] * gv[r]
        ov[r, yv[r]] -= gv[r]
    return out


def lstm_gates_forward(pre, h_prev, c_prev, mask):
    cdef Py_ssize_t nb = c_prev.shape[0], nh = c_prev.shape[1], b, j
    h = np.empty_like(h_prev)
    c = np.empty_like(c_prev)
    acts = np.empty_like(pre)
    tanh_c = np.empty_like(c_prev)
    cdef double[:, ::1] prev_ = pre
    cdef double[:, ::1] hp = h_prev
    cdef double[:, ::1] cp = c_prev
    cdef double[::1] mk = mask
    cdef double[:, ::1] hv = h
    cdef double[:, ::1] cv = c
    cdef double[:, ::1] av = acts
    cdef double[:, ::1] tv = tanh_c
    cdef double i, f, g, o, c_new, t_c, m
    for b in range(nb):
        m = mk[b]
        for j in range(nh):
            i = _sig(prev_[b, j])
            f = _sig(prev_[b, nh + j])
            g = ctanh(prev_[b, 2 * nh + j])
            o = _sig(prev_[b, 3 * nh + j])
            av[b, j] = i
            av[b, nh + j] = f
            av[b, 2 * nh + j] = g
            av[b, 3 * nh + j] = o
            c_new = f * cp[b, j] + i * g
            t_c = ctanh(c_new)
            tv[b, j] = t_c
            cv[b, j] = m * c_new + (1.0 - m) * cp[b, j]
            hv[b, j] = m * o * t_c + (1.0 - m) * hp[b, j]
    return h, c, acts, tanh_c


def lstm_gates_backward(acts, tanh_c, c_prev, mask, gh, gc):
    cdef Py_ssize_t nb = c_prev.shape[0], nh = c_prev.shape[1], b, j
    gpre = np.empty_like(acts)
    gh_prev = np.empty_like(gh)
    gc_prev = np.empty_like(gc)
    cdef double[:, ::1] av = acts
    cdef double[:, ::1] tv = tanh_c
    cdef double[:, ::1] cp = c_prev
    cdef double[::1] mk = mask
    cdef double[:, ::1] ghv = gh
    cdef double[:, ::1] gcv = gc
    cdef double[:, ::1] gpv = gpre
    cdef double[:, ::1] ghp = gh_prev
    cdef double[:, ::1] gcp = gc_prev
    cdef double i, f, g, o, t_c, m, gh_new, gc_new, gi, gf, gg, go
    for b in range(nb):
        m = mk[b]
        for j in range(nh):
            i = av[b, j]
            f = av[b, nh + j]
            g = av[b, 2 * nh + j]
            o = av[b, 3 * nh + j]
            t_c = tv[b, j]
            gh_new = m * ghv[b, j]
            ghp[b, j] = (1.0 - m) * ghv[b, j]
            gc_new = m * gcv[b, j] + gh_new * o * (1.0 - t_c * t_c)
            go = gh_new * t_c
            gf = gc_new * cp[b, j]
            gcp[b, j] = (1.0 - m) * gcv[b, j] + gc_new * f
            gi = gc_new * g
            gg = gc_new * i
            gpv[b, j] = gi * i * (1.0 - i)
            gpv[b, nh + j] = gf * f * (1.0 - f)
            gpv[b, 2 * nh + j] = gg * (1.0 - g * g)
            gpv[b, 3 * nh + j] = go * o * (1.0 - o)
    return gpre, gh_prev, gc_prev


def scatter_add_rows(out, idx, rows):
    cdef double[:, ::1] ov = out
    cdef long[::1] iv = idx
    cdef double[:, ::1] rv = rows
    cdef Py_ssize_t n = iv.shape[0], d = rv.shape[1], k, j, row
    for k in range(n):
        row = iv[k]
        for j in range(d):
            ov[row, j] += rv[k, j]


def adam_step(p, g, m, v, t, lr, beta1, beta2, eps):
    cdef double[::1] pf = p.reshape(-1)
    cdef double[::1] gf = g.reshape(-1)
    cdef double[::1] mf = m.reshape(-1)
    cdef double[::1] vf = v.reshape(-1)
    cdef Py_ssize_t n = pf.shape[0], k
    cdef double b1 = beta1, b2 = beta2, step = lr, e = eps
    cdef double bc1 = 1.0 - b1 ** t
    cdef double bc2 = 1.0 - b2 ** t
    cdef double mhat, vhat
    for k in range(n):
        mf[k] = b1 * mf[k] + (1.0 - b1) * gf[k]
        vf[k] = b2 * vf[k] + (1.0 - b2) * gf[k] * gf[k]
        mhat = mf[k] / bc1
        vhat = vf[k] / bc2
        pf[k] -= step * mhat / (sqrt(vhat) + e)
