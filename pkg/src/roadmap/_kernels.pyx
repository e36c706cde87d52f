# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rank-surrogate kernels; see ``_kernels_py`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()

SUPAP = 0
SMOOTHAP = 1


cdef inline double _sigmoid(double x) nogil:
    cdef double e = exp(-fabs(x))
    if x >= 0.0:
        return 1.0 / (1.0 + e)
    return e / (1.0 + e)


cdef inline double _sigmoid_prime(double x) nogil:
    cdef double e = exp(-fabs(x))
    return e / ((1.0 + e) * (1.0 + e))


cdef inline double _h_minus(double t, double tau, double rho, double delta, double top) nogil:
    if t < 0.0:
        return _sigmoid(t / tau)
    if t <= delta:
        return _sigmoid(t / tau) + 0.5
    return rho * (t - delta) + top


cdef inline double _h_minus_grad(double t, double tau, double rho, double delta) nogil:
    if t > delta:
        return rho
    return _sigmoid_prime(t / tau) / tau


cdef double _supap(const double[::1] pos, const double[::1] neg, double tau, double rho,
                   double delta, double[::1] gpos, double[::1] gneg) noexcept nogil:
    cdef Py_ssize_t np_ = pos.shape[0], nn = neg.shape[0], k, j
    cdef double top = _sigmoid(delta / tau) + 0.5
    cdef double rp, rn, denom, coef, hsum, hg, acc = 0.0
    for j in range(nn):
        gneg[j] = 0.0
    for k in range(np_):
        rp = 0.0
        for j in range(np_):
            if pos[j] >= pos[k]:
                rp += 1.0
        rn = 0.0
        for j in range(nn):
            rn += _h_minus(neg[j] - pos[k], tau, rho, delta, top)
        denom = rp + rn
        acc += rp / denom
        coef = rp / (denom * denom) / np_
        hsum = 0.0
        for j in range(nn):
            hg = _h_minus_grad(neg[j] - pos[k], tau, rho, delta)
            hsum += hg
            gneg[j] += coef * hg
        gpos[k] = -coef * hsum
    return 1.0 - acc / np_


cdef double _smoothap(const double[::1] pos, const double[::1] neg, double tau,
                      double[::1] gpos, double[::1] gneg, double[::1] rp,
                      double[::1] rn) noexcept nogil:
    cdef Py_ssize_t np_ = pos.shape[0], nn = neg.shape[0], k, j
    cdef double denom, dplus, dminus, g, acc = 0.0
    for k in range(np_):
        rp[k] = 1.0
        for j in range(np_):
            if j != k:
                rp[k] += _sigmoid((pos[j] - pos[k]) / tau)
        rn[k] = 0.0
        for j in range(nn):
            rn[k] += _sigmoid((neg[j] - pos[k]) / tau)
        acc += rp[k] / (rp[k] + rn[k])
        gpos[k] = 0.0
    for j in range(nn):
        gneg[j] = 0.0
    for k in range(np_):
        denom = rp[k] + rn[k]
        dplus = -rn[k] / (denom * denom) / np_
        dminus = rp[k] / (denom * denom) / np_
        for j in range(np_):
            if j != k:
                g = _sigmoid_prime((pos[j] - pos[k]) / tau) / tau
                gpos[j] += dplus * g
                gpos[k] -= dplus * g
        for j in range(nn):
            g = _sigmoid_prime((neg[j] - pos[k]) / tau) / tau
            gneg[j] += dminus * g
            gpos[k] -= dminus * g
    return 1.0 - acc / np_


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid_prime(x):
    e = np.exp(-np.abs(np.asarray(x, dtype=np.float64)))
    return e / (1.0 + e) ** 2


def h_minus_array(t, double tau, double rho, double delta):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef double top = _sigmoid(delta / tau) + 0.5
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _h_minus(flat[i], tau, rho, delta, top)
    return out.reshape(np.shape(t))


def h_minus_grad_array(t, double tau, double rho, double delta):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _h_minus_grad(flat[i], tau, rho, delta)
    return out.reshape(np.shape(t))


def supap_kernel(pos, neg, double tau, double rho, double delta):
    cdef double[::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef double[::1] n = np.ascontiguousarray(neg, dtype=np.float64)
    gpos = np.empty(p.shape[0])
    gneg = np.empty(n.shape[0])
    cdef double value = _supap(p, n, tau, rho, delta, gpos, gneg)
    return value, gpos, gneg


def smoothap_kernel(pos, neg, double tau):
    cdef double[::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef double[::1] n = np.ascontiguousarray(neg, dtype=np.float64)
    gpos = np.empty(p.shape[0])
    gneg = np.empty(n.shape[0])
    rp = np.empty(p.shape[0])
    rn = np.empty(p.shape[0])
    cdef double value = _smoothap(p, n, tau, gpos, gneg, rp, rn)
    return value, gpos, gneg


def batch_kernel(sim, labels, int kind, double tau, double rho, double delta):
    cdef double[:, ::1] s = np.ascontiguousarray(sim, dtype=np.float64)
    cdef cnp.int64_t[::1] lab = np.ascontiguousarray(np.unique(labels, return_inverse=True)[1].ravel(), dtype=np.int64)
    cdef Py_ssize_t b = s.shape[0], i, j, npos, nneg
    grad_arr = np.zeros((b, b))
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t[::1] pidx = np.empty(b, dtype=np.intp)
    cdef Py_ssize_t[::1] nidx = np.empty(b, dtype=np.intp)
    cdef double[::1] pos = np.empty(b)
    cdef double[::1] neg = np.empty(b)
    cdef double[::1] gpos = np.empty(b)
    cdef double[::1] gneg = np.empty(b)
    cdef double[::1] rp = np.empty(b)
    cdef double[::1] rn = np.empty(b)
    cdef double total = 0.0
    cdef int valid = 0
    with nogil:
        for i in range(b):
            npos = 0
            nneg = 0
            for j in range(b):
                if j == i:
                    continue
                if lab[j] == lab[i]:
                    pidx[npos] = j
                    pos[npos] = s[i, j]
                    npos += 1
                else:
                    nidx[nneg] = j
                    neg[nneg] = s[i, j]
                    nneg += 1
            if npos == 0:
                continue
            if kind == 0:
                total += _supap(pos[:npos], neg[:nneg], tau, rho, delta, gpos[:npos], gneg[:nneg])
            else:
                total += _smoothap(pos[:npos], neg[:nneg], tau, gpos[:npos], gneg[:nneg],
                                   rp[:npos], rn[:npos])
            for j in range(npos):
                grad[i, pidx[j]] = gpos[j]
            for j in range(nneg):
                grad[i, nidx[j]] = gneg[j]
            valid += 1
    return total, grad_arr, valid
