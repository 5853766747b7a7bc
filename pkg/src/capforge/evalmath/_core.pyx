# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels: contrastive loss, its gradient, and R@k.

Semantics mirror _fallback.py exactly; tests assert equivalence.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def infonce_forward(double[:, ::1] audio, double[:, ::1] text, double tau):
    cdef Py_ssize_t b = audio.shape[0]
    cdef Py_ssize_t d = audio.shape[1]
    cdef cnp.ndarray[double, ndim=2] z_arr = np.empty((b, b), dtype=np.float64)
    cdef double[:, ::1] z = z_arr
    cdef Py_ssize_t i, j, m
    cdef double acc, zmax, lse
    for i in range(b):
        for j in range(b):
            acc = 0.0
            for m in range(d):
                acc += audio[i, m] * text[j, m]
            z[i, j] = acc / tau

    cdef cnp.ndarray[double, ndim=1] loss_a = np.empty(b, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] loss_t = np.empty(b, dtype=np.float64)
    cdef double total = 0.0
    for i in range(b):
        zmax = z[i, 0]
        for j in range(1, b):
            if z[i, j] > zmax:
                zmax = z[i, j]
        lse = 0.0
        for j in range(b):
            lse += exp(z[i, j] - zmax)
        loss_a[i] = -(z[i, i] - zmax - log(lse))
    for i in range(b):
        zmax = z[0, i]
        for j in range(1, b):
            if z[j, i] > zmax:
                zmax = z[j, i]
        lse = 0.0
        for j in range(b):
            lse += exp(z[j, i] - zmax)
        loss_t[i] = -(z[i, i] - zmax - log(lse))
    for i in range(b):
        total += loss_a[i] + loss_t[i]
    return total / (2.0 * b), loss_a, loss_t


def infonce_backward(double[:, ::1] audio, double[:, ::1] text, double tau):
    cdef Py_ssize_t b = audio.shape[0]
    cdef Py_ssize_t d = audio.shape[1]
    cdef cnp.ndarray[double, ndim=2] w_arr = np.zeros((b, b), dtype=np.float64)
    cdef double[:, ::1] w = w_arr
    cdef Py_ssize_t i, j, m
    cdef double acc, zmax, lse

    # w = P + Q^T - 2I where P is the row softmax of A.T^T/tau and Q the
    # row softmax of its transpose.
    cdef cnp.ndarray[double, ndim=2] z_arr = np.empty((b, b), dtype=np.float64)
    cdef double[:, ::1] z = z_arr
    for i in range(b):
        for j in range(b):
            acc = 0.0
            for m in range(d):
                acc += audio[i, m] * text[j, m]
            z[i, j] = acc / tau

    for i in range(b):
        zmax = z[i, 0]
        for j in range(1, b):
            if z[i, j] > zmax:
                zmax = z[i, j]
        lse = 0.0
        for j in range(b):
            lse += exp(z[i, j] - zmax)
        for j in range(b):
            w[i, j] += exp(z[i, j] - zmax) / lse
    for i in range(b):
        zmax = z[0, i]
        for j in range(1, b):
            if z[j, i] > zmax:
                zmax = z[j, i]
        lse = 0.0
        for j in range(b):
            lse += exp(z[j, i] - zmax)
        for j in range(b):
            # Q[i, j] with rows indexed by text: contributes at w[j, i].
            w[j, i] += exp(z[j, i] - zmax) / lse
    for i in range(b):
        w[i, i] -= 2.0

    cdef double scale = 1.0 / (2.0 * b * tau)
    cdef cnp.ndarray[double, ndim=2] grad_audio = np.zeros((b, d), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] grad_text = np.zeros((b, d), dtype=np.float64)
    cdef double[:, ::1] ga = grad_audio
    cdef double[:, ::1] gt = grad_text
    for i in range(b):
        for j in range(b):
            acc = w[i, j] * scale
            for m in range(d):
                ga[i, m] += acc * text[j, m]
    for i in range(b):
        for j in range(b):
            # (Q + P^T)[i, j] = w[j, i]
            acc = w[j, i] * scale
            for m in range(d):
                gt[i, m] += acc * audio[j, m]
    return grad_audio, grad_text


def recall_percent(double[:, ::1] s, int k, bint audio_to_text):
    cdef Py_ssize_t b = s.shape[0]
    cdef Py_ssize_t q, j
    cdef int rank, hits = 0
    cdef double truth, v
    for q in range(b):
        truth = s[q, q]
        rank = 1
        for j in range(b):
            v = s[q, j] if audio_to_text else s[j, q]
            if v > truth or (v == truth and j < q):
                rank += 1
        if rank <= k:
            hits += 1
    return 100.0 * hits / b
