# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step RK4 sweep for the single-excitation memory equation.

Integrates dP/dt = -(1 + C) P - sqrt(2 C) F_in together with the three
running integrals used by the photon ledger.  ``c`` and ``f`` hold C and
F_in sampled on the half-step grid t0 + j*h/2, j = 0..2n.
"""
import numpy as np
from libc.math cimport sqrt


def rk4_sweep(double h, double p0, const double[::1] c, const double[::1] f):
    cdef Py_ssize_t m = c.shape[0]
    if f.shape[0] != m or m < 3 or m % 2 != 1:
        raise ValueError("c and f must share an odd length >= 3 (half-step grid)")
    cdef Py_ssize_t n = (m - 1) // 2
    P_arr = np.empty(n + 1)
    out_arr = np.empty(n + 1)
    in_arr = np.empty(n + 1)
    loss_arr = np.empty(n + 1)
    cdef double[::1] P = P_arr
    cdef double[::1] out_cum = out_arr
    cdef double[::1] in_cum = in_arr
    cdef double[::1] loss_cum = loss_arr

    cdef Py_ssize_t i, j
    cdef double p = p0, o_acc = 0.0, i_acc = 0.0, l_acc = 0.0
    cdef double h6 = h / 6.0, hh = 0.5 * h
    cdef double c0, c1, c2, g0, g1, g2, f0, f1, f2
    cdef double k1, k2, k3, k4, q2, q3, q4, e1, e2, e3, e4

    P[0] = p
    out_cum[0] = 0.0
    in_cum[0] = 0.0
    loss_cum[0] = 0.0
    for i in range(n):
        j = 2 * i
        c0 = c[j]
        c1 = c[j + 1]
        c2 = c[j + 2]
        f0 = f[j]
        f1 = f[j + 1]
        f2 = f[j + 2]
        g0 = sqrt(2.0 * c0)
        g1 = sqrt(2.0 * c1)
        g2 = sqrt(2.0 * c2)

        k1 = -(1.0 + c0) * p - g0 * f0
        q2 = p + hh * k1
        k2 = -(1.0 + c1) * q2 - g1 * f1
        q3 = p + hh * k2
        k3 = -(1.0 + c1) * q3 - g1 * f1
        q4 = p + h * k3
        k4 = -(1.0 + c2) * q4 - g2 * f2

        e1 = f0 + g0 * p
        e2 = f1 + g1 * q2
        e3 = f1 + g1 * q3
        e4 = f2 + g2 * q4
        o_acc += h6 * (e1 * e1 + 2.0 * (e2 * e2 + e3 * e3) + e4 * e4)
        i_acc += h6 * (f0 * f0 + 4.0 * f1 * f1 + f2 * f2)
        l_acc += h6 * 2.0 * (p * p + 2.0 * (q2 * q2 + q3 * q3) + q4 * q4)
        p += h6 * (k1 + 2.0 * (k2 + k3) + k4)

        P[i + 1] = p
        out_cum[i + 1] = o_acc
        in_cum[i + 1] = i_acc
        loss_cum[i + 1] = l_acc
    return P_arr, out_arr, in_arr, loss_arr
