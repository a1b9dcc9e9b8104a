"""Pure-Python RK4 sweep, numerically identical to the compiled kernel."""
import math

import numpy as np


def rk4_sweep(h, p0, c, f):
    c = np.ascontiguousarray(c, dtype=float)
    f = np.ascontiguousarray(f, dtype=float)
    m = c.shape[0]
    if f.shape[0] != m or m < 3 or m % 2 != 1:
        raise ValueError("c and f must share an odd length >= 3 (half-step grid)")
    n = (m - 1) // 2
    cl = c.tolist()
    fl = f.tolist()
    gl = [math.sqrt(2.0 * x) for x in cl]

    P = [0.0] * (n + 1)
    out_cum = [0.0] * (n + 1)
    in_cum = [0.0] * (n + 1)
    loss_cum = [0.0] * (n + 1)
    p = float(p0)
    o_acc = i_acc = l_acc = 0.0
    h6 = h / 6.0
    hh = 0.5 * h
    P[0] = p
    for i in range(n):
        j = 2 * i
        c0, c1, c2 = cl[j], cl[j + 1], cl[j + 2]
        f0, f1, f2 = fl[j], fl[j + 1], fl[j + 2]
        g0, g1, g2 = gl[j], gl[j + 1], gl[j + 2]

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
    return np.array(P), np.array(out_cum), np.array(in_cum), np.array(loss_cum)
