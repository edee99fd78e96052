"""Brute-force reference for the interferometer, written without numpy or the channel code.

Matrices are lists of lists of Python complex numbers and every map is
written out entry by entry from its textbook definition.
"""

import cmath
import math
from fractions import Fraction

ETA = cmath.exp(2j * math.pi / 3)
R_DEFAULT = [
    [Fraction(1, 45), Fraction(8, 45), Fraction(36, 45)],
    [Fraction(32, 99), Fraction(49, 99), Fraction(18, 99)],
    [Fraction(36, 55), Fraction(18, 55), Fraction(1, 55)],
]
OPEN_SETS = ("123", "12", "13", "23", "1", "2", "3", "0")
SIGNS = {"123": 1, "12": -1, "13": -1, "23": -1, "1": 1, "2": 1, "3": 1, "0": -1}


def zeros():
    return [[0j] * 3 for _ in range(3)]


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def dagger(a):
    return [[a[j][i].conjugate() for j in range(3)] for i in range(3)]


def tritter(delta_tau):
    u = zeros()
    for j in range(3):
        for k in range(3):
            u[j][k] = (1 if j == k else ETA * cmath.exp(1j * (j - k) * delta_tau)) / math.sqrt(3)
    return u


def spontaneous_cycle(rho, blocked, r):
    out = zeros()
    for i in range(3):
        for j in range(3):
            if i not in blocked and j not in blocked:
                out[i][j] = rho[i][j]
    for b in blocked:
        for m in range(3):
            out[m][m] += float(r[b][m]) * rho[b][b]
    return out


def erase(rho, blocked):
    return [[rho[i][j] if (i not in blocked and j not in blocked) else 0j for j in range(3)]
            for i in range(3)]


def dephase(rho, blocked):
    return [[rho[i][j] if (i == j or (i not in blocked and j not in blocked)) else 0j
             for j in range(3)] for i in range(3)]


def click_probability(open_label, method="erase", delta_t=math.pi / 3, delta_tau=0.0,
                      cycles=1, closing="tritter", r=R_DEFAULT, bias=0.0):
    """P for one open set; labels are 1-based strings, internal indices 0-based."""
    open_idx = set() if open_label == "0" else {int(c) - 1 for c in open_label}
    blocked = {0, 1, 2} - open_idx
    u = tritter(delta_tau)
    rho = zeros()
    rho[0][0] = 1 + 0j
    rho = matmul(matmul(u, rho), dagger(u))
    if method == "erase":
        rho = erase(rho, blocked)
    elif method == "dephase":
        rho = dephase(rho, blocked)
    else:
        for _ in range(cycles):
            rho = spontaneous_cycle(rho, blocked, r)
    if len(blocked) == 1 and bias:
        k, l = sorted(open_idx)
        rho[k][l] *= cmath.exp(1j * bias)
        rho[l][k] *= cmath.exp(-1j * bias)
    f = zeros()
    for j in range(3):
        f[j][j] = cmath.exp(-1j * j * delta_t)
    rho = matmul(matmul(f, rho), dagger(f))
    if closing == "tritter":
        v = dagger(u)
        rho = matmul(matmul(v, rho), dagger(v))
    return rho[0][0].real


def s3(**kw):
    return sum(SIGNS[label] * click_probability(label, **kw) for label in OPEN_SETS)
