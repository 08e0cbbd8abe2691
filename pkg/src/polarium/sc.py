"""Successive cancellation (SC), SC list decoding and a brute-force ML decoder.

The recursion follows ``x = [(u_a (+) u_b) G', u_b G']`` for natural-order
``G = F^{(x)n}``: the first half of ``u`` sees ``f(a, b)``, the second half
``g(a, b, c_a)`` once the first half's partial codeword ``c_a`` is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit, vectorize

from polarium.bp import exact_boxplus
from polarium.bpl import euclidean_distances
from polarium.crc import crc_check
from polarium.polar import PolarCode, polar_transform

ML_MAX_K = 20
PATH_METRICS = ("exact", "approx")


_f_vec = vectorize(["float64(float64, float64)"], cache=True)(exact_boxplus.py_func)


def sc_f(a, b):
    """Exact check-node combination, elementwise (same arithmetic as the list kernel)."""
    return _f_vec(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def sc_g(a, b, u):
    return np.asarray(b, dtype=np.float64) + (1.0 - 2.0 * np.asarray(u, dtype=np.float64)) * a


def _check_llr(llr_ch, code):
    llr = np.asarray(llr_ch, dtype=np.float64)
    if llr.shape != (code.N,):
        raise ValueError(f"expected {code.N} channel LLRs, got shape {llr.shape}")
    return llr


def sc_decode(llr_ch, code: PolarCode) -> tuple:
    """Returns ``(u_hat, x_hat)``."""
    llr = _check_llr(llr_ch, code)
    frozen = code.frozen_mask
    u_hat = np.zeros(code.N, dtype=np.uint8)

    def rec(alpha, lo):
        m = alpha.size
        if frozen[lo:lo + m].all():
            return np.zeros(m, dtype=np.uint8)
        if m == 1:
            u_hat[lo] = alpha[0] < 0
            return u_hat[lo:lo + 1].copy()
        h = m // 2
        a, b = alpha[:h], alpha[h:]
        ca = rec(sc_f(a, b), lo)
        cb = rec(sc_g(a, b, ca), lo + h)
        return np.concatenate([ca ^ cb, cb])

    x_hat = rec(llr, 0)
    return u_hat, x_hat


@dataclass
class SclResult:
    u_hat: np.ndarray
    x_hat: np.ndarray
    path_metric: float
    crc_passed: Optional[bool] = None
    u_list: Optional[np.ndarray] = None
    metrics: Optional[np.ndarray] = None
    visits: int = 0


@njit(cache=True, nogil=True)
def _pm_step(llr, bit, exact):
    x = llr if bit == 0 else -llr
    pen = -x if x < 0.0 else 0.0
    if exact:
        pen += math.log1p(math.exp(-abs(x)))
    return pen


@njit(cache=True, nogil=True)
def _scl_kernel(llr, frozen, n, list_size, exact):
    N = 1 << n
    alpha = np.zeros((list_size, n + 1, N))
    C = np.zeros((list_size, n + 1, 2, N), dtype=np.uint8)
    U = np.zeros((list_size, N), dtype=np.uint8)
    pm = np.zeros(list_size)
    alpha2 = np.empty_like(alpha)
    C2 = np.empty_like(C)
    U2 = np.empty_like(U)
    cand_pm = np.empty(2 * list_size)
    alpha[0, n, :] = llr
    P = 1
    visits = 0
    for i in range(N):
        if i == 0:
            top = n
        else:
            top = 1
            while (i >> (top - 1)) & 1 == 0:
                top += 1
        for p in range(P):
            for lam in range(top, 0, -1):
                h = 1 << (lam - 1)
                if lam == top and i != 0:
                    for t in range(h):
                        a = alpha[p, lam, t]
                        if C[p, lam - 1, 0, t]:
                            a = -a
                        alpha[p, lam - 1, t] = alpha[p, lam, t + h] + a
                else:
                    for t in range(h):
                        alpha[p, lam - 1, t] = exact_boxplus(alpha[p, lam, t], alpha[p, lam, t + h])
                visits += h
        if frozen[i]:
            for p in range(P):
                pm[p] += _pm_step(alpha[p, 0, 0], 0, exact)
                U[p, i] = 0
                C[p, 0, i & 1, 0] = 0
        else:
            for p in range(P):
                cand_pm[2 * p] = pm[p] + _pm_step(alpha[p, 0, 0], 0, exact)
                cand_pm[2 * p + 1] = pm[p] + _pm_step(alpha[p, 0, 0], 1, exact)
            order = np.argsort(cand_pm[:2 * P], kind="mergesort")
            P_new = min(2 * P, list_size)
            for q in range(P_new):
                c = order[q]
                parent = c // 2
                alpha2[q] = alpha[parent]
                C2[q] = C[parent]
                U2[q] = U[parent]
                U2[q, i] = c & 1
                C2[q, 0, i & 1, 0] = c & 1
                pm[q] = cand_pm[c]
            alpha, alpha2 = alpha2, alpha
            C, C2 = C2, C
            U, U2 = U2, U
            P = P_new
        for p in range(P):
            lam = 0
            while lam < n and (i >> lam) & 1:
                par = (i >> (lam + 1)) & 1
                size = 1 << lam
                for t in range(size):
                    C[p, lam + 1, par, t] = C[p, lam, 0, t] ^ C[p, lam, 1, t]
                    C[p, lam + 1, par, t + size] = C[p, lam, 1, t]
                lam += 1
    X = np.empty((P, N), dtype=np.uint8)
    for p in range(P):
        X[p] = C[p, n, 0] if n > 0 else C[p, 0, 0]
    return U[:P].copy(), X, pm[:P].copy(), visits


def scl_decode(llr_ch, code: PolarCode, list_size: int = 8, use_crc: bool = False,
               metric: str = "exact") -> SclResult:
    """LLR-domain SC list decoding.

    Every information bit spawns both extensions, the path metric grows by
    ``ln(1 + exp(-(1 - 2u) * llr))`` (``metric="exact"``) or by ``|llr|`` on a
    sign-opposing decision (``metric="approx"``), and the ``list_size`` best
    paths survive (stable sort, lower path index first on ties). With
    ``use_crc`` the best-metric path passing the CRC wins, falling back to the
    best path overall.
    """
    llr = _check_llr(llr_ch, code)
    if list_size < 1:
        raise ValueError("list size must be >= 1")
    if metric not in PATH_METRICS:
        raise ValueError(f"unknown path metric {metric!r}")
    if use_crc and code.crc is None:
        raise ValueError("CRC-aided decoding needs a code with a CRC")
    frozen = np.ascontiguousarray(code.frozen_mask)
    u_list, x_list, pms, visits = _scl_kernel(llr, frozen, code.n, int(list_size), metric == "exact")
    order = np.argsort(pms, kind="stable")
    best = int(order[0])
    passed = None
    if use_crc:
        passed = False
        for p in order:
            if crc_check(u_list[p, code.info_index], code.crc):
                best, passed = int(p), True
                break
    return SclResult(u_list[best].copy(), x_list[best].copy(), float(pms[best]), passed,
                     u_list, pms, int(visits))


def ml_decode_bruteforce(y, code: PolarCode, chunk: int = 4096) -> np.ndarray:
    """Euclidean-closest codeword by enumerating all 2**k messages.

    Messages are enumerated as integers with the first payload bit most
    significant, so ties resolve to the lexicographically smallest message.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.N,):
        raise ValueError(f"expected {code.N} channel outputs, got shape {y.shape}")
    if code.k > ML_MAX_K:
        raise ValueError(f"k={code.k} too large for enumeration (max {ML_MAX_K})")
    k = code.k
    shifts = np.arange(k - 1, -1, -1)
    best_d, best_x = np.inf, None
    for start in range(0, 1 << k, chunk):
        m = np.arange(start, min(start + chunk, 1 << k))
        payload = ((m[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        u = np.zeros((m.size, code.N), dtype=np.uint8)
        u[:, code.info_index] = payload
        x = polar_transform(u)
        d = euclidean_distances(y, x)
        j = int(np.argmin(d))
        if d[j] < best_d:
            best_d, best_x = d[j], x[j]
    return best_x.copy()
