"""Belief propagation over a stage-permuted polar factor graph.

Column 0 of the message memory faces ``u``, column ``n`` faces the channel.
Stage ``j`` (0-based here) sits between columns ``j`` and ``j + 1`` and
couples rows ``i`` and ``i + s_j`` for every ``i`` with ``i & s_j == 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from polarium.crc import crc_check
from polarium.polar import PolarCode, g_matrix_check

DEFAULT_CLIP = 40.0
DEFAULT_ALPHA = 0.9375
STOP_MODES = ("g_matrix", "crc", "none")
CN_MODES = ("exact", "minsum")


@dataclass(frozen=True)
class StagePermutation:
    pi: tuple

    def __post_init__(self):
        pi = tuple(int(p) for p in self.pi)
        if not pi or sorted(pi) != list(range(1, len(pi) + 1)):
            raise ValueError(f"not a permutation of 1..n: {self.pi}")
        object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return len(self.pi)

    @property
    def s(self) -> tuple:
        return separations_from_permutation(self.pi)

    @classmethod
    def identity(cls, n: int) -> "StagePermutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def parse(cls, text: str) -> "StagePermutation":
        return cls(tuple(int(t) for t in text.split(",")))

    def __str__(self) -> str:
        return ",".join(str(p) for p in self.pi)


def separations_from_permutation(pi: Sequence[int]) -> tuple:
    pi = [int(p) for p in pi]
    if not pi or sorted(pi) != list(range(1, len(pi) + 1)):
        raise ValueError(f"not a permutation of 1..n: {pi}")
    return tuple(1 << (p - 1) for p in pi)


@dataclass
class MessageMemory:
    L: np.ndarray  # (n + 1, N) right-to-left
    R: np.ndarray  # (n + 1, N) left-to-right
    clip: float


@dataclass
class DecodeCandidate:
    u_hat: np.ndarray
    x_hat: np.ndarray
    valid: bool
    iterations: int
    pe_updates: int


# -- scalar kernels ------------------------------------------------------------

@njit(cache=True, nogil=True)
def _clip(v, T):
    if v > T:
        return T
    if v < -T:
        return -T
    return v


@njit(cache=True, nogil=True)
def exact_boxplus(a, b):
    """``2 atanh(tanh(a/2) tanh(b/2))`` without clipping; infinities act as hard beliefs."""
    if a == 0.0 or b == 0.0:
        return 0.0
    if math.isinf(a):
        return b if a > 0.0 else -b
    if math.isinf(b):
        return a if b > 0.0 else -a
    aa = abs(a)
    ab = abs(b)
    m = aa if aa < ab else ab
    if m < 1e-3:
        # tiny results: the log form below leaves ~1e-16 absolute error, the tanh form keeps relative precision
        return 2.0 * math.atanh(math.tanh(0.5 * a) * math.tanh(0.5 * b))
    sgn = 1.0 if (a > 0.0) == (b > 0.0) else -1.0
    return sgn * m + math.log1p(math.exp(-abs(a + b))) - math.log1p(math.exp(-abs(a - b)))


@njit(cache=True, nogil=True)
def _boxplus(a, b, T, minsum, alpha):
    # |x| >= T stands for a hard (infinite) belief
    if a >= T:
        return _clip(b, T)
    if a <= -T:
        return _clip(-b, T)
    if b >= T:
        return _clip(a, T)
    if b <= -T:
        return _clip(-a, T)
    if not minsum:
        return _clip(exact_boxplus(a, b), T)
    if a == 0.0 or b == 0.0:
        return 0.0
    sgn = 1.0 if (a > 0.0) == (b > 0.0) else -1.0
    return _clip(alpha * sgn * min(abs(a), abs(b)), T)


def boxplus(a: float, b: float, clip: float = DEFAULT_CLIP, cn: str = "exact",
            alpha: float = DEFAULT_ALPHA) -> float:
    """Check-node combination of two LLRs, saturating at ``clip``."""
    if cn not in CN_MODES:
        raise ValueError(f"unknown check-node mode {cn!r}")
    return float(_boxplus(float(a), float(b), float(clip), cn == "minsum", float(alpha)))


def pe_update(L_u_right: float, L_l_right: float, R_u_left: float, R_l_left: float,
              clip: float = DEFAULT_CLIP, cn: str = "exact", alpha: float = DEFAULT_ALPHA) -> tuple:
    """Outputs ``(L_u_left, L_l_left, R_u_right, R_l_right)`` of one processing element."""
    bp = lambda a, b: boxplus(a, b, clip, cn, alpha)  # noqa: E731
    T = float(clip)
    lu = bp(L_u_right, L_l_right + R_l_left)
    ll = float(_clip(bp(R_u_left, L_u_right) + L_l_right, T))
    ru = bp(R_u_left, L_l_right + R_l_left)
    rl = float(_clip(bp(R_u_left, L_u_right) + R_l_left, T))
    return lu, ll, ru, rl


# -- full decoder kernel ---------------------------------------------------------

@njit(cache=True, nogil=True)
def _encode_inplace(x):
    N = x.size
    s = 1
    while s < N:
        for i in range(N):
            if i & s == 0:
                x[i] ^= x[i + s]
        s <<= 1


@njit(cache=True, nogil=True)
def _hard_decide(L, R, frozen, u_hat, x_hat):
    n = L.shape[0] - 1
    for i in range(L.shape[1]):
        if frozen[i]:
            u_hat[i] = 0
        else:
            u_hat[i] = 1 if L[0, i] + R[0, i] < 0.0 else 0
        x_hat[i] = 1 if L[n, i] + R[n, i] < 0.0 else 0


@njit(cache=True, nogil=True)
def _g_check(u_hat, x_hat, work):
    work[:] = u_hat
    _encode_inplace(work)
    for i in range(work.size):
        if work[i] != x_hat[i]:
            return False
    return True


@njit(cache=True, nogil=True)
def _bp_iterate(L, R, frozen, seps, n_iter, g_stop, T, minsum, alpha, u_hat, x_hat, work):
    """Run up to ``n_iter`` iterations; returns the number actually run."""
    n = seps.size
    N = L.shape[1]
    it = 0
    while it < n_iter:
        for j in range(n):
            s = seps[j]
            for i in range(N):
                if i & s:
                    continue
                lu_r = L[j + 1, i]
                ll_r = L[j + 1, i + s]
                ru = R[j, i]
                rl = R[j, i + s]
                R[j + 1, i] = _boxplus(ru, ll_r + rl, T, minsum, alpha)
                R[j + 1, i + s] = _clip(_boxplus(ru, lu_r, T, minsum, alpha) + rl, T)
        for j in range(n - 1, -1, -1):
            s = seps[j]
            for i in range(N):
                if i & s:
                    continue
                lu_r = L[j + 1, i]
                ll_r = L[j + 1, i + s]
                ru = R[j, i]
                rl = R[j, i + s]
                L[j, i] = _boxplus(lu_r, ll_r + rl, T, minsum, alpha)
                L[j, i + s] = _clip(_boxplus(ru, lu_r, T, minsum, alpha) + ll_r, T)
        it += 1
        if g_stop:
            _hard_decide(L, R, frozen, u_hat, x_hat)
            if _g_check(u_hat, x_hat, work):
                return it
    _hard_decide(L, R, frozen, u_hat, x_hat)
    return it


def init_messages(llr_ch, code: PolarCode, clip: float = DEFAULT_CLIP) -> MessageMemory:
    llr_ch = np.asarray(llr_ch, dtype=np.float64)
    if llr_ch.shape != (code.N,):
        raise ValueError(f"expected {code.N} channel LLRs, got shape {llr_ch.shape}")
    L = np.zeros((code.n + 1, code.N))
    R = np.zeros((code.n + 1, code.N))
    L[code.n] = np.clip(llr_ch, -clip, clip)
    R[0, code.frozen_mask] = clip
    return MessageMemory(L, R, float(clip))


def bp_decode(llr_ch, code: PolarCode, perm: Optional[StagePermutation] = None, max_iters: int = 200,
              stop: str = "g_matrix", clip: float = DEFAULT_CLIP, cn: str = "exact",
              alpha: float = DEFAULT_ALPHA, memory: Optional[MessageMemory] = None) -> DecodeCandidate:
    """Flooding BP on one factor graph realization.

    One iteration is a left-to-right sweep over stages 1..n followed by a
    right-to-left sweep over n..1. The stopping condition is evaluated after
    each full iteration. ``memory``, if given, receives the final messages.
    """
    if stop not in STOP_MODES:
        raise ValueError(f"unknown stopping condition {stop!r}")
    if cn not in CN_MODES:
        raise ValueError(f"unknown check-node mode {cn!r}")
    if max_iters < 0:
        raise ValueError("max_iters must be >= 0")
    perm = perm or StagePermutation.identity(code.n)
    if perm.n != code.n:
        raise ValueError(f"permutation has {perm.n} stages, code has {code.n}")
    if stop == "crc" and code.crc is None:
        raise ValueError("CRC stopping needs a code with a CRC")

    mem = init_messages(llr_ch, code, clip)
    seps = np.array(perm.s, dtype=np.int64)
    frozen = np.ascontiguousarray(code.frozen_mask)
    u_hat = np.zeros(code.N, dtype=np.uint8)
    x_hat = np.zeros(code.N, dtype=np.uint8)
    work = np.zeros(code.N, dtype=np.uint8)
    args = (float(clip), cn == "minsum", float(alpha), u_hat, x_hat, work)

    if stop == "crc":
        iters = 0
        _bp_iterate(mem.L, mem.R, frozen, seps, 0, False, *args)
        while iters < max_iters:
            iters += _bp_iterate(mem.L, mem.R, frozen, seps, 1, False, *args)
            if crc_check(u_hat[code.info_index], code.crc):
                break
    else:
        iters = _bp_iterate(mem.L, mem.R, frozen, seps, max_iters, stop == "g_matrix", *args)

    if memory is not None:
        memory.L, memory.R, memory.clip = mem.L, mem.R, mem.clip
    valid = g_matrix_check(u_hat, x_hat)
    return DecodeCandidate(u_hat, x_hat, valid, int(iters), int(iters) * code.N * code.n)


def pe_updates_per_iteration(code: PolarCode) -> int:
    return 2 * (code.N // 2) * code.n
