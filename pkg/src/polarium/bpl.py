"""Belief propagation list decoding: L BP decoders on distinct stage orders."""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from polarium.bp import (DEFAULT_ALPHA, DEFAULT_CLIP, DecodeCandidate, StagePermutation,
                         bp_decode)
from polarium.polar import PolarCode, polar_transform


@dataclass(frozen=True)
class BplConfig:
    list_size: int = 8
    max_iters: int = 200
    permutation_seed: int = 0
    clip: float = DEFAULT_CLIP
    cn: str = "exact"
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.list_size < 1:
            raise ValueError("list size must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass
class BplResult:
    x_hat: np.ndarray
    u_hat: np.ndarray
    selected_index: int
    any_valid: bool
    candidates: list
    distances: np.ndarray
    permutations: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return sum(c.iterations for c in self.candidates)

    @property
    def pe_updates(self) -> int:
        return sum(c.pe_updates for c in self.candidates)


def cyclic_shifts(n: int) -> list:
    base = list(range(1, n + 1))
    return [tuple(base[r:] + base[:r]) for r in range(n)]


def select_permutations(n: int, L: int, seed: int = 0) -> list:
    """Identity first, then its left-cyclic shifts, then seeded random fill.

    The random fill draws ``Generator(PCG64(seed)).permutation(n)`` repeatedly
    and keeps the first draws not already in the list.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= L <= math.factorial(n):
        raise ValueError(f"list size {L} outside [1, {n}!]")
    perms = cyclic_shifts(n)[:L]
    seen = set(perms)
    rng = np.random.Generator(np.random.PCG64(seed))
    while len(perms) < L:
        p = tuple(int(v) + 1 for v in rng.permutation(n))
        if p not in seen:
            seen.add(p)
            perms.append(p)
    return [StagePermutation(p) for p in perms]


def bpsk(x) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def euclidean_distances(y, codewords) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    diff = y[None, :] - bpsk(np.atleast_2d(codewords))
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def euclidean_select(y, codewords) -> tuple:
    """Index and distance of the codeword closest to ``y``; ties go to the lowest index."""
    codewords = np.atleast_2d(np.asarray(codewords))
    if codewords.shape[0] == 0 or codewords.size == 0:
        raise ValueError("empty candidate set")
    dist = euclidean_distances(y, codewords)
    idx = int(np.argmin(dist))
    return idx, float(dist[idx])


def bpl_decode(y, llr_ch, code: PolarCode, cfg: BplConfig = BplConfig(),
               permutations: Optional[list] = None, executor: Optional[Executor] = None) -> BplResult:
    """Decode on every permutation and pick the closest valid codeword.

    When no decoder satisfies the G-matrix check, every u_hat is re-encoded
    and the closest of those codewords is returned with ``any_valid=False``.
    ``y`` only enters through Euclidean distances, so any positive multiple
    of the channel output (e.g. the LLRs) selects identically.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (code.N,):
        raise ValueError(f"expected {code.N} channel outputs, got shape {y.shape}")
    if permutations is None:
        permutations = select_permutations(code.n, cfg.list_size, cfg.permutation_seed)

    def run(perm):
        return bp_decode(llr_ch, code, perm, cfg.max_iters, "g_matrix", cfg.clip, cfg.cn, cfg.alpha)

    if executor is None:
        candidates: list[DecodeCandidate] = [run(p) for p in permutations]
    else:
        candidates = list(executor.map(run, permutations))

    codewords = polar_transform(np.stack([c.u_hat for c in candidates]))
    distances = euclidean_distances(y, codewords)
    valid = np.array([c.valid for c in candidates])
    any_valid = bool(valid.any())
    pool = np.flatnonzero(valid) if any_valid else np.arange(len(candidates))
    best = int(pool[np.argmin(distances[pool])])
    chosen = candidates[best]
    return BplResult(codewords[best], chosen.u_hat, best, any_valid, candidates, distances,
                     list(permutations))
