"""Polar code parameters, constructions and the butterfly encoder.

Indexing is natural (no bit reversal): bit ``j - 1`` of a row index selects
the branch taken at stage ``j``, and ``x = u @ F^{(x)n} mod 2`` with
``F = [[1, 0], [1, 1]]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from polarium.crc import CrcConfig

CONSTRUCTIONS = ("bhattacharyya", "rm_polar")


def log2_exact(N: int) -> int:
    n = int(N).bit_length() - 1
    if N < 2 or (1 << n) != N:
        raise ValueError(f"block length must be a power of two >= 2, got {N}")
    return n


@dataclass(frozen=True)
class PolarCode:
    N: int
    k: int
    info_set: tuple
    construction: str = "bhattacharyya"
    design_eps: float = 0.5
    d: Optional[int] = None
    crc: Optional[CrcConfig] = field(default=None)

    def __post_init__(self):
        log2_exact(self.N)
        info = tuple(sorted(int(i) for i in self.info_set))
        object.__setattr__(self, "info_set", info)
        if not 0 <= self.k <= self.N:
            raise ValueError(f"k={self.k} outside [0, {self.N}]")
        if len(info) != self.k or len(set(info)) != self.k:
            raise ValueError("info_set must hold exactly k distinct indices")
        if info and (info[0] < 0 or info[-1] >= self.N):
            raise ValueError("info_set index out of range")
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")
        if self.crc is not None and self.crc.width > self.k:
            raise ValueError("CRC wider than the information set")

    @property
    def n(self) -> int:
        return self.N.bit_length() - 1

    @property
    def rate(self) -> float:
        return self.k / self.N

    @property
    def data_bits(self) -> int:
        """Payload bits excluding the CRC."""
        return self.k - (self.crc.width if self.crc else 0)

    @cached_property
    def info_index(self) -> np.ndarray:
        return np.array(self.info_set, dtype=np.int64)

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=np.bool_)
        mask[self.info_index] = False
        mask.flags.writeable = False
        return mask

    @property
    def frozen_set(self) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.frozen_mask))

    def label(self) -> str:
        tag = self.construction
        if self.construction == "rm_polar":
            tag += f"(d={self.d})"
        if self.crc is not None:
            tag += f"+crc{self.crc.width}"
        return tag

    def with_crc(self, crc: Optional[CrcConfig]) -> "PolarCode":
        return PolarCode(self.N, self.k, self.info_set, self.construction, self.design_eps, self.d, crc)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "k": self.k,
            "construction": self.construction,
            "design_eps": self.design_eps,
            "d": self.d,
            "info_set": list(self.info_set),
            "crc": self.crc.to_dict() if self.crc else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "PolarCode":
        crc = CrcConfig.from_dict(d["crc"]) if d.get("crc") else None
        dd = d.get("d")
        return cls(
            N=int(d["N"]),
            k=int(d["k"]),
            info_set=tuple(d["info_set"]),
            construction=d.get("construction", "bhattacharyya"),
            design_eps=float(d.get("design_eps", 0.5)),
            d=None if dd is None else int(dd),
            crc=crc,
        )

    @classmethod
    def from_json(cls, text: str) -> "PolarCode":
        return cls.from_dict(json.loads(text))


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def str_to_bits(text: str) -> np.ndarray:
    text = text.strip()
    if any(c not in "01" for c in text):
        raise ValueError(f"not a 0/1 string: {text!r}")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


# -- encoding ----------------------------------------------------------------

def polar_transform(u, separations: Optional[Sequence[int]] = None) -> np.ndarray:
    """Apply F^{(x)n} over GF(2) to the last axis of ``u`` (batch friendly).

    ``separations`` gives the butterfly stages in application order
    (default 1, 2, 4, ...); any order of the n distinct powers of two
    yields the same result.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    n = log2_exact(N)
    if separations is None:
        separations = [1 << j for j in range(n)]
    elif sorted(separations) != [1 << j for j in range(n)]:
        raise ValueError(f"separations must be the powers of two below {N}")
    lead = x.shape[:-1]
    for s in separations:
        v = x.reshape(*lead, N // (2 * s), 2, s)
        v[..., 0, :] ^= v[..., 1, :]
    return x


def _check_len(bits, length: int, what: str) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] != length:
        raise ValueError(f"{what} must have length {length}, got {bits.shape[-1]}")
    return bits


def encode(u, code: PolarCode) -> np.ndarray:
    u = _check_len(u, code.N, "u")
    if np.any(u[..., code.frozen_mask]):
        raise ValueError("frozen positions of u must be zero")
    return polar_transform(u)


def assemble_u(payload, code: PolarCode) -> np.ndarray:
    payload = _check_len(payload, code.k, "payload")
    u = np.zeros(payload.shape[:-1] + (code.N,), dtype=np.uint8)
    u[..., code.info_index] = payload
    return u


def extract_info(u, code: PolarCode) -> np.ndarray:
    u = _check_len(u, code.N, "u")
    return u[..., code.info_index].copy()


def g_matrix_check(u_hat, x_hat, code: Optional[PolarCode] = None) -> bool:
    """True iff ``x_hat == u_hat . G`` with frozen positions of ``u_hat`` forced to 0."""
    u_hat = np.asarray(u_hat, dtype=np.uint8)
    x_hat = np.asarray(x_hat, dtype=np.uint8)
    if u_hat.shape != x_hat.shape:
        raise ValueError("u_hat and x_hat lengths differ")
    if code is not None:
        _check_len(u_hat, code.N, "u_hat")
        u_hat = np.where(code.frozen_mask, 0, u_hat).astype(np.uint8)
    return bool(np.array_equal(polar_transform(u_hat), x_hat))


# -- construction ------------------------------------------------------------

def bhattacharyya_parameters(n: int, eps: float = 0.5) -> np.ndarray:
    """BEC Z-parameters of all 2**n synthesized channels.

    The most significant index bit picks the branch at the first split;
    a 0 bit takes the degraded branch ``2z - z**2``, a 1 bit the upgraded ``z**2``.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"design erasure probability must lie in (0, 1), got {eps}")
    if n < 0:
        raise ValueError("n must be non-negative")
    z = np.array([eps], dtype=np.float64)
    for _ in range(n):
        nxt = np.empty(2 * z.size)
        nxt[0::2] = 2.0 * z - z * z
        nxt[1::2] = z * z
        z = nxt
    return z


def _most_reliable(z: np.ndarray, candidates: np.ndarray, k: int) -> tuple:
    # smallest Z first; equal Z -> higher index first
    order = np.lexsort((-candidates, z[candidates]))
    return tuple(sorted(int(i) for i in candidates[order[:k]]))


def construct_bhattacharyya(N: int, k: int, eps: float = 0.5, crc: Optional[CrcConfig] = None) -> PolarCode:
    n = log2_exact(N)
    if not 0 <= k <= N:
        raise ValueError(f"k={k} outside [0, {N}]")
    z = bhattacharyya_parameters(n, eps)
    info = _most_reliable(z, np.arange(N), k)
    return PolarCode(N, k, info, "bhattacharyya", eps, None, crc)


def row_weight(i: int, n: int) -> int:
    """Hamming weight of row ``i`` of F^{(x)n}: ``2 ** popcount(i)``."""
    if not 0 <= i < (1 << n):
        raise ValueError(f"row {i} outside [0, {1 << n})")
    return 1 << bin(i).count("1")


def row_weights(n: int) -> np.ndarray:
    return np.array([row_weight(i, n) for i in range(1 << n)], dtype=np.int64)


def construct_rm_polar(N: int, k: int, d: int, eps: float = 0.5, crc: Optional[CrcConfig] = None) -> PolarCode:
    """Freeze every row of weight <= d, then take the k most reliable survivors."""
    n = log2_exact(N)
    if not 0 <= k <= N:
        raise ValueError(f"k={k} outside [0, {N}]")
    survivors = np.flatnonzero(row_weights(n) > d)
    if survivors.size < k:
        raise ValueError(
            f"RM-polar construction infeasible: only {survivors.size} rows have weight > {d} "
            f"(maximum feasible k is {survivors.size})"
        )
    z = bhattacharyya_parameters(n, eps)
    info = _most_reliable(z, survivors, k)
    return PolarCode(N, k, info, "rm_polar", eps, int(d), crc)


def construct(N: int, k: int, method: str = "bhattacharyya", eps: float = 0.5,
              d: Optional[int] = None, crc: Optional[CrcConfig] = None) -> PolarCode:
    method = method.replace("-", "_")
    if method == "bhattacharyya":
        return construct_bhattacharyya(N, k, eps, crc)
    if method == "rm_polar":
        if d is None:
            raise ValueError("rm_polar construction needs a weight threshold d")
        return construct_rm_polar(N, k, d, eps, crc)
    raise ValueError(f"unknown construction method {method!r}")

