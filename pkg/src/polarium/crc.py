"""Bitwise CRC over 0/1 vectors (MSB-first, non-reflected)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CrcConfig:
    width: int = 16
    poly: int = 0x1021
    init: int = 0xFFFF
    xorout: int = 0x0000

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("CRC width must be positive")
        mask = (1 << self.width) - 1
        for name in ("poly", "init", "xorout"):
            if not 0 <= getattr(self, name) <= mask:
                raise ValueError(f"CRC {name} does not fit in {self.width} bits")

    def to_dict(self) -> dict:
        return {"width": self.width, "poly": self.poly, "init": self.init, "xorout": self.xorout}

    @classmethod
    def from_dict(cls, d: dict) -> "CrcConfig":
        return cls(int(d["width"]), int(d["poly"]), int(d["init"]), int(d.get("xorout", 0)))


CRC16 = CrcConfig()


def crc_register(bits, cfg: CrcConfig = CRC16) -> int:
    """Feed ``bits`` through the shift register and return the final checksum."""
    top = 1 << (cfg.width - 1)
    mask = (1 << cfg.width) - 1
    reg = cfg.init
    for b in np.asarray(bits, dtype=np.uint8).tolist():
        fb = ((reg & top) != 0) ^ bool(b)
        reg = (reg << 1) & mask
        if fb:
            reg ^= cfg.poly
    return reg ^ cfg.xorout


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def crc_append(payload, cfg: CrcConfig = CRC16) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    return np.concatenate([payload, int_to_bits(crc_register(payload, cfg), cfg.width)])


def crc_check(word, cfg: CrcConfig = CRC16) -> bool:
    word = np.asarray(word, dtype=np.uint8)
    if word.size < cfg.width:
        raise ValueError(f"word of length {word.size} is shorter than the {cfg.width}-bit CRC")
    body, tail = word[: word.size - cfg.width], word[word.size - cfg.width:]
    return bool(np.array_equal(int_to_bits(crc_register(body, cfg), cfg.width), tail))
