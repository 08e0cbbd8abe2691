"""BPSK over AWGN, channel LLRs and per-frame random streams."""

from __future__ import annotations

import math

import numpy as np

from polarium.bp import DEFAULT_CLIP


def sigma_from_ebn0(ebn0_db: float, rate: float) -> float:
    if rate <= 0:
        raise ValueError("code rate must be positive")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


def bpsk_modulate(x) -> np.ndarray:
    """0 -> +1.0, 1 -> -1.0."""
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def hard_slice(y) -> np.ndarray:
    return (np.asarray(y) < 0).astype(np.uint8)


def awgn(s, sigma: float, rng: np.random.Generator) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if sigma == 0:
        return s.copy()
    return s + sigma * rng.standard_normal(s.shape)


def llr_from_channel(y, sigma: float, clip: float = DEFAULT_CLIP) -> np.ndarray:
    """``2 y / sigma**2``; a noiseless channel gives saturated ``+-clip`` (0 stays 0)."""
    y = np.asarray(y, dtype=np.float64)
    if sigma == 0:
        return np.sign(y) * clip
    return 2.0 * y / (sigma * sigma)


def frame_streams(master_seed: int, snr_index: int, frame_index: int) -> tuple:
    """Independent (payload, noise) generators for one frame.

    Streams come from ``SeedSequence(master_seed, spawn_key=(snr_index,
    frame_index))`` so any frame can be regenerated without replaying the
    ones before it; the noise stream is PCG64 driving numpy's ziggurat
    ``standard_normal``.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(snr_index, frame_index))
    payload_ss, noise_ss = ss.spawn(2)
    return (np.random.Generator(np.random.PCG64(payload_ss)),
            np.random.Generator(np.random.PCG64(noise_ss)))
