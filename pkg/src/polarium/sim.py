"""Monte-Carlo BER/BLER simulation with order-independent per-frame seeding."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from polarium.bp import DEFAULT_ALPHA, DEFAULT_CLIP, StagePermutation, bp_decode
from polarium.bpl import BplConfig, bpl_decode, select_permutations
from polarium.channel import awgn, bpsk_modulate, frame_streams, llr_from_channel, sigma_from_ebn0
from polarium.crc import CRC16, crc_append
from polarium.polar import PolarCode, assemble_u, encode
from polarium.sc import sc_decode, scl_decode

log = logging.getLogger(__name__)

DECODERS = ("sc", "scl", "scl-crc", "bp", "bpl")
CSV_COLUMNS = ("decoder", "N", "k", "construction", "list", "iters_max", "ebn0_db", "frames",
               "bit_errors", "block_errors", "ber", "bler", "avg_iters", "pe_updates",
               "valid_fraction")
THREADS_ENV = "POLARIUM_THREADS"


@dataclass(frozen=True)
class DecoderSpec:
    name: str
    list_size: int = 8
    iters: int = 200
    clip: float = DEFAULT_CLIP
    cn: str = "exact"
    alpha: float = DEFAULT_ALPHA
    perm_seed: int = 0
    perm: Optional[str] = None  # stage order for plain BP, e.g. "3,2,1"
    metric: str = "exact"

    def __post_init__(self):
        if self.name not in DECODERS:
            raise ValueError(f"unknown decoder {self.name!r}; choose from {', '.join(DECODERS)}")
        if self.list_size < 1:
            raise ValueError("list size must be >= 1")
        if self.iters < 0:
            raise ValueError("iteration budget must be >= 0")

    @property
    def effective_list(self) -> int:
        return 1 if self.name in ("sc", "bp") else self.list_size

    @property
    def is_iterative(self) -> bool:
        return self.name in ("bp", "bpl")


@dataclass
class FrameDecode:
    u_hat: np.ndarray
    iterations: int = 0
    pe_updates: int = 0
    valid: bool = True
    selected: int = 0


def code_for_decoder(code: PolarCode, spec: DecoderSpec) -> PolarCode:
    """CRC-aided SCL needs a CRC inside the information set; attach CRC-16 if absent."""
    if spec.name == "scl-crc" and code.crc is None:
        return code.with_crc(CRC16)
    return code


def make_decoder(spec: DecoderSpec, code: PolarCode) -> Callable[[np.ndarray, np.ndarray], FrameDecode]:
    """Returns ``decode(y, llr) -> FrameDecode`` for one code."""
    if spec.name == "sc":
        def decode(y, llr):
            u, _ = sc_decode(llr, code)
            return FrameDecode(u, 0, code.N * code.n)
    elif spec.name in ("scl", "scl-crc"):
        use_crc = spec.name == "scl-crc"
        if use_crc and code.crc is None:
            raise ValueError("scl-crc needs a code with a CRC")

        def decode(y, llr):
            r = scl_decode(llr, code, spec.list_size, use_crc, spec.metric)
            return FrameDecode(r.u_hat, 0, r.visits, True if r.crc_passed is None else r.crc_passed)
    elif spec.name == "bp":
        perm = StagePermutation.parse(spec.perm) if spec.perm else StagePermutation.identity(code.n)

        def decode(y, llr):
            c = bp_decode(llr, code, perm, spec.iters, "g_matrix", spec.clip, spec.cn, spec.alpha)
            return FrameDecode(c.u_hat, c.iterations, c.pe_updates, c.valid)
    else:
        cfg = BplConfig(spec.list_size, spec.iters, spec.perm_seed, spec.clip, spec.cn, spec.alpha)
        perms = select_permutations(code.n, spec.list_size, spec.perm_seed)

        def decode(y, llr):
            r = bpl_decode(y, llr, code, cfg, perms)
            return FrameDecode(r.u_hat, r.iterations, r.pe_updates, r.any_valid, r.selected_index)
    return decode


@dataclass(frozen=True)
class FrameOutcome:
    bit_errors: int
    block_error: bool
    iterations: int
    pe_updates: int
    valid: bool


def simulate_frame(code: PolarCode, decode, ebn0_db: float, snr_index: int, frame_index: int,
                   master_seed: int, all_zero: bool = False, clip: float = DEFAULT_CLIP) -> FrameOutcome:
    """Transmit and decode one frame; errors are counted over the k payload positions."""
    payload_rng, noise_rng = frame_streams(master_seed, snr_index, frame_index)
    if all_zero:
        data = np.zeros(code.data_bits, dtype=np.uint8)
    else:
        data = payload_rng.integers(0, 2, code.data_bits, dtype=np.uint8)
    payload = crc_append(data, code.crc) if code.crc is not None else data
    x = encode(assemble_u(payload, code), code)
    sigma = sigma_from_ebn0(ebn0_db, code.rate)
    y = awgn(bpsk_modulate(x), sigma, noise_rng)
    llr = llr_from_channel(y, sigma, clip)
    out = decode(y, llr)
    errs = int(np.count_nonzero(out.u_hat[code.info_index] != payload))
    return FrameOutcome(errs, errs > 0, out.iterations, out.pe_updates, bool(out.valid))


def run_frames(code: PolarCode, spec: DecoderSpec, ebn0_db: float, frame_indices: Sequence[int],
               master_seed: int, snr_index: int = 0, all_zero: bool = False) -> list:
    code = code_for_decoder(code, spec)
    decode = make_decoder(spec, code)
    return [simulate_frame(code, decode, ebn0_db, snr_index, int(f), master_seed, all_zero, spec.clip)
            for f in frame_indices]


@dataclass
class SimStats:
    ebn0_db: float
    k: int
    frames: int = 0
    bit_errors: int = 0
    block_errors: int = 0
    total_iterations: int = 0
    total_pe_updates: int = 0
    valid_frames: int = 0
    list_size: int = 1
    completed: bool = False

    def add(self, o: FrameOutcome):
        self.frames += 1
        self.bit_errors += o.bit_errors
        self.block_errors += int(o.block_error)
        self.total_iterations += o.iterations
        self.total_pe_updates += o.pe_updates
        self.valid_frames += int(o.valid)

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.k) if self.frames and self.k else 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.frames if self.frames else 0.0

    @property
    def avg_iterations(self) -> float:
        """Mean BP iterations per decoder instance (L instances per BPL frame)."""
        return self.total_iterations / (self.frames * self.list_size) if self.frames else 0.0

    @property
    def avg_pe_updates(self) -> float:
        return self.total_pe_updates / self.frames if self.frames else 0.0

    @property
    def valid_fraction(self) -> float:
        return self.valid_frames / self.frames if self.frames else 0.0


def default_workers() -> int:
    """Worker-pool size: ``POLARIUM_THREADS`` if set, else the CPU count."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        if workers < 1:
            raise ValueError(f"{THREADS_ENV} must be >= 1")
        return workers
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    code: PolarCode
    decoder: DecoderSpec
    ebn0_db: tuple
    max_frames: int = 1_000_000
    min_block_errors: int = 100
    master_seed: int = 0
    all_zero: bool = False
    workers: Optional[int] = None
    chunk: int = 32

    def __post_init__(self):
        if self.max_frames < 1:
            raise ValueError("max_frames must be >= 1")
        if self.min_block_errors < 1:
            raise ValueError("min_block_errors must be >= 1")
        if not self.ebn0_db:
            raise ValueError("empty Eb/N0 sweep")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")


def parse_sweep(text: str) -> tuple:
    """``"start:step:stop"`` (inclusive, dB) or a single value."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"bad Eb/N0 sweep {text!r}; expected start:step:stop") from None
    if len(vals) == 1:
        return (vals[0],)
    if len(vals) != 3:
        raise ValueError(f"bad Eb/N0 sweep {text!r}; expected start:step:stop")
    start, step, stop = vals
    if step <= 0:
        raise ValueError("sweep step must be > 0")
    if stop < start:
        raise ValueError("sweep stop must be >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


def _run_point(cfg: SimConfig, code: PolarCode, decode, snr_index: int, ebn0: float,
               executor: Optional[ThreadPoolExecutor]) -> SimStats:
    stats = SimStats(ebn0, code.k, list_size=cfg.decoder.effective_list)

    def chunk_job(bounds):
        lo, hi = bounds
        return [simulate_frame(code, decode, ebn0, snr_index, f, cfg.master_seed, cfg.all_zero,
                               cfg.decoder.clip) for f in range(lo, hi)]

    nxt = 0
    wave = cfg.chunk
    while True:
        hi = min(nxt + wave, cfg.max_frames)
        bounds = [(lo, min(lo + cfg.chunk, hi)) for lo in range(nxt, hi, cfg.chunk)]
        results = executor.map(chunk_job, bounds) if executor else map(chunk_job, bounds)
        # consume strictly in frame order; frames past the stopping point are discarded
        for outcomes in results:
            for o in outcomes:
                stats.add(o)
                if stats.block_errors >= cfg.min_block_errors or stats.frames >= cfg.max_frames:
                    stats.completed = True
                    return stats
        nxt = hi
        wave = min(wave * 2, cfg.chunk * 64)


def run_simulation(cfg: SimConfig, progress: Optional[Callable[[SimStats], None]] = None,
                   until: Optional[Callable[[SimStats], bool]] = None) -> list:
    """Sweep the configured Eb/N0 points; ``until(stats)`` returning True ends the sweep early."""
    code = code_for_decoder(cfg.code, cfg.decoder)
    decode = make_decoder(cfg.decoder, code)
    workers = cfg.workers or default_workers()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    out = []
    try:
        for idx, ebn0 in enumerate(cfg.ebn0_db):
            st = _run_point(cfg, code, decode, idx, float(ebn0), executor)
            log.info("%s Eb/N0=%.3f dB frames=%d block_errors=%d bler=%.3e ber=%.3e",
                     cfg.decoder.name, ebn0, st.frames, st.block_errors, st.bler, st.ber)
            if progress:
                progress(st)
            out.append(st)
            if until is not None and until(st):
                break
    finally:
        if executor:
            executor.shutdown()
    return out


def csv_rows(cfg: SimConfig, stats: Sequence[SimStats]) -> list:
    code = code_for_decoder(cfg.code, cfg.decoder)
    spec = cfg.decoder
    rows = []
    for st in stats:
        rows.append({
            "decoder": spec.name,
            "N": code.N,
            "k": code.k,
            "construction": code.label(),
            "list": spec.effective_list,
            "iters_max": spec.iters if spec.is_iterative else 0,
            "ebn0_db": f"{st.ebn0_db:g}",
            "frames": st.frames,
            "bit_errors": st.bit_errors,
            "block_errors": st.block_errors,
            "ber": f"{st.ber:.6e}",
            "bler": f"{st.bler:.6e}",
            "avg_iters": f"{st.avg_iterations:.4f}",
            "pe_updates": st.total_pe_updates,
            "valid_fraction": f"{st.valid_fraction:.6f}",
        })
    return rows


def format_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
