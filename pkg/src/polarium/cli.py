"""Command-line front end: construct, encode, decode, simulate, plot.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from polarium.bp import CN_MODES, DEFAULT_ALPHA, DEFAULT_CLIP, StagePermutation
from polarium.crc import CRC16, crc_append
from polarium.polar import (PolarCode, assemble_u, bhattacharyya_parameters, bits_to_str, construct,
                            encode, str_to_bits)
from polarium.plot import plot_csv
from polarium.sim import (DECODERS, DecoderSpec, SimConfig, code_for_decoder, csv_rows, format_csv,
                          make_decoder, parse_sweep, run_simulation)

log = logging.getLogger("polarium")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_code_args(p):
    g = p.add_argument_group("code")
    g.add_argument("--code", type=Path, help="PolarCode JSON written by `construct`")
    g.add_argument("--N", type=int, help="block length (power of two)")
    g.add_argument("--k", type=int, help="information bits (including CRC bits, if any)")
    g.add_argument("--method", default="bhattacharyya", choices=("bhattacharyya", "rm-polar"))
    g.add_argument("--design-eps", type=float, default=0.5, help="BEC design erasure probability")
    g.add_argument("--d", type=int, help="row-weight threshold for rm-polar")
    g.add_argument("--crc", type=int, default=0, choices=(0, 16), help="attach a CRC-16 (poly 0x1021)")


def _add_decoder_args(p, multi=False):
    g = p.add_argument_group("decoder")
    g.add_argument("--decoder", default="bpl",
                   help=("comma-separated subset of " if multi else "one of ") + ", ".join(DECODERS))
    g.add_argument("--list", type=int, default=8, help="list size (scl, scl-crc, bpl)")
    g.add_argument("--iters", type=int, default=200, help="max BP iterations per decoder")
    g.add_argument("--clip", type=float, default=DEFAULT_CLIP, help="LLR saturation magnitude")
    g.add_argument("--cn", default="exact", choices=CN_MODES, help="check-node rule")
    g.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="min-sum scaling")
    g.add_argument("--perm", help="stage order for plain bp, e.g. 3,2,1")
    g.add_argument("--perm-seed", type=int, default=0, help="seed for BPL permutations beyond the cyclic shifts")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="polarium", description="Polar codes with BP list decoding")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="build a code and write its JSON")
    _add_code_args(p)
    p.add_argument("--show-z", action="store_true", help="also print Z-values and the information set")
    p.add_argument("--out", type=Path)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("encode", help="encode payload bit strings")
    _add_code_args(p)
    p.add_argument("--payload", action="append", default=[], help="payload as a 0/1 string (repeatable)")
    p.add_argument("--in", dest="inp", type=Path, help="file with one payload per line")
    p.add_argument("--out", type=Path)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("decode", help="decode LLR vectors, one per line")
    _add_code_args(p)
    _add_decoder_args(p)
    p.add_argument("--in", dest="inp", type=Path, required=True, help="whitespace-separated LLRs per line")
    p.add_argument("--out", type=Path)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("simulate", help="Monte-Carlo BER/BLER sweep to CSV")
    _add_code_args(p)
    _add_decoder_args(p, multi=True)
    p.add_argument("--ebn0", default="1:0.5:3", help="start:step:stop in dB")
    p.add_argument("--min-block-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--all-zero", action="store_true", help="transmit the all-zero payload")
    p.add_argument("--out", type=Path)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("plot", help="SVG plot of simulation CSVs")
    p.add_argument("csv", nargs="+", type=Path)
    p.add_argument("--metric", default="bler,ber", help="comma-separated: bler, ber")
    p.add_argument("--title", default="")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--force", action="store_true")
    return ap


def load_code(args) -> PolarCode:
    if args.code is not None:
        try:
            return PolarCode.from_json(args.code.read_text())
        except OSError as e:
            raise RuntimeError(f"cannot read code file: {e}") from None
        except (ValueError, KeyError, TypeError) as e:
            raise RuntimeError(f"invalid code file {args.code}: {e}") from None
    if args.N is None or args.k is None:
        raise UsageError("give either --code FILE or both --N and --k")
    try:
        return construct(args.N, args.k, args.method, args.design_eps, args.d,
                         CRC16 if args.crc else None)
    except ValueError as e:
        raise UsageError(str(e)) from None


def decoder_spec(args, name: str) -> DecoderSpec:
    try:
        if args.perm:
            StagePermutation.parse(args.perm)
        return DecoderSpec(name, args.list, args.iters, args.clip, args.cn, args.alpha, args.perm_seed,
                           args.perm)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _write(path, text: str, force: bool):
    if path is None:
        sys.stdout.write(text)
        return
    if path.exists() and not force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    path.write_text(text)


def cmd_construct(args) -> int:
    code = load_code(args)
    text = json.dumps(code.to_dict(), indent=2) + "\n"
    _write(args.out, text, args.force)
    if args.show_z:
        z = bhattacharyya_parameters(code.n, code.design_eps)
        print("Z:", " ".join(f"{v:.6g}" for v in z), file=sys.stderr)
        print("A:", " ".join(str(i) for i in code.info_set), file=sys.stderr)
    return 0


def _lines(path: Path) -> list:
    try:
        return path.read_text().splitlines()
    except OSError as e:
        raise RuntimeError(f"cannot read {path}: {e}") from None


def cmd_encode(args) -> int:
    code = load_code(args)
    payloads = list(args.payload)
    if args.inp:
        payloads += [ln for ln in _lines(args.inp) if ln.strip()]
    if not payloads:
        raise UsageError("nothing to encode; give --payload or --in")
    out = []
    for lineno, text in enumerate(payloads, 1):
        try:
            data = str_to_bits(text)
            if data.size != code.data_bits:
                raise ValueError(f"expected {code.data_bits} bits, got {data.size}")
        except ValueError as e:
            raise RuntimeError(f"payload {lineno}: {e}") from None
        payload = crc_append(data, code.crc) if code.crc else data
        out.append(bits_to_str(encode(assemble_u(payload, code), code)))
    _write(args.out, "\n".join(out) + "\n", args.force)
    return 0


def cmd_decode(args) -> int:
    code = load_code(args)
    if "," in args.decoder:
        raise UsageError("decode takes a single --decoder")
    spec = decoder_spec(args, args.decoder)
    code = code_for_decoder(code, spec)
    try:
        decode = make_decoder(spec, code)
    except ValueError as e:
        raise UsageError(str(e)) from None
    records = []
    for lineno, text in enumerate(_lines(args.inp), 1):
        if not text.strip():
            continue
        try:
            llr = np.array([float(t) for t in text.split()])
        except ValueError:
            raise RuntimeError(f"line {lineno}: not a list of decimal numbers") from None
        if llr.size != code.N or not np.all(np.isfinite(llr)):
            raise RuntimeError(f"line {lineno}: expected {code.N} finite LLRs, got {llr.size} values")
        # Euclidean selection only needs a positive multiple of y, so the LLRs stand in for it
        res = decode(llr, llr)
        codeword = encode(res.u_hat, code)
        rec = {
            "line": lineno,
            "payload": bits_to_str(res.u_hat[code.info_index][:code.data_bits]),
            "u_hat": bits_to_str(res.u_hat),
            "x_hat": bits_to_str(codeword),
            "valid": bool(res.valid),
            "selected": int(res.selected),
        }
        records.append(json.dumps(rec))
    _write(args.out, "\n".join(records) + ("\n" if records else ""), args.force)
    return 0


def cmd_simulate(args) -> int:
    code = load_code(args)
    names = [s.strip() for s in args.decoder.split(",") if s.strip()]
    specs = [decoder_spec(args, name) for name in names]
    try:
        sweep = parse_sweep(args.ebn0)
        cfgs = [SimConfig(code, spec, sweep, args.max_frames, args.min_block_errors, args.seed, args.all_zero)
                for spec in specs]
        for cfg in cfgs:
            make_decoder(cfg.decoder, code_for_decoder(code, cfg.decoder))
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.out is not None and args.out.exists() and not args.force:
        raise UsageError(f"{args.out} exists; pass --force to overwrite")
    rows = []
    completed = True
    for cfg in cfgs:
        stats = run_simulation(cfg)
        completed &= all(st.completed for st in stats)
        rows += csv_rows(cfg, stats)
    _write(args.out, format_csv(rows), True)
    return 0 if completed else 2


def cmd_plot(args) -> int:
    metrics = [m.strip() for m in args.metric.split(",") if m.strip()]
    if any(m not in ("ber", "bler") for m in metrics) or not metrics:
        raise UsageError("--metric takes bler and/or ber")
    if args.out.exists() and not args.force:
        raise UsageError(f"{args.out} exists; pass --force to overwrite")
    for p in args.csv:
        if not p.exists():
            raise RuntimeError(f"no such file: {p}")
    plot_csv(args.csv, args.out, metrics, args.title)
    return 0


COMMANDS = {
    "construct": cmd_construct,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "simulate": cmd_simulate,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "simulate" else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"polarium: error: {e}", file=sys.stderr)
        return 1
    except (RuntimeError, ValueError, OSError) as e:
        print(f"polarium: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
