"""Command-line interface: ``jeep <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .analysis import detection_probability, kl_exact, lrt_statistics, sanov_bound
from .controlled_source import noisify
from .embedder import embed_pipeline
from .io import (
    FormatError,
    read_container,
    read_f32,
    read_pgm,
    write_container,
    write_f32,
    write_pgm,
    write_report,
)
from .jpeg import GeometryError, blockwise_idct, compress, decompress, quality_to_quant_table, to_pixels
from .side_info import DEFAULT_WET_THRESHOLD, extract_side_info
from .solver import InfeasiblePayload, SolverError, rates_to_costs
from .stego_model import ChangeRates, PixelMoments, stego_moments

log = logging.getLogger("jeep")

DEFAULT_PFAS = (0.01, 0.05)
LN2 = float(np.log(2.0))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _pfa_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid P_FA list {text!r}") from None
    if not values or any(not 0.0 < v < 1.0 for v in values):
        raise argparse.ArgumentTypeError("P_FA values must lie in (0, 1)")
    return values


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return value


def _add_embedding_args(p, with_seed: bool):
    p.add_argument("--qf", type=int, required=True, help="JPEG quality factor 1..100")
    p.add_argument("--alpha", type=float, required=True, help="payload in bits per nonzero AC coefficient")
    p.add_argument("--estimator", choices=("mipod", "const"), default="mipod")
    p.add_argument("--attacker", choices=("realistic", "omniscient"), default="realistic")
    p.add_argument("--const-var", type=float, default=1.0, help="pixel variance for --estimator const")
    p.add_argument("--wet-threshold", type=float, default=DEFAULT_WET_THRESHOLD)
    p.add_argument("--workers", type=int, default=1, help="sampling threads (output does not depend on it)")
    if with_seed:
        p.add_argument("--seed", type=_seed, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jeep", description="Side-informed JPEG embedding simulator and analysis tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compress", help="quantize a PGM image into a coefficient container")
    p.add_argument("--qf", type=int, required=True)
    p.add_argument("input")
    p.add_argument("output")

    p = sub.add_parser("embed", help="simulate embedding and write the stego container")
    _add_embedding_args(p, with_seed=True)
    p.add_argument("--pfa", type=_pfa_list, default=list(DEFAULT_PFAS), help="comma-separated false-alarm rates")
    p.add_argument("--report", required=True)
    p.add_argument("input")
    p.add_argument("output")

    p = sub.add_parser("rates", help="export change rates as costs for an external coder")
    _add_embedding_args(p, with_seed=False)
    p.add_argument("--out-costs", required=True, help="float32 array (2, H, W): costs of +1 and -1")
    p.add_argument("--out-rates", help="float32 array (2, H, W): beta+ and beta-")
    p.add_argument("input")

    p = sub.add_parser("analyze", help="detectability of a stego container against its cover")
    p.add_argument("--pfa", type=_pfa_list, default=list(DEFAULT_PFAS))
    p.add_argument("--var", required=True, help="float32 pixel variance field")
    p.add_argument("--rates", help="float32 (2, H, W) change rates; needs --precover")
    p.add_argument("--precover", help="precover PGM, the source of the side information for --rates")
    p.add_argument("--attacker", choices=("realistic", "omniscient"), default="omniscient")
    p.add_argument("--report", required=True)
    p.add_argument("cover")
    p.add_argument("stego")

    p = sub.add_parser("noisify", help="resample image noise with a known variance field")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--var-out", required=True)
    p.add_argument("input")
    p.add_argument("output")

    p = sub.add_parser("decompress", help="decompress a container into a rounded 8-bit PGM")
    p.add_argument("input")
    p.add_argument("output")
    return parser


def _args_record(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}


def _pd_list(pfas, delta, rho):
    return [{"pfa": f, "pd": float(detection_probability(f, delta, rho))} for f in pfas]


def cmd_compress(args):
    image = read_pgm(args.input, require_blocks=True)
    write_container(args.output, compress(image, quality_to_quant_table(args.qf)))
    print(args.output)


def _run_pipeline(args, seed):
    image = read_pgm(args.input, require_blocks=True)
    estimator = "constant" if args.estimator == "const" else "mipod"
    return embed_pipeline(
        image,
        args.qf,
        args.alpha,
        estimator=estimator,
        attacker=args.attacker,
        seed=seed,
        const_var=args.const_var,
        wet_threshold=args.wet_threshold,
        workers=args.workers,
    )


def cmd_embed(args):
    result, diag = _run_pipeline(args, args.seed)
    write_container(args.output, result.stego)
    kl = diag.kl_taylor_nats
    report = {
        "qf": args.qf,
        "alpha_bpnzac": args.alpha,
        "estimator": args.estimator,
        "attacker": args.attacker,
        "lambda": diag.lam,
        "kl_nats": kl,
        "kl_bits": kl / LN2,
        "kl_exact_nats": diag.kl_nats,
        "clamped_pixels": diag.clamped_pixels,
        "delta": diag.delta,
        "rho": diag.rho,
        "sanov_bound": sanov_bound(kl),
        "pd": _pd_list(args.pfa, diag.delta, diag.rho),
        "changes": {"plus": result.change_counts[0], "minus": result.change_counts[1]},
        "changes_per_mode": {"plus": diag.mode_plus.tolist(), "minus": diag.mode_minus.tolist()},
        "lemma1_violations": result.lemma1_violations,
        "realized_payload_bits": result.realized_payload,
        "nzac": diag.nzac,
        "seed": args.seed,
        "args": _args_record(args),
    }
    write_report(args.report, report)
    print(args.report)


def cmd_rates(args):
    _, diag = _run_pipeline(args, 0)
    rho_p, rho_m = rates_to_costs(diag.rates)
    semantics = "embedding costs ln((1-b+-b-)/b+-) of +1 and -1 changes; inf marks forbidden changes"
    write_f32(args.out_costs, np.stack([rho_p, rho_m]), semantics)
    if args.out_rates:
        write_f32(args.out_rates, np.stack([diag.rates.plus, diag.rates.minus]), "change rates beta+ and beta-")
    print(args.out_costs)


def cmd_analyze(args):
    cover = read_container(args.cover)
    stego = read_container(args.stego)
    if cover.shape != stego.shape or not np.array_equal(cover.quant.steps, stego.quant.steps):
        raise FormatError("cover and stego containers differ in geometry or quantization table")
    var = read_f32(args.var)
    if var.shape != cover.shape:
        raise FormatError(f"variance field shape {var.shape} does not match {cover.shape}")
    changes = stego.coeffs - cover.coeffs
    q = cover.steps_plane()
    u = None
    if args.precover:
        precover = read_pgm(args.precover, require_blocks=True)
        recovered, u = extract_side_info(precover, cover.quant)
        if not np.array_equal(recovered.coeffs, cover.coeffs):
            raise FormatError("precover does not compress to the cover container")
    if args.rates:
        if u is None:
            raise UsageError("--rates needs --precover for the side information")
        arr = read_f32(args.rates)
        if arr.shape != (2,) + cover.shape:
            raise FormatError(f"rates shape {arr.shape} does not match (2, {cover.shape[0]}, {cover.shape[1]})")
        b = ChangeRates(arr[0], arr[1])
        moments = stego_moments(b, u, cover.quant, var, with_mean=args.attacker == "omniscient")
        model = "rates"
    else:
        # realized changes as a known mean shift
        moments = PixelMoments(blockwise_idct(q * changes), var.copy())
        model = "realized"
    _, kl = kl_exact(var, moments)
    delta, rho = lrt_statistics(var, moments, form="derived")
    report = {
        "model": model,
        "attacker": args.attacker if model == "rates" else "omniscient",
        "delta": delta,
        "rho": rho,
        "kl_nats": kl,
        "kl_bits": kl / LN2,
        "sanov_bound": sanov_bound(kl),
        "pd": _pd_list(args.pfa, delta, rho),
        "changes": {"plus": int(np.count_nonzero(changes == 1)), "minus": int(np.count_nonzero(changes == -1))},
        "args": _args_record(args),
    }
    write_report(args.report, report)
    print(args.report)


def cmd_noisify(args):
    image = read_pgm(args.input, require_blocks=True)
    out, var = noisify(image, args.seed)
    write_pgm(args.output, out)
    write_f32(args.var_out, var, f"ground-truth pixel variance of {args.output}")
    print(args.output)


def cmd_decompress(args):
    write_pgm(args.output, to_pixels(decompress(read_container(args.input))))
    print(args.output)


COMMANDS = {
    "compress": cmd_compress,
    "embed": cmd_embed,
    "rates": cmd_rates,
    "analyze": cmd_analyze,
    "noisify": cmd_noisify,
    "decompress": cmd_decompress,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _fail("io", f"{exc.strerror}: {exc.filename}", 3)
    except GeometryError as exc:
        return _fail("geometry", str(exc), 4)
    except FormatError as exc:
        return _fail("format", str(exc), 4)
    except InfeasiblePayload as exc:
        return _fail("infeasible_payload", str(exc), 5)
    except SolverError as exc:
        return _fail("solver", str(exc), 6)
    except (ValueError, ArithmeticError) as exc:
        return _fail("invalid_input", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
