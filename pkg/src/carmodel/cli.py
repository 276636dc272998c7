"""Command-line front end.

Subcommands: design (coefficient tables), run (WAV -> cochleagram),
analyze (impulse/frequency response CSVs), schedule (hardware timing
report), compare (float vs fixed parity). Every processing error prints a
single `error: ...` line on stderr and exits 1; usage problems exit 2.

A config file (--config) holds `key = value` lines whose keys are the long
option names with dashes replaced by underscores; explicit flags override
config values. The CARMODEL_LOG environment variable sets log verbosity
(debug, info, warning, error); it affects logging only, never the outputs.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, audio_io, fixed, schedule
from .core import CascadeState, process_block
from .design import (
    CascadeDesign,
    DesignParams,
    HPolicy,
    design_cascade,
    read_coeff_table,
    write_coeff_table,
)
from .errors import CarModelError, ConfigError

log = logging.getLogger("carmodel")

__all__ = ["cli_main", "main"]


def _parse_h_policy(text: str) -> HPolicy:
    t = text.strip()
    if t in ("proportional", "proportional_to_c0", "c0"):
        return HPolicy.proportional_to_c0()
    if t.startswith("fraction:"):
        return HPolicy.fraction_of_bound(float(t.split(":", 1)[1]))
    if t.startswith("explicit:"):
        return HPolicy.explicit(float(t.split(":", 1)[1]))
    raise ConfigError(
        f"bad h-policy {text!r}; use proportional, fraction:F, or explicit:V"
    )


def _load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    cfg = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = stripped.split("=", 1)
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _resolve(args: argparse.Namespace, table: dict[str, tuple]) -> None:
    """Fill None-valued args from the config file, then built-in defaults."""
    cfg = _load_config(getattr(args, "config", None))
    known = set(table)
    for key in cfg:
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
    for key, (conv, default) in table.items():
        if getattr(args, key, None) is None:
            raw = cfg.get(key)
            setattr(args, key, conv(raw) if raw is not None else default)


def _fixed_formats(args) -> tuple[fixed.FixedFormat, fixed.FixedFormat, fixed.FixedFormat]:
    return (
        fixed.FixedFormat(args.coeff_bits, args.coeff_frac),
        fixed.FixedFormat(args.state_bits, args.state_frac),
        fixed.FixedFormat(args.io_bits, args.io_frac),
    )


_FIXED_FORMAT_TABLE = {
    "coeff_bits": (int, 18),
    "coeff_frac": (int, 16),
    "state_bits": (int, 32),
    "state_frac": (int, 24),
    "io_bits": (int, 16),
    "io_frac": (int, 15),
}


def _add_fixed_format_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--coeff-bits", type=int)
    p.add_argument("--coeff-frac", type=int)
    p.add_argument("--state-bits", type=int)
    p.add_argument("--state-frac", type=int)
    p.add_argument("--io-bits", type=int)
    p.add_argument("--io-frac", type=int)


def _load_design_checked(coeffs_path: str, wav: audio_io.AudioBuffer | None) -> CascadeDesign:
    design = read_coeff_table(coeffs_path)
    if wav is not None:
        if abs(wav.sample_rate_hz - design.sample_rate_hz) > 1e-6 * design.sample_rate_hz:
            raise ConfigError(
                f"WAV sample rate {wav.sample_rate_hz} Hz differs from design rate "
                f"{design.sample_rate_hz:.6g} Hz; resampling is not performed"
            )
    return design


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_design(args) -> int:
    _resolve(args, {
        "fs": (float, 48000.0),
        "sections": (int, 1224),
        "x_base": (float, 1.0),
        "x_apex": (float, 0.023),
        "zeta": (float, 0.1),
        "h_policy": (str, "proportional"),
        "r": (float, None),
        "output": (str, "coeffs.csv"),
        **_FIXED_FORMAT_TABLE,
    })
    params = DesignParams(
        sample_rate_hz=args.fs,
        n_sections=args.sections,
        x_base=args.x_base,
        x_apex=args.x_apex,
        damping_zeta=args.zeta,
        h_policy=_parse_h_policy(args.h_policy),
        r_override=args.r,
    )
    design = design_cascade(params)
    write_coeff_table(design, args.output)
    print(
        f"designed {design.n_sections} sections, CF {design.sections[0].cf_hz:.1f} Hz "
        f"down to {design.sections[-1].cf_hz:.2f} Hz -> {args.output}"
    )
    if args.quantize:
        coeff_fmt, state_fmt, io_fmt = _fixed_formats(args)
        qd = fixed.quantize_design(design, coeff_fmt, state_fmt, io_fmt)
        fixed.write_quantized_table(qd, args.quantize)
        print(
            f"quantized coefficients ({coeff_fmt.total_bits}/{coeff_fmt.frac_bits}) "
            f"-> {args.quantize}"
        )
    return 0


def _cmd_run(args) -> int:
    _resolve(args, {
        "format": (str, "csv"),
        "mode": (str, "float"),
        "stats": (str, None),
        "quantized": (str, None),
        "clock_hz": (float, 142e6),
        "cycles_per_section": (int, 29),
        "max_arrays": (int, 12),
        **_FIXED_FORMAT_TABLE,
    })
    wav = audio_io.read_wav(args.wav)
    design = _load_design_checked(args.coeffs, wav)
    log.info("run: %d samples through %d sections, mode=%s",
             wav.samples.size, design.n_sections, args.mode)

    if args.mode == "float":
        state = CascadeState(design.n_sections)
        outputs = process_block(design, state, wav.samples)
    elif args.mode == "pipeline":
        params = schedule.HardwareParams(
            clock_hz=args.clock_hz,
            cycles_per_section=args.cycles_per_section,
            sample_rate_hz=design.sample_rate_hz,
            max_arrays=args.max_arrays,
        )
        outputs = schedule.simulate_pipeline(design, params, wav.samples)
    elif args.mode == "fixed":
        coeff_fmt, state_fmt, io_fmt = _fixed_formats(args)
        if args.quantized:
            fmt, rows = fixed.read_quantized_table(args.quantized)
            qd = fixed.apply_quantized_table(design, fmt, rows, state_fmt, io_fmt)
        else:
            qd = fixed.quantize_design(design, coeff_fmt, state_fmt, io_fmt)
        raw_in = fixed.quantize_block(wav.samples, io_fmt)
        fstate = fixed.FixedCascadeState(design.n_sections)
        raw_out, stats = fixed.fixed_process_block(qd, fstate, raw_in)
        outputs = fixed.to_real_block(raw_out, state_fmt)
        print(
            f"saturations: {stats.total} "
            f"(input {stats.input_saturations}, "
            f"sections {int(stats.section_saturations.sum())})"
        )
        if args.stats:
            with open(args.stats, "w", encoding="utf-8") as f:
                f.write("section,saturations\n")
                for k, c in enumerate(stats.section_saturations):
                    f.write(f"{k},{int(c)}\n")
    else:
        raise ConfigError(f"unknown mode: {args.mode!r}")

    audio_io.write_cochleagram(
        outputs, args.output, format=args.format, sample_rate_hz=design.sample_rate_hz
    )
    print(f"cochleagram {outputs.shape[0]} x {outputs.shape[1]} -> {args.output}")
    return 0


def _default_channels(n_sections: int, count: int = 20) -> list[int]:
    if n_sections <= count:
        return list(range(n_sections))
    picks = np.linspace(0, n_sections - 1, count)
    return sorted(set(int(round(p)) for p in picks))


def _cmd_analyze(args) -> int:
    _resolve(args, {
        "method": (str, "mls"),
        "mls_order": (int, 14),
        "n_samples": (int, None),
        "n_fft": (int, None),
        "channels": (str, None),
        "out_dir": (str, "analysis_out"),
    })
    design = read_coeff_table(args.coeffs)
    if args.channels:
        channels = sorted(set(int(c) for c in args.channels.split(",")))
        bad = [c for c in channels if not 0 <= c < design.n_sections]
        if bad:
            raise ConfigError(f"channels out of range: {bad}")
    else:
        channels = _default_channels(design.n_sections)

    def system(stim: np.ndarray) -> np.ndarray:
        state = CascadeState(design.n_sections)
        return process_block(design, state, stim)[:, channels]

    if args.method == "mls":
        config = analysis.MlsConfig(order=args.mls_order)
        n_samples = args.n_samples or config.period
        warmup = analysis.mls_warmup_periods(design, config.period)
        ir = analysis.impulse_response(
            system, n_samples, method="mls", mls_config=config, warmup_periods=warmup
        )
    elif args.method == "impulse":
        n_samples = args.n_samples or 2048
        ir = analysis.impulse_response(system, n_samples, method="direct_impulse")
    else:
        raise ConfigError(f"unknown method: {args.method!r}; use impulse or mls")

    result = analysis.frequency_response_measured(
        ir, design.sample_rate_hz, n_fft=args.n_fft
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for col, section in enumerate(channels):
        analysis.write_response_csv(result, col, out_dir / f"channel_{section:04d}_freq.csv")
        analysis.write_impulse_csv(result, col, out_dir / f"channel_{section:04d}_impulse.csv")
    peak_hz, peak_db, flat = analysis.peak_trajectory(result)
    with open(out_dir / "peaks.csv", "w", encoding="utf-8") as f:
        f.write("section,peak_hz,peak_db,flat\n")
        for col, section in enumerate(channels):
            f.write(f"{section},{peak_hz[col]:.6g},{peak_db[col]:.6g},{int(flat[col])}\n")
    print(f"analyzed {len(channels)} channels ({args.method}) -> {out_dir}")
    return 0


def _cmd_schedule(args) -> int:
    _resolve(args, {
        "sections": (int, 1224),
        "clock_hz": (float, 142e6),
        "cycles_per_section": (int, 29),
        "fs": (float, 48000.0),
        "max_arrays": (int, 12),
        "csv": (str, None),
    })
    params = schedule.HardwareParams(
        clock_hz=args.clock_hz,
        cycles_per_section=args.cycles_per_section,
        sample_rate_hz=args.fs,
        max_arrays=args.max_arrays,
    )
    report = schedule.plan(params, args.sections)
    print(schedule.report_text(report))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write(schedule.report_csv(report))
    return 0


def _cmd_compare(args) -> int:
    _resolve(args, {
        "output": (str, None),
        **_FIXED_FORMAT_TABLE,
    })
    wav = audio_io.read_wav(args.wav)
    design = _load_design_checked(args.coeffs, wav)
    coeff_fmt, state_fmt, io_fmt = _fixed_formats(args)
    qd = fixed.quantize_design(design, coeff_fmt, state_fmt, io_fmt)

    raw_in = fixed.quantize_block(wav.samples, io_fmt)
    fstate = fixed.FixedCascadeState(design.n_sections)
    raw_out, stats = fixed.fixed_process_block(qd, fstate, raw_in)
    fixed_real = fixed.to_real_block(raw_out, state_fmt)

    reference = fixed.dequantized_design(qd)
    state = CascadeState(design.n_sections)
    float_out = process_block(reference, state, fixed.to_real_block(raw_in, io_fmt))

    report = analysis.parity_report(
        float_out, fixed_real, saturation_counts=fstate.saturations
    )
    finite = report.snr_db[np.isfinite(report.snr_db)]
    print(f"channels: {design.n_sections}")
    print(f"window: samples [{report.window[0]}, {report.window[1]})")
    print(f"saturations: {stats.total}")
    if finite.size:
        print(f"worst_snr_db: {report.worst_snr_db:.2f} (channel {report.worst_channel})")
        print(f"median_snr_db: {float(np.median(finite)):.2f}")
    else:
        print("worst_snr_db: exact (all channels bit-identical)")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write("channel,snr_db,exact,saturations\n")
            for ch in range(design.n_sections):
                snr = report.snr_db[ch]
                f.write(
                    f"{ch},{'inf' if math.isinf(snr) else format(snr, '.6g')},"
                    f"{int(report.exact[ch])},{int(fstate.saturations[ch])}\n"
                )
        print(f"parity report -> {args.output}")
    return 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carmodel",
        description="Cochlear filter-cascade design, simulation, and measurement",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="compute a coefficient table")
    p.add_argument("--config")
    p.add_argument("--fs", type=float, help="sample rate in Hz (default 48000)")
    p.add_argument("--sections", type=int, help="number of sections (default 1224)")
    p.add_argument("--x-base", type=float, dest="x_base")
    p.add_argument("--x-apex", type=float, dest="x_apex")
    p.add_argument("--zeta", type=float, help="damping factor (default 0.1)")
    p.add_argument("--h-policy", dest="h_policy",
                   help="proportional | fraction:F | explicit:V")
    p.add_argument("--r", type=float, help="explicit global pole radius")
    p.add_argument("--output", "-o")
    p.add_argument("--quantize", help="also write a quantized coefficient table here")
    _add_fixed_format_flags(p)
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("run", help="process a WAV into a cochleagram")
    p.add_argument("--config")
    p.add_argument("--coeffs", required=True, help="coefficient table CSV")
    p.add_argument("--wav", required=True)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--format", choices=["csv", "binary"])
    p.add_argument("--mode", choices=["float", "fixed", "pipeline"])
    p.add_argument("--stats", help="per-section saturation CSV (fixed mode)")
    p.add_argument("--quantized", help="raw quantized coefficient table to use")
    p.add_argument("--clock-hz", type=float, dest="clock_hz")
    p.add_argument("--cycles-per-section", type=int, dest="cycles_per_section")
    p.add_argument("--max-arrays", type=int, dest="max_arrays")
    _add_fixed_format_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analyze", help="impulse/frequency response measurement")
    p.add_argument("--config")
    p.add_argument("--coeffs", required=True)
    p.add_argument("--method", choices=["impulse", "mls"])
    p.add_argument("--mls-order", type=int, dest="mls_order")
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--n-fft", type=int, dest="n_fft")
    p.add_argument("--channels", help="comma-separated tap indices (default: 20 spread)")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("schedule", help="hardware timing report")
    p.add_argument("--config")
    p.add_argument("--sections", type=int)
    p.add_argument("--clock-hz", type=float, dest="clock_hz")
    p.add_argument("--cycles-per-section", type=int, dest="cycles_per_section")
    p.add_argument("--fs", type=float)
    p.add_argument("--max-arrays", type=int, dest="max_arrays")
    p.add_argument("--csv", help="also write the report as CSV")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("compare", help="float vs fixed parity report")
    p.add_argument("--config")
    p.add_argument("--coeffs", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--output", "-o", help="per-channel parity CSV")
    _add_fixed_format_flags(p)
    p.set_defaults(func=_cmd_compare)

    return parser


def cli_main(argv=None) -> int:
    level = os.environ.get("CARMODEL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except CarModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
