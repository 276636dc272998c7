"""Bit-accurate fixed-point emulation of the cascade datapath.

All arithmetic is done on plain Python integers so intermediate products are
exact at any width; results are rounded once at each architectural register
write. The datapath mirrors core.step_section:

    entrance    x_io -> x in state format (one requantize, exact when the
                state format is at least as fine and wide as the io format)
    w1' write   round( r*(a0*w1 - c0*w2) + x ) -> state format
    w2' write   round( r*(c0*w1 + a0*w2) )     -> state format
    y   write   round( g*(h*w2' + x) )         -> state format

Inter-stage values (tap outputs, which are also the next section's inputs)
are carried in the state format: the cascade builds up large resonant peaks,
so the narrow io format applies only at the input boundary. Every rounding
site saturates (or wraps) per the destination format's overflow policy and
every overflow event is counted; nothing is clipped silently.

Default word lengths: 16/15 io (16-bit PCM input), 32/24 state (integer
headroom of +-128 for inter-stage peaks), 18/16 coefficients (all designed
coefficients have magnitude below 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .design import CascadeDesign, ChannelCoeffs
from .errors import ConfigError, DesignError, FixedPointError

__all__ = [
    "FixedFormat",
    "FixedValue",
    "QuantizedDesign",
    "QuantizedSectionCoeffs",
    "FixedSectionState",
    "FixedCascadeState",
    "FixedRunStats",
    "DEFAULT_IO_FORMAT",
    "DEFAULT_STATE_FORMAT",
    "DEFAULT_COEFF_FORMAT",
    "quantize",
    "to_real",
    "fixed_mul",
    "fixed_add",
    "quantize_design",
    "dequantized_design",
    "fixed_step_section",
    "fixed_process_block",
    "quantize_block",
    "to_real_block",
    "write_quantized_table",
    "read_quantized_table",
    "apply_quantized_table",
    "QUANTIZED_TABLE_HEADER",
]

ROUND_NEAREST_EVEN = "round_to_nearest_even"
ROUND_TRUNCATE = "truncate"
OVERFLOW_SATURATE = "saturate"
OVERFLOW_WRAP = "wrap"


@dataclass(frozen=True)
class FixedFormat:
    """Signed two's-complement fixed-point format."""

    total_bits: int
    frac_bits: int
    rounding: str = ROUND_NEAREST_EVEN
    overflow: str = OVERFLOW_SATURATE

    def __post_init__(self):
        if not 2 <= self.total_bits <= 64:
            raise FixedPointError(f"total_bits must be in [2, 64], got {self.total_bits}")
        if not 0 <= self.frac_bits <= self.total_bits - 1:
            raise FixedPointError(
                f"frac_bits must be in [0, total_bits-1], got {self.frac_bits}"
            )
        if self.rounding not in (ROUND_NEAREST_EVEN, ROUND_TRUNCATE):
            raise FixedPointError(f"unknown rounding mode: {self.rounding!r}")
        if self.overflow not in (OVERFLOW_SATURATE, OVERFLOW_WRAP):
            raise FixedPointError(f"unknown overflow policy: {self.overflow!r}")

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_value(self) -> float:
        return math.ldexp(self.raw_min, -self.frac_bits)

    @property
    def max_value(self) -> float:
        return math.ldexp(self.raw_max, -self.frac_bits)

    @property
    def lsb(self) -> float:
        return math.ldexp(1.0, -self.frac_bits)


DEFAULT_IO_FORMAT = FixedFormat(16, 15)
DEFAULT_STATE_FORMAT = FixedFormat(32, 24)
DEFAULT_COEFF_FORMAT = FixedFormat(18, 16)


@dataclass(frozen=True)
class FixedValue:
    raw: int
    format: FixedFormat

    def __post_init__(self):
        if not self.format.raw_min <= self.raw <= self.format.raw_max:
            raise FixedPointError(
                f"raw value {self.raw} does not fit {self.format.total_bits}-bit format"
            )

    def to_real(self) -> float:
        return math.ldexp(self.raw, -self.format.frac_bits)


def _round_shift(value: int, shift: int, rounding: str) -> int:
    """Round value / 2^shift to an integer; negative shift is an exact
    left shift. Truncation is an arithmetic right shift (floor)."""
    if shift <= 0:
        return value << (-shift)
    if rounding == ROUND_TRUNCATE:
        return value >> shift
    half = 1 << (shift - 1)
    frac = value & ((1 << shift) - 1)
    base = value >> shift
    if frac > half or (frac == half and (base & 1)):
        base += 1
    return base


def _apply_overflow(raw: int, fmt: FixedFormat) -> tuple[int, bool]:
    lo, hi = fmt.raw_min, fmt.raw_max
    if lo <= raw <= hi:
        return raw, False
    if fmt.overflow == OVERFLOW_SATURATE:
        return (hi if raw > hi else lo), True
    wrapped = raw & ((1 << fmt.total_bits) - 1)
    if wrapped > hi:
        wrapped -= 1 << fmt.total_bits
    return wrapped, True


def _requantize(raw: int, from_frac: int, fmt: FixedFormat) -> tuple[int, bool]:
    rounded = _round_shift(raw, from_frac - fmt.frac_bits, fmt.rounding)
    return _apply_overflow(rounded, fmt)


def quantize(value: float, fmt: FixedFormat) -> FixedValue:
    """Convert a real value into the format per its rounding and overflow
    policies. NaN is rejected; infinities clamp to the format extremes."""
    if math.isnan(value):
        raise FixedPointError("cannot quantize NaN")
    if math.isinf(value):
        return FixedValue(fmt.raw_max if value > 0 else fmt.raw_min, fmt)
    scaled = math.ldexp(value, fmt.frac_bits)  # exact: power-of-two scale
    if fmt.rounding == ROUND_TRUNCATE:
        raw = math.floor(scaled)
    else:
        raw = round(scaled)  # Python round() is round-half-to-even
    raw, _ = _apply_overflow(raw, fmt)
    return FixedValue(raw, fmt)


def to_real(v: FixedValue) -> float:
    """Real value raw / 2^frac_bits (exact while raw fits a double)."""
    return v.to_real()


def fixed_mul(a: FixedValue, b: FixedValue, out_format: FixedFormat) -> FixedValue:
    """Full-precision integer product, rounded once into out_format."""
    product = a.raw * b.raw
    raw, _ = _requantize(product, a.format.frac_bits + b.format.frac_bits, out_format)
    return FixedValue(raw, out_format)


def fixed_add(a: FixedValue, b: FixedValue, out_format: FixedFormat) -> FixedValue:
    """Exact sum after alignment to the finer operand, rounded once."""
    frac = max(a.format.frac_bits, b.format.frac_bits)
    total = (a.raw << (frac - a.format.frac_bits)) + (b.raw << (frac - b.format.frac_bits))
    raw, _ = _requantize(total, frac, out_format)
    return FixedValue(raw, out_format)


class QuantizedSectionCoeffs(NamedTuple):
    r_raw: int
    a0_raw: int
    c0_raw: int
    h_raw: int
    g_raw: int


_COEFF_NAMES = ("r", "a0", "c0", "h", "g")


@dataclass(frozen=True)
class QuantizedDesign:
    """A cascade design with coefficients frozen to raw integers."""

    design: CascadeDesign
    coeff_format: FixedFormat
    state_format: FixedFormat
    io_format: FixedFormat
    coeffs_raw: tuple[QuantizedSectionCoeffs, ...]

    @property
    def n_sections(self) -> int:
        return len(self.coeffs_raw)


def _quantize_coeff(value: float, fmt: FixedFormat, section: int, name: str) -> int:
    # coefficients always round to nearest; out of range is a design error,
    # never silently clipped
    scaled = math.ldexp(value, fmt.frac_bits)
    raw = round(scaled)
    if not fmt.raw_min <= raw <= fmt.raw_max:
        raise DesignError(
            f"section {section}: coefficient {name}={value} does not fit "
            f"{fmt.total_bits}/{fmt.frac_bits} format"
        )
    return raw


def quantize_design(
    design: CascadeDesign,
    coeff_format: FixedFormat = DEFAULT_COEFF_FORMAT,
    state_format: FixedFormat = DEFAULT_STATE_FORMAT,
    io_format: FixedFormat = DEFAULT_IO_FORMAT,
) -> QuantizedDesign:
    """Quantize all section coefficients round-to-nearest into coeff_format."""
    rows = []
    for s in design.sections:
        rows.append(
            QuantizedSectionCoeffs(
                *(
                    _quantize_coeff(v, coeff_format, s.section_index, n)
                    for v, n in zip((s.r, s.a0, s.c0, s.h, s.g), _COEFF_NAMES)
                )
            )
        )
    return QuantizedDesign(
        design=design,
        coeff_format=coeff_format,
        state_format=state_format,
        io_format=io_format,
        coeffs_raw=tuple(rows),
    )


def dequantized_design(qdesign: QuantizedDesign) -> CascadeDesign:
    """The float design whose coefficients equal the quantized values exactly.

    This is the reference the fixed datapath converges to as word lengths
    grow, and the baseline for parity SNR: it isolates arithmetic word-length
    effects from the (separate) coefficient quantization.
    """
    frac = qdesign.coeff_format.frac_bits
    sections = []
    for s, q in zip(qdesign.design.sections, qdesign.coeffs_raw):
        sections.append(
            ChannelCoeffs(
                cf_hz=s.cf_hz,
                theta_r=s.theta_r,
                r=math.ldexp(q.r_raw, -frac),
                a0=math.ldexp(q.a0_raw, -frac),
                c0=math.ldexp(q.c0_raw, -frac),
                h=math.ldexp(q.h_raw, -frac),
                g=math.ldexp(q.g_raw, -frac),
                section_index=s.section_index,
            )
        )
    return CascadeDesign(
        sections=tuple(sections),
        sample_rate_hz=qdesign.design.sample_rate_hz,
        positions=qdesign.design.positions,
    )


class FixedSectionState(NamedTuple):
    w1_raw: int = 0
    w2_raw: int = 0


class FixedCascadeState:
    """Raw integer (w1, w2) pairs plus cumulative overflow counters."""

    def __init__(self, n_sections: int):
        if n_sections < 1:
            raise ConfigError(f"n_sections must be >= 1, got {n_sections}")
        self.w1_raw = [0] * n_sections
        self.w2_raw = [0] * n_sections
        self.saturations = np.zeros(n_sections, dtype=np.int64)
        self.samples_processed = 0

    @property
    def n_sections(self) -> int:
        return len(self.w1_raw)

    def reset(self) -> None:
        n = self.n_sections
        self.w1_raw = [0] * n
        self.w2_raw = [0] * n
        self.saturations[:] = 0
        self.samples_processed = 0


@dataclass(frozen=True)
class FixedRunStats:
    """Overflow accounting for one fixed_process_block call."""

    section_saturations: np.ndarray
    input_saturations: int

    @property
    def total(self) -> int:
        return int(self.section_saturations.sum()) + self.input_saturations


def _step_raw(
    q: QuantizedSectionCoeffs,
    w1: int,
    w2: int,
    x: int,
    x_frac: int,
    cfrac: int,
    sfmt: FixedFormat,
) -> tuple[int, int, int, int]:
    """One section update on raw integers; x and y are in state format
    unless x_frac says otherwise. Returns (w1', w2', y, overflow_events)."""
    acc_frac = 2 * cfrac + sfmt.frac_bits
    events = 0

    acc = q.r_raw * (q.a0_raw * w1 - q.c0_raw * w2)
    acc += _round_shift(x, x_frac - acc_frac, sfmt.rounding) if x_frac > acc_frac else (
        x << (acc_frac - x_frac)
    )
    w1n, sat = _requantize(acc, acc_frac, sfmt)
    events += sat

    acc = q.r_raw * (q.c0_raw * w1 + q.a0_raw * w2)
    w2n, sat = _requantize(acc, acc_frac, sfmt)
    events += sat

    inner_frac = cfrac + sfmt.frac_bits
    acc = q.h_raw * w2n
    acc += _round_shift(x, x_frac - inner_frac, sfmt.rounding) if x_frac > inner_frac else (
        x << (inner_frac - x_frac)
    )
    y, sat = _requantize(q.g_raw * acc, acc_frac, sfmt)
    events += sat

    return w1n, w2n, y, events


def fixed_step_section(
    qdesign: QuantizedDesign,
    section_index: int,
    state: FixedSectionState,
    x: FixedValue,
) -> tuple[FixedSectionState, FixedValue, int]:
    """Advance one quantized section; returns (state', y, overflow_events).

    y is produced in the state format, which is also the inter-stage format.
    """
    q = qdesign.coeffs_raw[section_index]
    w1n, w2n, y, events = _step_raw(
        q,
        state.w1_raw,
        state.w2_raw,
        x.raw,
        x.format.frac_bits,
        qdesign.coeff_format.frac_bits,
        qdesign.state_format,
    )
    return FixedSectionState(w1n, w2n), FixedValue(y, qdesign.state_format), events


def quantize_block(samples: Sequence[float] | np.ndarray, fmt: FixedFormat) -> np.ndarray:
    """Vectorized quantize of a float block to raw integers (int64).

    Matches quantize() for every element (round-half-even / floor, then the
    overflow policy).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size and not np.isfinite(x).all():
        raise FixedPointError("samples contain non-finite values")
    scaled = x * math.ldexp(1.0, fmt.frac_bits)  # exact power-of-two scale
    if fmt.rounding == ROUND_TRUNCATE:
        raw = np.floor(scaled)
    else:
        raw = np.round(scaled)  # ties to even, same as round()
    raw = raw.astype(np.int64)
    if fmt.overflow == OVERFLOW_SATURATE:
        raw = np.clip(raw, fmt.raw_min, fmt.raw_max)
    else:
        span = 1 << fmt.total_bits
        raw = ((raw - fmt.raw_min) % span) + fmt.raw_min
    return raw


def to_real_block(raw: np.ndarray, fmt: FixedFormat) -> np.ndarray:
    """Raw integer block to real values (vectorized to_real)."""
    return raw.astype(np.float64) * math.ldexp(1.0, -fmt.frac_bits)


def fixed_process_block(
    qdesign: QuantizedDesign,
    state: FixedCascadeState,
    samples_raw: Sequence[int] | np.ndarray,
) -> tuple[np.ndarray, FixedRunStats]:
    """Propagate io-format raw samples through the quantized cascade.

    Returns (raw tap outputs [n_samples x n_sections] in state format,
    overflow statistics for this call). The datapath is integer-only, so
    identical raw inputs produce identical raw outputs on any platform.
    """
    n_sections = qdesign.n_sections
    if state.n_sections != n_sections:
        raise ConfigError(
            f"state has {state.n_sections} sections, design has {n_sections}"
        )
    io_fmt = qdesign.io_format
    sfmt = qdesign.state_format
    cfrac = qdesign.coeff_format.frac_bits
    lo, hi = io_fmt.raw_min, io_fmt.raw_max

    xs = [int(v) for v in samples_raw]
    for v in xs:
        if not lo <= v <= hi:
            raise ConfigError(f"input raw {v} does not fit the io format")

    out = np.empty((len(xs), n_sections), dtype=np.int64)
    section_sat = np.zeros(n_sections, dtype=np.int64)
    input_sat = 0

    w1 = state.w1_raw
    w2 = state.w2_raw
    coeffs = qdesign.coeffs_raw
    io_frac = io_fmt.frac_bits

    for t, x_io in enumerate(xs):
        # entrance: io -> state format (exact when state is finer and wider)
        x, sat = _requantize(x_io, io_frac, sfmt)
        input_sat += sat
        for k in range(n_sections):
            w1n, w2n, y, events = _step_raw(
                coeffs[k], w1[k], w2[k], x, sfmt.frac_bits, cfrac, sfmt
            )
            w1[k] = w1n
            w2[k] = w2n
            if events:
                section_sat[k] += events
            out[t, k] = y
            x = y

    state.saturations += section_sat
    state.samples_processed += len(xs)
    return out, FixedRunStats(section_saturations=section_sat, input_saturations=input_sat)


# ---------------------------------------------------------------------------
# Quantized coefficient file format: the raw integers are the interchange
# truth, one row per (section, coefficient).
# ---------------------------------------------------------------------------

QUANTIZED_TABLE_HEADER = ("section", "coeff_name", "raw_int", "total_bits", "frac_bits")


def write_quantized_table(qdesign: QuantizedDesign, path_or_file) -> None:
    import csv

    def _write(f):
        w = csv.writer(f)
        w.writerow(QUANTIZED_TABLE_HEADER)
        fmt = qdesign.coeff_format
        for i, q in enumerate(qdesign.coeffs_raw):
            for name, raw in zip(_COEFF_NAMES, q):
                w.writerow([i, name, raw, fmt.total_bits, fmt.frac_bits])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as f:
            _write(f)


def read_quantized_table(path_or_file) -> tuple[FixedFormat, dict[int, dict[str, int]]]:
    """Read raw coefficient rows; returns (coeff format, {section: {name: raw}})."""
    import csv

    def _read(f):
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != QUANTIZED_TABLE_HEADER:
            raise DesignError(
                f"bad quantized-table header: expected {','.join(QUANTIZED_TABLE_HEADER)}"
            )
        fmt = None
        rows: dict[int, dict[str, int]] = {}
        for row in reader:
            if not row:
                continue
            section, name, raw, total, frac = (
                int(row[0]), row[1].strip(), int(row[2]), int(row[3]), int(row[4]),
            )
            row_fmt = FixedFormat(total, frac)
            if fmt is None:
                fmt = row_fmt
            elif row_fmt != fmt:
                raise DesignError(f"section {section}: inconsistent coefficient format")
            if name not in _COEFF_NAMES:
                raise DesignError(f"section {section}: unknown coefficient {name!r}")
            rows.setdefault(section, {})[name] = raw
        if fmt is None:
            raise DesignError("quantized table has no data rows")
        return fmt, rows

    if hasattr(path_or_file, "read"):
        return _read(path_or_file)
    with open(path_or_file, "r", newline="", encoding="utf-8") as f:
        return _read(f)


def apply_quantized_table(
    design: CascadeDesign,
    coeff_format: FixedFormat,
    rows: dict[int, dict[str, int]],
    state_format: FixedFormat = DEFAULT_STATE_FORMAT,
    io_format: FixedFormat = DEFAULT_IO_FORMAT,
) -> QuantizedDesign:
    """Build a QuantizedDesign from externally supplied raw integers."""
    if sorted(rows) != list(range(design.n_sections)):
        raise DesignError(
            f"quantized table covers sections {sorted(rows)}, design has {design.n_sections}"
        )
    packed = []
    for i in range(design.n_sections):
        row = rows[i]
        missing = [n for n in _COEFF_NAMES if n not in row]
        if missing:
            raise DesignError(f"section {i}: missing coefficients {missing}")
        for name, raw in row.items():
            if not coeff_format.raw_min <= raw <= coeff_format.raw_max:
                raise DesignError(f"section {i}: raw {name}={raw} does not fit the format")
        packed.append(QuantizedSectionCoeffs(*(row[n] for n in _COEFF_NAMES)))
    return QuantizedDesign(
        design=design,
        coeff_format=coeff_format,
        state_format=state_format,
        io_format=io_format,
        coeffs_raw=tuple(packed),
    )
