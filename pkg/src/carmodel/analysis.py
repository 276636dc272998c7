"""Measurement instruments: maximum-length sequences, impulse and frequency
responses, and float/fixed parity reports.

The MLS path measures a linear system's impulse response by driving it with
a periodic pseudo-random +-A sequence and circularly cross-correlating one
steady-state output period with the stimulus. Because the sequence's
circular autocorrelation takes exactly two values (N*A^2 at zero lag, -A^2
elsewhere), the correlation can be inverted exactly:

    h[k] = (R_ys[k] + sum_j R_ys[j]) / (A^2 * (N + 1))

which recovers the period-folded impulse response with no bias. The DFT of
that full period samples the true frequency response exactly at the bin
frequencies, so measured and analytic responses can be compared tightly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .design import CascadeDesign, transfer_function
from .errors import AnalysisError, ConfigError

__all__ = [
    "DEFAULT_MLS_TAPS",
    "MlsConfig",
    "ResponseResult",
    "ParityReport",
    "mls_generate",
    "mls_warmup_periods",
    "impulse_response",
    "frequency_response_measured",
    "frequency_response_analytic",
    "parity_report",
    "peak_trajectory",
    "write_response_csv",
    "write_impulse_csv",
    "DB_FLOOR",
]

# Feedback tap positions (including the register length itself) of one
# primitive polynomial per order; each entry generates the full 2^order - 1
# period, which mls_generate re-verifies on every run.
DEFAULT_MLS_TAPS: dict[int, tuple[int, ...]] = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 7, 6, 1),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 11, 10, 4),
    13: (13, 12, 11, 8),
    14: (14, 13, 12, 2),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 18, 17, 14),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
}

DB_FLOOR = -200.0


@dataclass(frozen=True)
class MlsConfig:
    """Maximum-length-sequence stimulus parameters."""

    order: int = 14
    taps: tuple[int, ...] | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if not 2 <= self.order <= 24:
            raise AnalysisError(f"order must be in [2, 24], got {self.order}")
        if self.amplitude <= 0:
            raise AnalysisError(f"amplitude must be positive, got {self.amplitude}")
        if self.taps is not None:
            taps = tuple(sorted(set(int(t) for t in self.taps), reverse=True))
            if not taps or taps[0] != self.order or taps[-1] < 1:
                raise AnalysisError(
                    f"taps must include the order and lie in [1, order], got {self.taps}"
                )
            object.__setattr__(self, "taps", taps)

    @property
    def period(self) -> int:
        return (1 << self.order) - 1

    def resolved_taps(self) -> tuple[int, ...]:
        return self.taps if self.taps is not None else DEFAULT_MLS_TAPS[self.order]


def mls_generate(config: MlsConfig) -> np.ndarray:
    """One full period of the +-amplitude maximum-length sequence.

    Fibonacci shift register seeded with all ones; the new bit is the XOR of
    the bits delayed by each tap position, with bit 1 mapped to +amplitude.
    The period is verified during generation: the register must first return
    to the seed after exactly 2^order - 1 steps, otherwise the taps are not
    a primitive polynomial and a validation error is raised.
    """
    order = config.order
    n_mask = (1 << order) - 1
    period = config.period
    tap_mask = 0
    for p in config.resolved_taps():
        tap_mask |= 1 << (p - 1)
    seed = n_mask
    state = seed
    amp = config.amplitude
    out = np.empty(period, dtype=np.float64)
    returned_at = 0
    for i in range(period):
        fb = bin(state & tap_mask).count("1") & 1
        state = ((state << 1) | fb) & n_mask
        out[i] = amp if fb else -amp
        if state == seed and returned_at == 0:
            returned_at = i + 1
    if returned_at != period:
        raise AnalysisError(
            f"taps {config.resolved_taps()} give period {returned_at}, "
            f"need {period}; not a primitive polynomial"
        )
    return out


def mls_warmup_periods(
    design: CascadeDesign, period: int, residual: float = 1e-14
) -> int:
    """Warm-up periods needed before the cascade's output is periodic.

    The slowest section mode decays as r^n; enough whole periods are run
    that the leftover transient falls below `residual` relative to the
    response scale. At least one period is always used.
    """
    r_max = max(s.r for s in design.sections)
    if r_max >= 1.0:
        raise AnalysisError("undamped design (r = 1) never reaches a periodic state")
    need = math.log(residual) / (period * math.log(r_max))
    return max(1, int(math.ceil(need)))


def impulse_response(
    system: Callable[[np.ndarray], np.ndarray],
    n_samples: int,
    method: str = "direct_impulse",
    mls_config: MlsConfig | None = None,
    warmup_periods: int = 2,
) -> np.ndarray:
    """Per-channel impulse responses of a multichannel processing function.

    `system` maps an input vector to an [n, channels] output matrix and must
    start from its reset state; it is called exactly once.

    direct_impulse drives a unit impulse. mls drives warmup_periods + 1 full
    periods of the configured sequence and recovers the (period-folded)
    impulse response from the last period by exact circular cross-correlation.
    n_samples must not exceed the MLS period.
    """
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    if method == "direct_impulse":
        stim = np.zeros(n_samples, dtype=np.float64)
        stim[0] = 1.0
        out = np.asarray(system(stim), dtype=np.float64)
        _check_system_output(out, n_samples)
        return out
    if method != "mls":
        raise ConfigError(f"unknown impulse-response method: {method!r}")

    config = mls_config if mls_config is not None else MlsConfig()
    period = config.period
    if n_samples > period:
        raise ConfigError(
            f"n_samples={n_samples} exceeds the MLS period {period} (order {config.order})"
        )
    if warmup_periods < 1:
        raise ConfigError("warmup_periods must be >= 1")
    seq = mls_generate(config)
    stim = np.tile(seq, warmup_periods + 1)
    out = np.asarray(system(stim), dtype=np.float64)
    _check_system_output(out, stim.shape[0])
    y = out[warmup_periods * period :, :]

    amp = config.amplitude
    seq_f = np.fft.rfft(seq)
    corr = np.fft.irfft(np.fft.rfft(y, axis=0) * np.conj(seq_f)[:, None], n=period, axis=0)
    h = (corr + corr.sum(axis=0, keepdims=True)) / (amp * amp * (period + 1))
    return h[:n_samples, :]


def _check_system_output(out: np.ndarray, n_expected: int) -> None:
    if out.ndim != 2 or out.shape[0] != n_expected:
        raise ConfigError(
            f"system must return [n_samples x channels], got shape {out.shape}"
        )


@dataclass(frozen=True)
class ResponseResult:
    """Impulse responses, their spectra, and per-channel peak locations."""

    impulse_responses: np.ndarray      # [n_samples x channels]
    magnitudes_linear: np.ndarray      # [bins x channels]
    magnitudes_db: np.ndarray          # clamped at DB_FLOOR
    frequencies_hz: np.ndarray
    sample_rate_hz: float
    n_fft: int
    peak_hz: np.ndarray                # NaN where flat
    peak_db: np.ndarray
    flat: np.ndarray                   # bool per channel

    @property
    def n_channels(self) -> int:
        return self.impulse_responses.shape[1]


def frequency_response_measured(
    impulse_responses: np.ndarray,
    sample_rate_hz: float,
    n_fft: int | None = None,
) -> ResponseResult:
    """Magnitude responses (dB) of measured impulse responses.

    n_fft defaults to the impulse-response length; shorter is rejected
    (responses are never truncated, only zero-padded).
    """
    ir = np.asarray(impulse_responses, dtype=np.float64)
    if ir.ndim == 1:
        ir = ir[:, None]
    n = ir.shape[0]
    if n_fft is None:
        n_fft = n
    if n_fft < n:
        raise ConfigError(f"n_fft={n_fft} shorter than impulse response ({n})")
    spectrum = np.fft.rfft(ir, n=n_fft, axis=0)
    mag = np.abs(spectrum)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    db = np.maximum(db, DB_FLOOR)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate_hz)
    peak_hz, peak_db, flat = _find_peaks(db, freqs, interpolate=True)
    return ResponseResult(
        impulse_responses=ir,
        magnitudes_linear=mag,
        magnitudes_db=db,
        frequencies_hz=freqs,
        sample_rate_hz=float(sample_rate_hz),
        n_fft=int(n_fft),
        peak_hz=peak_hz,
        peak_db=peak_db,
        flat=flat,
    )


def frequency_response_analytic(
    design: CascadeDesign, frequencies: Sequence[float] | np.ndarray
) -> np.ndarray:
    """Complex cascaded gain per channel: [len(frequencies) x n_sections].

    Channel k is the product of the transfer functions of sections 0..k
    evaluated on the unit circle.
    """
    freqs = np.asarray(frequencies, dtype=np.float64)
    nyquist = design.sample_rate_hz / 2.0
    if freqs.size and (freqs.min() < 0 or freqs.max() >= nyquist):
        raise ConfigError(f"frequencies must lie in [0, {nyquist}) Hz")
    z = np.exp(2j * np.pi * freqs / design.sample_rate_hz)
    out = np.empty((freqs.shape[0], design.n_sections), dtype=np.complex128)
    acc = np.ones_like(z)
    for k, s in enumerate(design.sections):
        tf = transfer_function(s)
        num = (tf.b0 * z + tf.b1) * z + tf.b2
        den = (z + tf.a1_den) * z + tf.a2_den
        acc = acc * (num / den)
        out[:, k] = acc
    return out


def _find_peaks(
    db: np.ndarray, freqs: np.ndarray, interpolate: bool, flat_tol_db: float = 1e-9
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_ch = db.shape[1]
    peak_hz = np.full(n_ch, np.nan)
    peak_db = np.empty(n_ch)
    flat = np.zeros(n_ch, dtype=bool)
    bin_step = freqs[1] - freqs[0] if len(freqs) > 1 else 0.0
    for ch in range(n_ch):
        col = db[:, ch]
        peak_db[ch] = col.max()
        if col.max() - col.min() < flat_tol_db:
            flat[ch] = True
            continue
        p = int(col.argmax())
        if interpolate and 0 < p < len(col) - 1:
            ym, y0, yp = col[p - 1], col[p], col[p + 1]
            denom = ym - 2.0 * y0 + yp
            if denom != 0.0:
                delta = 0.5 * (ym - yp) / denom
                peak_hz[ch] = freqs[p] + delta * bin_step
                peak_db[ch] = y0 - 0.25 * (ym - yp) * delta
                continue
        peak_hz[ch] = freqs[p]
    return peak_hz, peak_db, flat


def peak_trajectory(
    result: ResponseResult, interpolate: bool = True
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-channel (peak_hz, peak_db, flat) from a ResponseResult.

    With interpolate=False the raw argmax bin frequency is reported; the
    parabolic refinement fits the peak bin and its neighbors in dB. Flat
    channels (no distinguishable peak) carry NaN frequencies.
    """
    return _find_peaks(result.magnitudes_db, result.frequencies_hz, interpolate)


@dataclass(frozen=True)
class ParityReport:
    """Per-channel SNR of a fixed-point run against the float reference."""

    snr_db: np.ndarray
    exact: np.ndarray                  # channels where fixed == float exactly
    worst_channel: int
    worst_snr_db: float
    window: tuple[int, int]
    saturation_counts: np.ndarray | None = None

    @property
    def all_exact(self) -> bool:
        return bool(self.exact.all())


def parity_report(
    float_outputs: np.ndarray,
    fixed_outputs: np.ndarray,
    window: tuple[int, int] | None = None,
    saturation_counts: np.ndarray | None = None,
) -> ParityReport:
    """SNR per channel: 10*log10(sum(ref^2) / sum((ref - fixed)^2)).

    Channels where the error is exactly zero report +inf and are flagged
    exact. A zero-energy reference window is an error, not a 0-dB report.
    """
    ref = np.asarray(float_outputs, dtype=np.float64)
    fix = np.asarray(fixed_outputs, dtype=np.float64)
    if ref.shape != fix.shape:
        raise ConfigError(f"shape mismatch: {ref.shape} vs {fix.shape}")
    if ref.ndim == 1:
        ref = ref[:, None]
        fix = fix[:, None]
    if window is None:
        window = (0, ref.shape[0])
    start, stop = window
    ref = ref[start:stop]
    fix = fix[start:stop]
    if ref.shape[0] == 0:
        raise AnalysisError("empty comparison window")

    ref_energy = (ref * ref).sum(axis=0)
    err_energy = ((ref - fix) ** 2).sum(axis=0)
    for ch, e in enumerate(ref_energy):
        if e == 0.0:
            raise AnalysisError(f"undefined SNR: reference is all zero in channel {ch}")
    exact = err_energy == 0.0
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(ref_energy / err_energy)
    finite = np.where(exact, np.inf, snr)
    worst = int(np.argmin(finite))
    return ParityReport(
        snr_db=finite,
        exact=exact,
        worst_channel=worst,
        worst_snr_db=float(finite[worst]),
        window=(start, stop),
        saturation_counts=None if saturation_counts is None
        else np.asarray(saturation_counts),
    )


def write_response_csv(result: ResponseResult, channel: int, path_or_file) -> None:
    """`frequency_hz,magnitude_db` rows for one channel."""

    def _write(f):
        w = csv.writer(f)
        w.writerow(["frequency_hz", "magnitude_db"])
        for fr, db in zip(result.frequencies_hz, result.magnitudes_db[:, channel]):
            w.writerow([format(fr, ".17g"), format(db, ".17g")])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as f:
            _write(f)


def write_impulse_csv(result: ResponseResult, channel: int, path_or_file) -> None:
    """`sample_index,amplitude` rows for one channel."""

    def _write(f):
        w = csv.writer(f)
        w.writerow(["sample_index", "amplitude"])
        for i, v in enumerate(result.impulse_responses[:, channel]):
            w.writerow([i, format(v, ".17g")])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as f:
            _write(f)
