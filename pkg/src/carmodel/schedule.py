"""Time-multiplexed hardware execution model.

One physical filter core serves many sections by iterating their state
through the datapath within a sample period; a core plus the sections it
serves is an array. Several arrays are chained, each adding one sample
period of pipeline delay. This module derives the core/array arithmetic
(sections per array, array count, latencies, feasibility) and can simulate
the resulting tap timing against the float reference cascade.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .core import CascadeState, process_block
from .design import CascadeDesign
from .errors import InfeasibleError

__all__ = [
    "HardwareParams",
    "ScheduleReport",
    "section_latency",
    "sections_per_array",
    "plan",
    "simulate_pipeline",
    "report_text",
    "report_csv",
]


@dataclass(frozen=True)
class HardwareParams:
    """Clocking and capacity of the modeled hardware."""

    clock_hz: float = 142e6
    cycles_per_section: int = 29
    sample_rate_hz: float = 48000.0
    max_arrays: int = 12

    def __post_init__(self):
        for name in ("clock_hz", "cycles_per_section", "sample_rate_hz", "max_arrays"):
            if getattr(self, name) <= 0:
                raise InfeasibleError(f"{name} must be positive")


@dataclass(frozen=True)
class ScheduleReport:
    """Derived timing facts for a requested section count."""

    n_sections: int
    section_latency_s: float
    sections_per_array: int
    arrays_needed: int
    total_sections_capacity: int
    end_to_end_latency_s: float
    sample_period_s: float
    feasible: bool
    slack_cycles_per_sample: int


def section_latency(cycles: int, clock_hz: float) -> float:
    """Time for one section to pass through the core: cycles / clock."""
    if cycles <= 0 or clock_hz <= 0:
        raise InfeasibleError("cycles and clock_hz must be positive")
    return cycles / clock_hz


def sections_per_array(params: HardwareParams) -> int:
    """Sections one core can serve within a sample period.

    floor((clock_hz / sample_rate_hz) / cycles_per_section); zero means a
    single section cannot finish within the sample period.
    """
    budget = int(math.floor(params.clock_hz / params.sample_rate_hz))
    per_array = budget // params.cycles_per_section
    if per_array == 0:
        raise InfeasibleError(
            f"one section needs {params.cycles_per_section} cycles but only "
            f"{budget} fit in a sample period"
        )
    return per_array


def plan(params: HardwareParams, n_sections: int) -> ScheduleReport:
    """Allocate sections to arrays and derive latencies and feasibility.

    Each array contributes one sample period to the end-to-end latency (the
    per-section core latency is absorbed within that period).
    """
    if n_sections < 1:
        raise InfeasibleError(f"n_sections must be >= 1, got {n_sections}")
    per_array = sections_per_array(params)
    arrays = -(-n_sections // per_array)  # ceil
    sample_period = 1.0 / params.sample_rate_hz
    budget = int(math.floor(params.clock_hz / params.sample_rate_hz))
    slack = budget - params.cycles_per_section * min(n_sections, per_array)
    return ScheduleReport(
        n_sections=n_sections,
        section_latency_s=section_latency(params.cycles_per_section, params.clock_hz),
        sections_per_array=per_array,
        arrays_needed=arrays,
        total_sections_capacity=per_array * params.max_arrays,
        end_to_end_latency_s=arrays * sample_period,
        sample_period_s=sample_period,
        feasible=arrays <= params.max_arrays,
        slack_cycles_per_sample=slack,
    )


def simulate_pipeline(
    design: CascadeDesign, params: HardwareParams, samples
) -> np.ndarray:
    """Tap outputs as the array pipeline would emit them.

    Numerically identical to the reference process_block except that every
    tap served by array k (0-based) is delayed by k whole samples, the
    pipeline-register delay between chained arrays. Sections within an
    array run strictly in index order, one sample at a time (the per-sample
    completion barrier), which is exactly the reference iteration order.
    """
    report = plan(params, design.n_sections)
    if not report.feasible:
        raise InfeasibleError(
            f"{report.arrays_needed} arrays needed, only {params.max_arrays} available"
        )
    state = CascadeState(design.n_sections)
    ref = process_block(design, state, samples)
    out = np.zeros_like(ref)
    per_array = report.sections_per_array
    n = ref.shape[0]
    for k in range(design.n_sections):
        delay = k // per_array
        if delay == 0:
            out[:, k] = ref[:, k]
        elif delay < n:
            out[delay:, k] = ref[: n - delay, k]
    return out


def report_text(report: ScheduleReport) -> str:
    """Key: value rendering of a ScheduleReport."""
    lines = [
        f"n_sections: {report.n_sections}",
        f"section_latency_ns: {report.section_latency_s * 1e9:.4f}",
        f"sections_per_array: {report.sections_per_array}",
        f"arrays_needed: {report.arrays_needed}",
        f"total_sections_capacity: {report.total_sections_capacity}",
        f"sample_period_us: {report.sample_period_s * 1e6:.4f}",
        f"end_to_end_latency_us: {report.end_to_end_latency_s * 1e6:.4f}",
        f"slack_cycles_per_sample: {report.slack_cycles_per_sample}",
        f"feasible: {'yes' if report.feasible else 'no'}",
    ]
    return "\n".join(lines)


def report_csv(report: ScheduleReport) -> str:
    """Single-row CSV rendering of a ScheduleReport."""
    import csv

    buf = io.StringIO()
    w = csv.writer(buf)
    fields = [
        "n_sections",
        "section_latency_s",
        "sections_per_array",
        "arrays_needed",
        "total_sections_capacity",
        "end_to_end_latency_s",
        "sample_period_s",
        "feasible",
        "slack_cycles_per_sample",
    ]
    w.writerow(fields)
    w.writerow([getattr(report, f) for f in fields])
    return buf.getvalue()
