"""Filter-cascade design: place map, per-section coefficients, and analytic views.

Each cochlear place coordinate x in [0, 1] (apex = 0, base = 1) maps to a
characteristic frequency through the Greenwood function. A section is a
two-pole-two-zero resonator parameterized by the pole angle theta_r
(radians/sample), pole radius r, rotator coefficients a0 = cos(theta_r) and
c0 = sin(theta_r), a zero-placement coefficient h, and a gain g that
normalizes the DC response to unity:

    H(z) = g * (z^2 + (-2*a0 + h*c0)*r*z + r^2) / (z^2 - 2*a0*r*z + r^2)

Sections are ordered base to apex (index 0 = highest CF), which is also the
signal-flow order of the cascade.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field

from .errors import DesignError

__all__ = [
    "HPolicy",
    "DesignParams",
    "ChannelCoeffs",
    "CascadeDesign",
    "RationalTF",
    "greenwood_cf",
    "place_positions",
    "pole_angle",
    "rotator_coeffs",
    "complex_zero_bound",
    "zero_coeff",
    "dc_gain_coeff",
    "design_cascade",
    "transfer_function",
    "poles_zeros",
    "validate_channel_coeffs",
    "write_coeff_table",
    "read_coeff_table",
    "COEFF_TABLE_HEADER",
]

GREENWOOD_SCALE_HZ = 165.4
GREENWOOD_EXPONENT = 2.1


@dataclass(frozen=True)
class HPolicy:
    """How the zero-placement coefficient h is chosen for a section.

    kind is one of:
      * ``proportional_to_c0`` -- h = c0 (default); keeps the zeros a fixed
        ratio above the pole frequency and always leaves them complex.
      * ``explicit`` -- h = value; validated against the complex-zero bound
        unless require_complex_zeros is False.
      * ``fraction_of_bound`` -- h = fraction * (2 + 2*a0)/c0 with
        0 < fraction < 1, i.e. a stated margin below the bound.
    """

    kind: str = "proportional_to_c0"
    value: float | None = None
    require_complex_zeros: bool = True

    _KINDS = ("proportional_to_c0", "explicit", "fraction_of_bound")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise DesignError(f"unknown h policy kind: {self.kind!r}")
        if self.kind == "proportional_to_c0" and self.value is not None:
            raise DesignError("proportional_to_c0 takes no value")
        if self.kind == "explicit" and self.value is None:
            raise DesignError("explicit h policy requires a value")
        if self.kind == "fraction_of_bound":
            if self.value is None or not 0.0 < self.value < 1.0:
                raise DesignError(
                    "fraction_of_bound requires a fraction in (0, 1), "
                    f"got {self.value!r}"
                )

    @classmethod
    def proportional_to_c0(cls) -> "HPolicy":
        return cls("proportional_to_c0")

    @classmethod
    def explicit(cls, value: float, require_complex_zeros: bool = True) -> "HPolicy":
        return cls("explicit", value, require_complex_zeros)

    @classmethod
    def fraction_of_bound(cls, fraction: float) -> "HPolicy":
        return cls("fraction_of_bound", fraction)


@dataclass(frozen=True)
class DesignParams:
    """Inputs to design_cascade.

    x runs from 1.0 at the base (highest CF) down to x_apex; sections are
    generated base first. r defaults to 1 - damping_zeta * theta_r per
    section, i.e. damping proportional to the pole angle, which keeps the
    relative bandwidth roughly uniform along the cascade. r_override, when
    given, replaces that rule with a global value or one value per section.
    """

    sample_rate_hz: float
    n_sections: int
    x_base: float = 1.0
    x_apex: float = 0.023
    damping_zeta: float = 0.1
    h_policy: HPolicy = field(default_factory=HPolicy.proportional_to_c0)
    r_override: float | tuple[float, ...] | None = None

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise DesignError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.n_sections < 1:
            raise DesignError(f"n_sections must be >= 1, got {self.n_sections}")
        if not (0.0 <= self.x_apex < self.x_base <= 1.0):
            raise DesignError(
                f"need 0 <= x_apex < x_base <= 1, got x_apex={self.x_apex}, x_base={self.x_base}"
            )
        if self.damping_zeta < 0:
            raise DesignError(f"damping_zeta must be >= 0, got {self.damping_zeta}")
        if isinstance(self.r_override, (list, tuple)):
            object.__setattr__(self, "r_override", tuple(float(r) for r in self.r_override))


@dataclass(frozen=True)
class ChannelCoeffs:
    """Resolved per-section filter parameters (one cascade stage)."""

    cf_hz: float
    theta_r: float
    r: float
    a0: float
    c0: float
    h: float
    g: float
    section_index: int


@dataclass(frozen=True)
class CascadeDesign:
    """Ordered base-to-apex section coefficients plus the sample rate.

    positions holds the place coordinate x of each section, parallel to
    sections; it is carried for the coefficient-table file format.
    """

    sections: tuple[ChannelCoeffs, ...]
    sample_rate_hz: float
    positions: tuple[float, ...]

    @property
    def n_sections(self) -> int:
        return len(self.sections)

    def cf_hz(self) -> list[float]:
        return [s.cf_hz for s in self.sections]


@dataclass(frozen=True)
class RationalTF:
    """Second-order rational transfer function in powers of z.

    Numerator b0*z^2 + b1*z + b2, denominator z^2 + a1_den*z + a2_den
    (a0_den is kept explicit and is always 1).
    """

    b0: float
    b1: float
    b2: float
    a0_den: float
    a1_den: float
    a2_den: float

    def evaluate(self, z: complex) -> complex:
        num = (self.b0 * z + self.b1) * z + self.b2
        den = (self.a0_den * z + self.a1_den) * z + self.a2_den
        return num / den


def greenwood_cf(x: float) -> float:
    """Characteristic frequency in Hz at place coordinate x (human map).

    f = 165.4 * (10^(2.1*x) - 1); x = 0 is the apex, x = 1 the base.
    """
    if not 0.0 <= x <= 1.0:
        raise DesignError(f"place coordinate must be in [0, 1], got {x}")
    return GREENWOOD_SCALE_HZ * (10.0 ** (GREENWOOD_EXPONENT * x) - 1.0)


def place_positions(n_sections: int, x_base: float = 1.0, x_apex: float = 0.023) -> list[float]:
    """Equally spaced place coordinates, base (high CF) first.

    Returns n_sections values from x_base down to x_apex inclusive; a single
    section sits at x_base.
    """
    if n_sections < 1:
        raise DesignError(f"n_sections must be >= 1, got {n_sections}")
    if not x_apex < x_base:
        raise DesignError(f"need x_apex < x_base, got {x_apex} >= {x_base}")
    if n_sections == 1:
        return [x_base]
    step = (x_base - x_apex) / (n_sections - 1)
    xs = [x_base - i * step for i in range(n_sections)]
    xs[-1] = x_apex  # exact endpoint regardless of rounding
    return xs


def pole_angle(cf_hz: float, sample_rate_hz: float) -> float:
    """Normalized pole frequency in radians per sample: 2*pi*cf/fs."""
    if cf_hz <= 0:
        raise DesignError(f"cf_hz must be positive, got {cf_hz}")
    if cf_hz >= sample_rate_hz / 2.0:
        raise DesignError(
            f"cf_hz={cf_hz} is at or above Nyquist ({sample_rate_hz / 2.0} Hz); section would alias"
        )
    return 2.0 * math.pi * cf_hz / sample_rate_hz


def rotator_coeffs(theta_r: float) -> tuple[float, float]:
    """Rotator coefficients (a0, c0) = (cos, sin) of the pole angle."""
    if not 0.0 < theta_r < math.pi:
        raise DesignError(f"theta_r must be in (0, pi), got {theta_r}")
    return math.cos(theta_r), math.sin(theta_r)


def complex_zero_bound(a0: float, c0: float) -> float:
    """Largest h for which the zeros stay complex: (2 + 2*a0) / c0."""
    if c0 <= 0:
        raise DesignError(f"c0 must be positive, got {c0}")
    return (2.0 + 2.0 * a0) / c0


def zero_coeff(a0: float, c0: float, policy: HPolicy | None = None) -> float:
    """Zero-placement coefficient h under the given policy.

    Policies that demand complex zeros validate h against the bound
    (2 + 2*a0)/c0; a violating explicit value is rejected rather than
    clipped.
    """
    if policy is None:
        policy = HPolicy.proportional_to_c0()
    if c0 <= 0:
        raise DesignError(f"c0 must be positive, got {c0}")
    bound = complex_zero_bound(a0, c0)
    if policy.kind == "proportional_to_c0":
        h = c0
    elif policy.kind == "fraction_of_bound":
        h = policy.value * bound
    else:
        h = policy.value
    if policy.require_complex_zeros and h >= bound:
        raise DesignError(
            f"h={h} violates the complex-zero bound {bound} for a0={a0}, c0={c0}"
        )
    return h


def dc_gain_coeff(a0: float, c0: float, h: float, r: float) -> float:
    """Gain g that makes the section's DC response exactly one."""
    num = 1.0 - 2.0 * a0 * r + r * r
    den = 1.0 - (2.0 * a0 - h * c0) * r + r * r
    if den == 0.0:
        raise DesignError(
            f"degenerate design: zero DC denominator for a0={a0}, c0={c0}, h={h}, r={r}"
        )
    return num / den


def _section_radius(params: DesignParams, theta_r: float, index: int) -> float:
    if params.r_override is None:
        return 1.0 - params.damping_zeta * theta_r
    if isinstance(params.r_override, tuple):
        if len(params.r_override) != params.n_sections:
            raise DesignError(
                f"r_override has {len(params.r_override)} entries for {params.n_sections} sections"
            )
        return params.r_override[index]
    return float(params.r_override)


def design_cascade(params: DesignParams) -> CascadeDesign:
    """Design all sections of the cascade from the place map.

    For each position, base to apex: CF from the Greenwood map, pole angle
    from the sample rate, rotator coefficients, radius from the damping
    rule, h from the policy, and the DC-normalizing gain. Any section that
    fails the Nyquist guard, the complex-zero bound, or the radius range
    aborts the whole design with its index.
    """
    positions = place_positions(params.n_sections, params.x_base, params.x_apex)
    sections = []
    for i, x in enumerate(positions):
        try:
            cf = greenwood_cf(x)
            theta = pole_angle(cf, params.sample_rate_hz)
            a0, c0 = rotator_coeffs(theta)
            r = _section_radius(params, theta, i)
            if not 0.0 < r <= 1.0:
                raise DesignError(f"pole radius r={r} outside (0, 1]")
            h = zero_coeff(a0, c0, params.h_policy)
            g = dc_gain_coeff(a0, c0, h, r)
            if g <= 0:
                raise DesignError(f"nonpositive DC gain g={g}")
        except DesignError as exc:
            raise DesignError(f"section {i} (x={x}): {exc}") from exc
        sections.append(
            ChannelCoeffs(
                cf_hz=cf, theta_r=theta, r=r, a0=a0, c0=c0, h=h, g=g, section_index=i
            )
        )
    design = CascadeDesign(
        sections=tuple(sections),
        sample_rate_hz=float(params.sample_rate_hz),
        positions=tuple(positions),
    )
    for s in design.sections:
        validate_channel_coeffs(s)
    return design


def validate_channel_coeffs(c: ChannelCoeffs, tol: float = 1e-12) -> None:
    """Check the structural invariants of a designed section."""
    if abs(c.a0 * c.a0 + c.c0 * c.c0 - 1.0) > tol:
        raise DesignError(f"section {c.section_index}: a0^2 + c0^2 != 1")
    if not 0.0 < c.theta_r < math.pi:
        raise DesignError(f"section {c.section_index}: theta_r out of (0, pi)")
    if c.c0 <= 0:
        raise DesignError(f"section {c.section_index}: c0 must be positive")
    if not 0.0 < c.r <= 1.0:
        raise DesignError(f"section {c.section_index}: r out of (0, 1]")
    if c.g <= 0:
        raise DesignError(f"section {c.section_index}: g must be positive")


def transfer_function(coeffs: ChannelCoeffs) -> RationalTF:
    """Polynomial coefficients of the section's transfer function."""
    r = coeffs.r
    return RationalTF(
        b0=coeffs.g,
        b1=coeffs.g * (-2.0 * coeffs.a0 + coeffs.h * coeffs.c0) * r,
        b2=coeffs.g * r * r,
        a0_den=1.0,
        a1_den=-2.0 * coeffs.a0 * r,
        a2_den=r * r,
    )


def _quadratic_roots(b: float, c: float) -> tuple[complex, complex]:
    # roots of z^2 + b*z + c, stable formulation
    disc = b * b - 4.0 * c
    if disc >= 0.0:
        sq = math.sqrt(disc)
        # avoid cancellation: compute the larger-magnitude root first
        if b >= 0:
            z1 = (-b - sq) / 2.0
        else:
            z1 = (-b + sq) / 2.0
        z2 = c / z1 if z1 != 0.0 else (-b - z1)
        return complex(z1), complex(z2)
    sq = cmath.sqrt(complex(disc))
    return (-b + sq) / 2.0, (-b - sq) / 2.0


def poles_zeros(
    coeffs: ChannelCoeffs,
) -> tuple[tuple[tuple[float, float], tuple[float, float]],
           tuple[tuple[float, float], tuple[float, float]]]:
    """Pole pair and zero pair as (radius, angle) tuples.

    Roots are found numerically from the transfer-function polynomials.
    When h is below the complex-zero bound both zeros are complex at the
    pole radius; above it they are real and reported with angles 0 or pi.
    """
    tf = transfer_function(coeffs)
    poles = _quadratic_roots(tf.a1_den, tf.a2_den)
    zeros = _quadratic_roots(tf.b1 / tf.b0, tf.b2 / tf.b0)

    def polar(z: complex) -> tuple[float, float]:
        return abs(z), cmath.phase(z)

    return (polar(poles[0]), polar(poles[1])), (polar(zeros[0]), polar(zeros[1]))


# ---------------------------------------------------------------------------
# Coefficient-table file format
#
# CSV with header `section,x,cf_hz,theta_r,r,a0,c0,h,g`, one row per section,
# base first. Values are printed with 17 significant digits so a read-back
# reproduces the design bit for bit. The sample rate is implied by each row
# (fs = 2*pi*cf_hz/theta_r) and is validated for consistency on read.
# ---------------------------------------------------------------------------

COEFF_TABLE_HEADER = ("section", "x", "cf_hz", "theta_r", "r", "a0", "c0", "h", "g")


def write_coeff_table(design: CascadeDesign, path_or_file) -> None:
    """Write the design as a coefficient-table CSV (base section first)."""
    if hasattr(path_or_file, "write"):
        _write_coeff_rows(design, path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as f:
            _write_coeff_rows(design, f)


def _write_coeff_rows(design: CascadeDesign, f) -> None:
    w = csv.writer(f)
    w.writerow(COEFF_TABLE_HEADER)
    for x, s in zip(design.positions, design.sections):
        w.writerow(
            [s.section_index]
            + [format(v, ".17g") for v in (x, s.cf_hz, s.theta_r, s.r, s.a0, s.c0, s.h, s.g)]
        )


def read_coeff_table(path_or_file) -> CascadeDesign:
    """Read a coefficient-table CSV back into a CascadeDesign."""
    if hasattr(path_or_file, "read"):
        return _read_coeff_rows(path_or_file)
    with open(path_or_file, "r", newline="", encoding="utf-8") as f:
        return _read_coeff_rows(f)


def _read_coeff_rows(f) -> CascadeDesign:
    reader = csv.reader(f)
    try:
        header = next(reader)
    except StopIteration:
        raise DesignError("coefficient table is empty") from None
    if tuple(h.strip() for h in header) != COEFF_TABLE_HEADER:
        raise DesignError(
            f"bad coefficient-table header: expected {','.join(COEFF_TABLE_HEADER)}"
        )
    sections = []
    positions = []
    fs = None
    for row in reader:
        if not row:
            continue
        if len(row) != len(COEFF_TABLE_HEADER):
            raise DesignError(f"coefficient row has {len(row)} fields: {row!r}")
        idx = int(row[0])
        x, cf, theta, r, a0, c0, h, g = (float(v) for v in row[1:])
        if theta <= 0 or cf <= 0:
            raise DesignError(f"section {idx}: cf_hz and theta_r must be positive")
        row_fs = 2.0 * math.pi * cf / theta
        if fs is None:
            fs = row_fs
        elif abs(row_fs - fs) > 1e-6 * fs:
            raise DesignError(
                f"section {idx}: implied sample rate {row_fs} disagrees with {fs}"
            )
        positions.append(x)
        sections.append(
            ChannelCoeffs(cf_hz=cf, theta_r=theta, r=r, a0=a0, c0=c0, h=h, g=g,
                          section_index=idx)
        )
    if not sections:
        raise DesignError("coefficient table has no data rows")
    expected = list(range(len(sections)))
    if [s.section_index for s in sections] != expected:
        raise DesignError("section indices must be 0..N-1 in order, base first")
    return CascadeDesign(sections=tuple(sections), sample_rate_hz=fs,
                         positions=tuple(positions))
