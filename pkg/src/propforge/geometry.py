"""Parametric blade geometry: maps a 6-variable design vector to radial
section distributions (pitch, chord, camber, thickness) at fixed stations.

The radial shape functions are analytic single-peak curves: the pitch and
chord weights set the value and radial position of each maximum.  Root/tip
boundary fractions (CHORD_ROOT_FRACTION etc.) are modelling stand-ins, see
README "Modelling assumptions".
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

# Normalized radial stations r/R at which every blade is discretized.
RADII = np.array([0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0])

# Admissible values / ranges of the design variables.
BLADE_COUNTS = (2, 3, 4, 5)
PITCH_RANGE = (0.5, 1.5)        # nominal pitch offset P
PITCH_POS_RANGE = (0.5, 0.9)    # w_rp, radial position of max pitch
CHORD_RANGE = (0.5, 1.0)        # w_c, weight for max chord
CHORD_POS_RANGE = (0.5, 0.8)    # w_rc, radial position of max chord
CAMBER_RANGE = (0.0, 0.05)      # camber-to-chord ratio C

# Names in canonical vector order (matches the dataset CSV columns).
DESIGN_FIELDS = ("n_blades", "P", "w_rp", "w_c", "w_rc", "camber")

CHORD_SCALE = 0.35          # c/D at the peak for w_c = 1
CHORD_ROOT_FRACTION = 0.6   # chord shape value at r/R = 0.2
CHORD_TIP_FRACTION = 0.08   # chord shape value at r/R = 1.0
CAMBER_TAPER_START = 0.9    # camber constant inboard, tapers to 0 at the tip
THICKNESS_ROOT = 0.035      # t/D at r/R = 0.2 (export only)
THICKNESS_TIP = 0.003       # t/D at r/R = 1.0

SECTION_CSV_HEADER = "r_norm,pitch_ratio,chord_ratio,camber_ratio,thickness_ratio"

_CONTINUOUS_RANGES = {
    "P": PITCH_RANGE,
    "w_rp": PITCH_POS_RANGE,
    "w_c": CHORD_RANGE,
    "w_rc": CHORD_POS_RANGE,
    "camber": CAMBER_RANGE,
}


@dataclass(frozen=True)
class DesignVector:
    """The six independent design variables of a propeller."""

    n_blades: int
    P: float        # nominal pitch ratio offset
    w_rp: float     # radial position of maximum pitch
    w_c: float      # weight for maximum chord
    w_rc: float     # radial position of maximum chord
    camber: float   # camber-to-chord ratio, constant inboard of the tip

    def __post_init__(self):
        object.__setattr__(self, "n_blades", int(self.n_blades))
        if self.n_blades not in BLADE_COUNTS:
            raise ValueError(
                f"n_blades must be one of {BLADE_COUNTS}, got {self.n_blades}"
            )
        for name, (lo, hi) in _CONTINUOUS_RANGES.items():
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not np.isfinite(value) or not (lo <= value <= hi):
                raise ValueError(f"{name} must be in [{lo}, {hi}], got {value}")

    def to_array(self) -> np.ndarray:
        """Design variables as a float vector in DESIGN_FIELDS order."""
        return np.array(
            [self.n_blades, self.P, self.w_rp, self.w_c, self.w_rc, self.camber],
            dtype=float,
        )

    @classmethod
    def from_array(cls, values) -> "DesignVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (6,):
            raise ValueError(f"expected 6 design values, got shape {values.shape}")
        return cls(int(round(values[0])), *values[1:])


@dataclass(frozen=True)
class SectionSpec:
    """Blade section at one radial station, all ratios nondimensional."""

    r_norm: float
    pitch_ratio: float      # P/D
    chord_ratio: float      # c/D
    camber_ratio: float     # f/c
    thickness_ratio: float  # t/D


@dataclass(frozen=True)
class BladeGeometry:
    design: DesignVector
    sections: tuple  # SectionSpec at each station of RADII, in order


def pitch_shape(r_norm, peak_pos):
    """Single-peak pitch distribution, value 1 at peak_pos, mild falloff."""
    return 1.0 - 0.2 * ((np.asarray(r_norm) - peak_pos) / 0.8) ** 2


def chord_shape(r_norm, peak_pos):
    """Piecewise-quadratic chord distribution: 1 at peak_pos with zero slope,
    falling to CHORD_ROOT_FRACTION at r=0.2 and CHORD_TIP_FRACTION at r=1."""
    r = np.asarray(r_norm, dtype=float)
    root = 1.0 - (1.0 - CHORD_ROOT_FRACTION) * ((r - peak_pos) / (0.2 - peak_pos)) ** 2
    tip = 1.0 - (1.0 - CHORD_TIP_FRACTION) * ((r - peak_pos) / (1.0 - peak_pos)) ** 2
    return np.where(r <= peak_pos, root, tip)


def camber_taper(r_norm, camber):
    """Constant camber inboard, linear taper to zero over the tip region."""
    r = np.asarray(r_norm, dtype=float)
    taper = np.clip((1.0 - r) / (1.0 - CAMBER_TAPER_START), 0.0, 1.0)
    return camber * np.where(r <= CAMBER_TAPER_START, 1.0, taper)


def thickness_law(r_norm):
    """Fixed linear t/D distribution, used for export/rendering only."""
    r = np.asarray(r_norm, dtype=float)
    return THICKNESS_ROOT + (THICKNESS_TIP - THICKNESS_ROOT) * (r - 0.2) / 0.8


def eval_distributions(design: DesignVector, r_norm: float) -> SectionSpec:
    """Evaluate all radial distributions of a design at one station."""
    if not (0.2 <= r_norm <= 1.0):
        raise ValueError(f"r_norm must be in [0.2, 1.0], got {r_norm}")
    return SectionSpec(
        r_norm=float(r_norm),
        pitch_ratio=float(design.P * pitch_shape(r_norm, design.w_rp)),
        chord_ratio=float(CHORD_SCALE * design.w_c * chord_shape(r_norm, design.w_rc)),
        camber_ratio=float(camber_taper(r_norm, design.camber)),
        thickness_ratio=float(thickness_law(r_norm)),
    )


def build_blade(design: DesignVector) -> BladeGeometry:
    """Discretize a design into sections at the standard stations."""
    sections = tuple(eval_distributions(design, r) for r in RADII)
    return BladeGeometry(design=design, sections=sections)


def section_table(geometry: BladeGeometry) -> np.ndarray:
    """Flat (n_stations, 5) table: r_norm, pitch, chord, camber, thickness."""
    return np.array(
        [
            [s.r_norm, s.pitch_ratio, s.chord_ratio, s.camber_ratio, s.thickness_ratio]
            for s in geometry.sections
        ]
    )


def export_sections(geometry: BladeGeometry) -> list[dict]:
    """Section table as a list of row dicts (service/UI payload)."""
    cols = SECTION_CSV_HEADER.split(",")
    return [dict(zip(cols, map(float, row))) for row in section_table(geometry)]


def sections_to_csv(geometry: BladeGeometry) -> str:
    lines = [SECTION_CSV_HEADER]
    for row in section_table(geometry):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def sections_from_csv(text: str) -> np.ndarray:
    """Parse a section-table CSV back into the (n, 5) numeric table."""
    reader = io.StringIO(text)
    header = reader.readline().strip()
    if header != SECTION_CSV_HEADER:
        raise ValueError(f"unexpected section CSV header: {header!r}")
    rows = []
    for line in reader:
        line = line.strip()
        if line:
            rows.append([float(v) for v in line.split(",")])
    return np.array(rows)
