"""Low-fidelity open-water performance prediction.

Classical blade-element / momentum balance per section with a Prandtl
tip-loss factor.  For every advance ratio the axial and tangential
inductions are found by a damped fixed-point iteration; thrust and torque
coefficients follow by radial integration of the section force densities,
and the performance labels come from the maximum of the interpolated
efficiency curve.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .geometry import RADII, BladeGeometry, SectionSpec, build_blade, section_table

# Advance-ratio grid: 0.25 to 1.60 in steps of 0.05 (28 operating states).
DEFAULT_GRID = np.round(np.linspace(0.25, 1.60, 28), 6)

DRAG_COEFF = 0.008      # section drag coefficient, fixed for all stations
CL_LIMIT = 1.5          # crude stall guard on the thin-airfoil lift
SIN_PHI_FLOOR = 1e-6
# The tip-loss factor is exactly 0 at r/R = 1; the floor keeps the momentum
# inversion finite AND large enough that the damped iteration still contracts
# at the tip station (a looser floor makes the tip map divergent, which turns
# the last-iterate fallback into high-frequency noise on kT).
TIP_LOSS_FLOOR = 0.05

RELAXATION = 0.3        # damping of the induction fixed point
TOLERANCE = 1e-6        # max-norm of the applied update
MAX_ITERATIONS = 500

# Inductions are confined to their physically meaningful windows; the
# implied-value clips below keep the momentum inversion real-valued.
_Q_MIN = -0.2499
_A_MAX = 0.95
_AT_MIN, _AT_MAX = -0.49, 0.95

ETA_MESH_STEP = 1e-3    # fine mesh for the efficiency maximization

CURVE_CSV_HEADER = "J,kT,kQ,eta"

LABEL_FIELDS = ("eta_star", "j_star", "kt_star")

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class StationSolution:
    """Converged (or last-iterate) state of one section at one advance ratio."""

    a: float         # axial induction
    a_tan: float     # tangential induction
    phi: float       # inflow angle, rad
    cl: float
    dkt: float       # dkT/dr
    dkq: float       # dkQ/dr
    converged: bool


@dataclass(frozen=True)
class OpenWaterCurve:
    grid: np.ndarray            # advance ratios, shape (n,)
    kt: np.ndarray              # thrust coefficients, shape (n,)
    kq: np.ndarray              # torque coefficients, shape (n,)
    station_flags: np.ndarray   # per-point convergence, shape (n, n_stations)


@dataclass(frozen=True)
class LabelVector:
    """Performance triple: peak efficiency, its advance ratio, thrust there."""

    eta_star: float
    j_star: float
    kt_star: float

    def __post_init__(self):
        for name in LABEL_FIELDS:
            object.__setattr__(self, name, float(getattr(self, name)))

    def to_array(self) -> np.ndarray:
        return np.array([self.eta_star, self.j_star, self.kt_star])

    @classmethod
    def from_array(cls, values) -> "LabelVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (3,):
            raise ValueError(f"expected 3 label values, got shape {values.shape}")
        return cls(*values)


def efficiency(j, kt, kq):
    """Open-water efficiency J/(2 pi) * kT/kQ."""
    if np.any(np.asarray(kq) <= 0):
        raise ValueError(f"kq must be positive, got {kq}")
    return j * kt / (2.0 * np.pi * kq)


def tip_loss(r_norm, sin_phi, n_blades):
    arg = -(n_blades / 2.0) * (1.0 - r_norm) / (r_norm * sin_phi)
    f = (2.0 / np.pi) * np.arccos(np.exp(np.minimum(arg, 0.0)))
    return np.maximum(f, TIP_LOSS_FLOOR)


def _blade_element(r, pitch, chord, camber, j, n_blades, a, a_tan):
    """Section force densities for the current induction state.

    Velocities are normalized by n*D: axial u = J(1+a), tangential
    w = pi*r*(1-a').  Returns (phi, cl, W^2, F, dkt, dkq).
    """
    u = j * (1.0 + a)
    w = np.pi * r * (1.0 - a_tan)
    phi = np.arctan2(u, w)
    sin_phi = np.maximum(np.sin(phi), SIN_PHI_FLOOR)
    cos_phi = np.cos(phi)
    alpha = np.arctan(pitch / (np.pi * r)) - phi
    cl = np.clip(2.0 * np.pi * (alpha + 2.0 * camber), -CL_LIMIT, CL_LIMIT)
    w_sq = u * u + w * w
    f = tip_loss(r, sin_phi, n_blades)
    dkt = 0.25 * n_blades * chord * w_sq * (cl * cos_phi - DRAG_COEFF * sin_phi)
    dkq = 0.125 * n_blades * chord * w_sq * (cl * sin_phi + DRAG_COEFF * cos_phi) * r
    return phi, cl, w_sq, f, dkt, dkq


def implied_inductions(r, pitch, chord, camber, j, n_blades, a, a_tan):
    """Invert the momentum balance for the inductions implied by the current
    blade-element forces.  Shared by the fixed-point solver and test oracles."""
    phi, cl, w_sq, f, dkt, dkq = _blade_element(
        r, pitch, chord, camber, j, n_blades, a, a_tan
    )
    q = np.clip(dkt / (np.pi * j**2 * r * f), _Q_MIN, _A_MAX * (1.0 + _A_MAX))
    a_new = 0.5 * (-1.0 + np.sqrt(1.0 + 4.0 * q))
    at_new = dkq / (0.5 * np.pi**2 * j * r**3 * (1.0 + a) * f)
    at_new = np.clip(at_new, _AT_MIN, _AT_MAX)
    return a_new, at_new, phi, cl, dkt, dkq


def _solve_array(r, pitch, chord, camber, j, n_blades):
    """Damped fixed-point solve of the induction balance, elementwise over
    broadcast station/operating-point arrays.

    Each element iterates until its own applied update falls below
    TOLERANCE, then freezes; stragglers are flagged unconverged after
    MAX_ITERATIONS and keep their last iterate.
    """
    r, pitch, chord, camber, j = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (r, pitch, chord, camber, j))
    )
    a = np.zeros_like(r)
    a_tan = np.zeros_like(r)
    converged = np.zeros(r.shape, dtype=bool)

    for _ in range(MAX_ITERATIONS):
        active = ~converged
        if not active.any():
            break
        a_new, at_new, _, _, _, _ = implied_inductions(
            r, pitch, chord, camber, j, n_blades, a, a_tan
        )
        step_a = RELAXATION * (a_new - a)
        step_at = RELAXATION * (at_new - a_tan)
        a = np.where(active, a + step_a, a)
        a_tan = np.where(active, a_tan + step_at, a_tan)
        done = np.maximum(np.abs(step_a), np.abs(step_at)) < TOLERANCE
        converged |= active & done

    _, _, phi, cl, dkt, dkq = implied_inductions(
        r, pitch, chord, camber, j, n_blades, a, a_tan
    )
    return a, a_tan, phi, cl, dkt, dkq, converged


def solve_station(section: SectionSpec, j: float, n_blades: int) -> StationSolution:
    """Solve the induction balance of a single section at one advance ratio."""
    if j <= 0:
        raise ValueError(f"advance ratio must be positive, got {j}")
    a, a_tan, phi, cl, dkt, dkq, converged = _solve_array(
        np.array([section.r_norm]),
        np.array([section.pitch_ratio]),
        np.array([section.chord_ratio]),
        np.array([section.camber_ratio]),
        np.array([j]),
        n_blades,
    )
    return StationSolution(
        float(a[0]), float(a_tan[0]), float(phi[0]), float(cl[0]),
        float(dkt[0]), float(dkq[0]), bool(converged[0]),
    )


def open_water(geometry: BladeGeometry, grid=None) -> OpenWaterCurve:
    """Open-water curve: per-J station solves, trapezoid-integrated over r."""
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(grid <= 0):
        raise ValueError("grid must be a 1-d array of positive advance ratios")
    table = section_table(geometry)
    r = table[:, 0][None, :]          # (1, n_stations)
    pitch = table[:, 1][None, :]
    chord = table[:, 2][None, :]
    camber = table[:, 3][None, :]
    j = grid[:, None]                 # (n_j, 1)
    _, _, _, _, dkt, dkq, converged = _solve_array(
        r, pitch, chord, camber, j, geometry.design.n_blades
    )
    kt = _trapezoid(dkt, RADII, axis=1)
    kq = _trapezoid(dkq, RADII, axis=1)
    return OpenWaterCurve(grid=grid, kt=kt, kq=kq, station_flags=converged)


def simulate_design(design, grid=None) -> OpenWaterCurve:
    return open_water(build_blade(design), grid=grid)


def extract_labels(curve: OpenWaterCurve):
    """Performance labels from the maximum of the interpolated efficiency.

    kT(J) and kQ(J) are taken piecewise linear on the grid; eta is evaluated
    on a fine mesh over the region with positive thrust and torque.  Returns
    None (the invalid marker) when no such region exists or the maximizer
    sits on a boundary of its region.
    """
    grid, kt, kq = curve.grid, curve.kt, curve.kq
    n_fine = int(round((grid[-1] - grid[0]) / ETA_MESH_STEP)) + 1
    j_fine = grid[0] + ETA_MESH_STEP * np.arange(n_fine)
    kt_fine = np.interp(j_fine, grid, kt)
    kq_fine = np.interp(j_fine, grid, kq)
    valid = (kt_fine > 0) & (kq_fine > 0)
    if not valid.any():
        return None

    eta = np.where(valid, j_fine * kt_fine / (2.0 * np.pi * np.where(valid, kq_fine, 1.0)), -np.inf)
    best = int(np.argmax(eta))
    # Reject maximizers on the edge of their contiguous valid region (which
    # includes the ends of the operating range itself).
    if best == 0 or best == n_fine - 1:
        return None
    if not (valid[best - 1] and valid[best + 1]):
        return None
    return LabelVector(
        eta_star=float(eta[best]),
        j_star=float(j_fine[best]),
        kt_star=float(kt_fine[best]),
    )


def curve_to_csv(curve: OpenWaterCurve) -> str:
    """Open-water curve as CSV; eta is blank where torque is non-positive."""
    lines = [CURVE_CSV_HEADER]
    for j, kt, kq in zip(curve.grid, curve.kt, curve.kq):
        eta = repr(float(efficiency(j, kt, kq))) if kq > 0 else ""
        lines.append(f"{j!r},{float(kt)!r},{float(kq)!r},{eta}")
    return "\n".join(lines) + "\n"
