"""Closed-form lens and link-budget calculators for tag front-end design."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import db_to_linear, dbm_to_watts

FOUR_PI_CUBED = (4.0 * math.pi) ** 3


@dataclass(frozen=True)
class LensDesign:
    """Biconvex dielectric lens over a backscatter pixel array.

    Attributes:
        focal_length: Lens focal length F (m).
        half_extent: Distance from the center pixel to the outermost pixel (m).
        epsilon_r: Relative permittivity of the lens material.
    """

    focal_length: float
    half_extent: float
    epsilon_r: float

    def __post_init__(self):
        if self.focal_length <= 0:
            raise ValueError("focal_length must be positive")
        if self.half_extent < 0:
            raise ValueError("half_extent must be >= 0")
        if self.epsilon_r < 1:
            raise ValueError("epsilon_r must be >= 1")


def field_of_view(design: LensDesign) -> float:
    """Angular field of view of the lens (rad): 2 atan(h / 2F)."""
    return 2.0 * math.atan(design.half_extent / (2.0 * design.focal_length))


def lens_radius(design: LensDesign) -> float:
    """Surface radius of each convex face (m): 2F (sqrt(eps_r) - 1)."""
    return design.focal_length * 2.0 * (math.sqrt(design.epsilon_r) - 1.0)


@dataclass(frozen=True)
class LinkBudget:
    """Monostatic backscatter link, all linear units.

    Attributes:
        p_t: Transmit power (W).
        p_r_min: Minimum detectable received power (W).
        g_t: Transmit antenna gain (linear).
        g_r: Receive antenna gain (linear).
        wavelength: Carrier wavelength (m).
        rcs: Tag radar cross-section (m^2).
    """

    p_t: float
    p_r_min: float
    g_t: float
    g_r: float
    wavelength: float
    rcs: float

    def __post_init__(self):
        for name in ("p_t", "p_r_min", "g_t", "g_r", "wavelength", "rcs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_db(
        cls,
        p_t_dbm: float,
        p_r_min_dbm: float,
        g_t_dbi: float,
        g_r_dbi: float,
        wavelength: float,
        rcs_m2: float,
    ) -> "LinkBudget":
        return cls(
            p_t=dbm_to_watts(p_t_dbm),
            p_r_min=dbm_to_watts(p_r_min_dbm),
            g_t=db_to_linear(g_t_dbi),
            g_r=db_to_linear(g_r_dbi),
            wavelength=wavelength,
            rcs=rcs_m2,
        )


def max_range(budget: LinkBudget, rcs_m2: float | None = None) -> float:
    """Largest range at which the backscatter return stays detectable (m).

    Fourth root of Pt Gt Gr lambda^2 sigma / ((4 pi)^3 Pr_min).
    """
    sigma = budget.rcs if rcs_m2 is None else rcs_m2
    num = budget.p_t * budget.g_t * budget.g_r * budget.wavelength**2 * sigma
    return (num / (FOUR_PI_CUBED * budget.p_r_min)) ** 0.25


def load_rcs_table(path: str | Path) -> list[tuple[float, float]]:
    """CSV with header angle_deg,rcs_dbsm; angles strictly increasing."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"angle_deg", "rcs_dbsm"}:
            raise ValueError("RCS table needs exactly the columns angle_deg,rcs_dbsm")
        for rec in reader:
            rows.append((float(rec["angle_deg"]), float(rec["rcs_dbsm"])))
    if len(rows) < 2:
        raise ValueError("RCS table needs at least two rows")
    angles = [a for a, _ in rows]
    if any(b <= a for a, b in zip(angles, angles[1:])):
        raise ValueError("RCS table angles must be strictly increasing")
    return rows


def rcs_at_angle(table: list[tuple[float, float]], angle_deg: float) -> float:
    """RCS (m^2) interpolated linearly in the dB domain."""
    angles = np.array([a for a, _ in table])
    dbsm = np.array([v for _, v in table])
    return 10.0 ** (float(np.interp(angle_deg, angles, dbsm)) / 10.0)


def range_vs_angle(
    budget: LinkBudget, table: list[tuple[float, float]], angles_deg=None
) -> list[tuple[float, float]]:
    """Maximum range per angle using the angle-dependent RCS table."""
    if angles_deg is None:
        angles_deg = [a for a, _ in table]
    return [
        (float(a), max_range(budget, rcs_m2=rcs_at_angle(table, float(a))))
        for a in angles_deg
    ]


def angular_coverage(
    curve: list[tuple[float, float]], fraction_of_peak: float = 0.5
) -> float:
    """Total angular extent (deg) where range stays above the peak fraction.

    Summed over a uniform angle grid, so disjoint lobes all count.
    """
    angles = np.array([a for a, _ in curve])
    ranges = np.array([r for _, r in curve])
    grid = np.linspace(angles[0], angles[-1], 2001)
    vals = np.interp(grid, angles, ranges)
    above = vals >= fraction_of_peak * np.max(ranges)
    step = grid[1] - grid[0]
    return float(np.sum(above) * step)


def design_report(design: LensDesign | None, budget: LinkBudget | None) -> dict:
    """All derived quantities for a design/budget, JSON-friendly."""
    out: dict = {}
    if design is not None:
        out["lens"] = {
            "focal_length_m": design.focal_length,
            "half_extent_m": design.half_extent,
            "epsilon_r": design.epsilon_r,
            "field_of_view_deg": math.degrees(field_of_view(design)),
            "surface_radius_m": lens_radius(design),
        }
    if budget is not None:
        out["link"] = {
            "p_t_w": budget.p_t,
            "p_r_min_w": budget.p_r_min,
            "g_t": budget.g_t,
            "g_r": budget.g_r,
            "wavelength_m": budget.wavelength,
            "rcs_m2": budget.rcs,
            "max_range_m": max_range(budget),
        }
    return out
