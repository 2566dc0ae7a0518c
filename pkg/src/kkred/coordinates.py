"""Monotone change of variable u(z) and the u-space radius evaluators.

The new coordinate is the antiderivative

    u(z) = integral  sqrt(1 + sum_a rho_a'(z)^2) / (rho_1(z) ... rho_{d-1}(z)) dz ,

fixed by u(u_origin_z) = 0.  The integrand is positive wherever all radii are,
so u is strictly increasing and invertible; the map is tabulated by adaptive
composite Simpson quadrature and interpolated with a monotone cubic Hermite
using the exact du/dz knot slopes (monotonicity of the interpolant is verified
panel by panel at construction).  The inverse polishes roots of the forward
interpolant, so the two directions are mutual inverses to root-solve accuracy
rather than to grid resolution.

Derivatives of the u-space radii w_a(u) = rho_a(z(u)) are exact chain-rule
expressions through dz/du = 1/I(z) (I being the integrand above), never
interpolant derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import DegenerateGeometryError, SolverError, ValidationError
from .geometry import Geometry

__all__ = ["UMap", "build_u_map", "u_of_z", "z_of_u", "varrho", "varrho_evaluators", "u_integrand"]


def u_integrand(geom: Geometry, z):
    """I(z) = rho_d / (rho_1 ... rho_{d-1}), the du/dz density."""
    rho, drho, _ = geom.radii(z)
    rd = np.sqrt(1.0 + np.sum(drho * drho, axis=0))
    return rd / np.prod(rho, axis=0)


@dataclass(frozen=True, eq=False)
class UMap:
    """Tabulated strictly increasing map z <-> u with monotone cubic interpolation."""

    z_grid: np.ndarray
    u_grid: np.ndarray
    dzdu_grid: np.ndarray
    u_origin_z: float
    tol: float
    truncated_low: bool = False
    truncated_high: bool = False

    def __post_init__(self):
        if self.z_grid.size != self.u_grid.size or self.z_grid.size < 2:
            raise ValidationError("u-map needs matching z/u grids with at least 2 points")
        if np.any(np.diff(self.z_grid) <= 0) or np.any(np.diff(self.u_grid) <= 0):
            raise ValidationError("u-map grids must be strictly increasing")
        fwd = CubicHermiteSpline(self.z_grid, self.u_grid, 1.0 / self.dzdu_grid)
        if _min_panel_derivative(fwd) <= 0.0:
            raise ValidationError("u-map interpolant is not strictly increasing")
        object.__setattr__(self, "_fwd", fwd)
        object.__setattr__(self, "_dfwd", fwd.derivative())

    @property
    def z_min(self) -> float:
        return float(self.z_grid[0])

    @property
    def z_max(self) -> float:
        return float(self.z_grid[-1])

    @property
    def u_min(self) -> float:
        return float(self.u_grid[0])

    @property
    def u_max(self) -> float:
        return float(self.u_grid[-1])


def _min_panel_derivative(spline: CubicHermiteSpline) -> float:
    """Exact minimum of the piecewise-cubic's derivative over all panels.

    The derivative is a quadratic per panel; its minimum is attained at a
    panel edge or at the vertex, so the check is exact, not sampled.
    """
    c3, c2, c1 = spline.c[0], spline.c[1], spline.c[2]
    widths = np.diff(spline.x)
    candidates = [c1, 3.0 * c3 * widths**2 + 2.0 * c2 * widths + c1]
    a, b = 3.0 * c3, 2.0 * c2
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.where(a != 0.0, -b / (2.0 * a), -1.0)
    inside = (vertex > 0.0) & (vertex < widths)
    vertex_vals = np.where(inside, a * vertex**2 + b * vertex + c1, np.inf)
    candidates.append(vertex_vals)
    return float(np.min(np.concatenate(candidates)))


def _kahan_cumsum(values) -> np.ndarray:
    """Compensated running sum; keeps the flat-case identity u(z)=z at ~1e-15."""
    out = np.empty(len(values))
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values):
        y = v - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


def _composite_simpson_knots(f: Callable, a: float, b: float, n_sub: int):
    """Simpson value on each of n_sub equal subpanels of [a, b].

    Returns (right-edge knots, per-subpanel integrals); f must be vectorized.
    """
    edges = np.linspace(a, b, n_sub + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    fe = f(edges)
    fm = f(mids)
    width = (b - a) / n_sub
    vals = width / 6.0 * (fe[:-1] + 4.0 * fm + fe[1:])
    return edges[1:], vals


def _tabulate_side(f: Callable, a: float, b: float, tol_density: float, h_max: float,
                   max_panels: int):
    """Tabulated cumulative integral of f over [a, b] (a < b).

    The interval is laid out as a single uniform sequence of panels no wider
    than h_max.  Each panel compares Simpson against its two-subpanel
    refinement; panels passing the Richardson estimate contribute their two
    half-panel integrals as knots, the (rare) failing ones keep doubling their
    subpanel count until they meet their share of the error budget.
    """
    n_panels = max(4, int(math.ceil((b - a) / max(h_max, 1e-12))))
    if n_panels > max_panels:
        raise SolverError("u-map quadrature exceeded the total panel budget")
    edges = np.linspace(a, b, n_panels + 1)
    x0, x1 = edges[:-1], edges[1:]
    mid = 0.5 * (x0 + x1)
    q1 = 0.5 * (x0 + mid)
    q2 = 0.5 * (mid + x1)
    fe = f(edges)
    f0, f1 = fe[:-1], fe[1:]
    fm, fq1, fq2 = f(mid), f(q1), f(q2)
    width = (b - a) / n_panels
    s_left = width / 12.0 * (f0 + 4.0 * fq1 + fm)
    s_right = width / 12.0 * (fm + 4.0 * fq2 + f1)
    coarse = width / 6.0 * (f0 + 4.0 * fm + f1)
    est = np.abs(s_left + s_right - coarse) / 15.0
    ok = est <= tol_density * width

    knots = [a]
    increments = []
    total_sub = 2 * n_panels
    for j in range(n_panels):
        if ok[j]:
            knots.extend((mid[j], x1[j]))
            increments.extend((s_left[j], s_right[j]))
            continue
        n = 2
        while True:
            _, vals_n = _composite_simpson_knots(f, x0[j], x1[j], n)
            sub_edges, vals_2n = _composite_simpson_knots(f, x0[j], x1[j], 2 * n)
            err = abs(float(np.sum(vals_2n)) - float(np.sum(vals_n))) / 15.0
            if err <= tol_density * width or 2 * n >= max_panels:
                break
            n *= 2
        if err > tol_density * width:
            raise SolverError(
                f"u-map quadrature cannot reach tol on [{x0[j]}, {x1[j]}] within panel budget"
            )
        total_sub += 2 * n
        if total_sub > max_panels:
            raise SolverError("u-map quadrature exceeded the total panel budget")
        knots.extend(sub_edges.tolist())
        increments.extend(vals_2n.tolist())
    increments = np.asarray(increments)
    if np.any(increments <= 0.0):
        raise SolverError("u-map integrand lost positivity on a subpanel")
    return np.asarray(knots), _kahan_cumsum(increments)


def _truncate_range(geom: Geometry, z_lo: float, z_hi: float, origin: float, rho_min: float):
    """Restrict [z_lo, z_hi] to the component around origin where all radii exceed rho_min.

    Profiles not flagged allows_degeneration must stay positive on the whole
    range; flagged ones shrink the domain instead.
    """
    scan = np.linspace(z_lo, z_hi, 2049)
    rho, _, _ = geom.radii(scan)
    min_rho = np.min(rho, axis=0)
    strict = not any(p.allows_degeneration for p in geom.profiles)
    if strict:
        if np.any(min_rho <= 0.0):
            zbad = scan[int(np.argmin(min_rho))]
            raise DegenerateGeometryError(f"a radius degenerates inside the range near z={zbad}")
        return z_lo, z_hi, False, False

    good = min_rho > rho_min
    i0 = int(np.searchsorted(scan, origin))
    i0 = min(max(i0, 0), scan.size - 1)
    if not good[i0]:
        raise DegenerateGeometryError(f"radii fall below rho_min={rho_min} at the origin z={origin}")

    def min_rho_at(z):
        r, _, _ = geom.radii(z)
        return float(np.min(r))

    lo_i = i0
    while lo_i > 0 and good[lo_i - 1]:
        lo_i -= 1
    hi_i = i0
    while hi_i < scan.size - 1 and good[hi_i + 1]:
        hi_i += 1
    new_lo, new_hi = float(scan[lo_i]), float(scan[hi_i])
    truncated_low = lo_i > 0
    truncated_high = hi_i < scan.size - 1
    if truncated_low:
        new_lo = brentq(lambda z: min_rho_at(z) - rho_min, scan[lo_i - 1], scan[lo_i], xtol=1e-12)
    if truncated_high:
        new_hi = brentq(lambda z: min_rho_at(z) - rho_min, scan[hi_i], scan[hi_i + 1], xtol=1e-12)
    return new_lo, new_hi, truncated_low, truncated_high


def build_u_map(
    geom: Geometry,
    z_range: tuple[float, float],
    tol: float = 1e-10,
    u_origin_z: float = 0.0,
    rho_min: float = 1e-6,
    max_panels: int = 500_000,
) -> UMap:
    """Tabulate u(z) over z_range by adaptive quadrature, with u(u_origin_z) = 0."""
    z_lo, z_hi = float(z_range[0]), float(z_range[1])
    if not z_lo < z_hi:
        raise ValidationError(f"empty z-range [{z_lo}, {z_hi}]")
    if not tol > 0:
        raise ValidationError("quadrature tolerance must be positive")
    if not z_lo <= u_origin_z <= z_hi:
        raise ValidationError(f"u_origin_z={u_origin_z} outside the z-range")

    z_lo, z_hi, trunc_lo, trunc_hi = _truncate_range(geom, z_lo, z_hi, u_origin_z, rho_min)
    origin = min(max(u_origin_z, z_lo), z_hi)

    def f(z):
        return u_integrand(geom, z)

    # Subpanel width cap ties the tabulation error of the map to tol: both the
    # composite quadrature and the Hermite interpolation error scale as h^4,
    # so h ~ tol^(1/3) keeps the realized error a strict order ahead of tol
    # (error ~ tol^(4/3)) and halving tol always at least halves it.
    h_max = (384.0 * tol) ** (1.0 / 3.0)
    tol_density = tol / (z_hi - z_lo)

    z_parts = [np.asarray([origin])]
    u_parts = [np.asarray([0.0])]
    if origin > z_lo:
        knots, cums = _tabulate_side(f, z_lo, origin, tol_density, h_max, max_panels)
        z_parts.insert(0, knots[:-1] if knots.size else knots)
        u_parts.insert(0, np.concatenate([[0.0], cums[:-1]]) - cums[-1])
    if origin < z_hi:
        knots, cums = _tabulate_side(f, origin, z_hi, tol_density, h_max, max_panels)
        z_parts.append(knots[1:])
        u_parts.append(cums)

    z_grid = np.concatenate(z_parts)
    u_grid = np.concatenate(u_parts)
    dzdu_grid = 1.0 / u_integrand(geom, z_grid)
    return UMap(
        z_grid=z_grid,
        u_grid=u_grid,
        dzdu_grid=dzdu_grid,
        u_origin_z=origin,
        tol=tol,
        truncated_low=trunc_lo,
        truncated_high=trunc_hi,
    )


def _check_range(value, lo: float, hi: float, label: str):
    value = np.asarray(value, dtype=float)
    slack = 1e-12 * (1.0 + max(abs(lo), abs(hi)))
    if np.any(value < lo - slack) or np.any(value > hi + slack):
        raise ValidationError(f"{label} query outside tabulated range [{lo}, {hi}]")
    return np.clip(value, lo, hi)


def u_of_z(umap: UMap, z):
    """Forward map; scalar in, scalar out (arrays pass through elementwise)."""
    z = _check_range(z, umap.z_min, umap.z_max, "z")
    out = np.asarray(umap._fwd(z))
    # exact values at the tabulation boundaries (spline roundoff is ~1 ulp)
    out = np.where(z == umap.z_min, umap.u_min, out)
    out = np.where(z == umap.z_max, umap.u_max, out)
    return float(out) if out.ndim == 0 else out


def z_of_u(umap: UMap, u):
    """Inverse map: roots of the forward interpolant, polished to ~1e-14.

    Newton iteration from a linear-interpolation seed, clamped to the
    bracketing grid cell; falls back to bisection for any point that fails to
    settle (monotonicity guarantees the bracket).
    """
    u_arr = _check_range(u, umap.u_min, umap.u_max, "u")
    scalar = u_arr.ndim == 0
    uq = np.atleast_1d(u_arr).astype(float)
    cell = np.clip(np.searchsorted(umap.u_grid, uq, side="right") - 1, 0, umap.z_grid.size - 2)
    z_lo = umap.z_grid[cell]
    z_hi = umap.z_grid[cell + 1]
    z = z_lo + (uq - umap.u_grid[cell]) / (umap.u_grid[cell + 1] - umap.u_grid[cell]) * (z_hi - z_lo)
    target_tol = 1e-14 * (1.0 + np.abs(uq))
    resid = umap._fwd(z) - uq
    for _ in range(60):
        bad = np.abs(resid) > target_tol
        if not np.any(bad):
            break
        deriv = umap._dfwd(z[bad])
        step = resid[bad] / np.where(deriv > 0, deriv, 1.0)
        z[bad] = np.clip(z[bad] - step, z_lo[bad], z_hi[bad])
        resid[bad] = umap._fwd(z[bad]) - uq[bad]
    still = np.abs(resid) > 10.0 * target_tol
    for i in np.nonzero(still)[0]:
        z[i] = brentq(lambda t: float(umap._fwd(t)) - uq[i], z_lo[i], z_hi[i],
                      xtol=1e-15, rtol=8.9e-16)
    z = np.where(uq == umap.u_min, umap.z_min, z)
    z = np.where(uq == umap.u_max, umap.z_max, z)
    return float(z[0]) if scalar else z


def _chain_rule_triples(geom: Geometry, z):
    """All u-space radius triples (w, dw/du, d2w/du2) at the z matching u."""
    rho, drho, ddrho = geom.radii(z)
    if np.any(rho <= 0.0):
        raise DegenerateGeometryError("radius not positive inside the map range")
    rd = np.sqrt(1.0 + np.sum(drho * drho, axis=0))
    drd = np.sum(drho * ddrho, axis=0) / rd
    prod = np.prod(rho, axis=0)
    dprod = prod * np.sum(drho / rho, axis=0)
    ival = rd / prod
    dival = (drd * prod - rd * dprod) / (prod * prod)
    dw = drho / ival
    ddw = (ddrho * ival - drho * dival) / ival**3
    return rho, dw, ddw


def varrho(umap: UMap, geom: Geometry, alpha: int, u):
    """(w_a, dw_a/du, d2w_a/du2) for radius index alpha (0-based) at u."""
    if not 0 <= alpha < geom.d - 1:
        raise ValidationError(f"radius index {alpha} out of range for d={geom.d}")
    z = z_of_u(umap, u)
    w, dw, ddw = _chain_rule_triples(geom, z)
    if np.ndim(u) == 0:
        return float(w[alpha]), float(dw[alpha]), float(ddw[alpha])
    return w[alpha], dw[alpha], ddw[alpha]


def varrho_evaluators(umap: UMap, geom: Geometry):
    """One u -> (w, w', w'') callable per radius, e.g. for scalar_curvature_u."""
    return [
        (lambda u, a=a: varrho(umap, geom, a, u))
        for a in range(geom.d - 1)
    ]
