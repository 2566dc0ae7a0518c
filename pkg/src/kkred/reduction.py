"""Mode separation: z-equation coefficients and Schroedinger-form potentials.

A field e^{-i omega t} e^{i m_1 phi_1} ... e^{i m_{d-1} phi_{d-1}} Z(z) on the
variable-radius background separates into one nontrivial ODE for Z.  In z it
reads, with p(z) = rho_1...rho_{d-1}/rho_d and P = rho_1...rho_{d-1},

    (1/P^2) p (p Z')' + [omega^2 - M^2 - sum_a m_a^2/rho_a^2] Z = 0 ,

and in the u variable it becomes psi'' + (E - V(u)) psi = 0 with E fixed to 0,
psi(u) = Z(z(u)), and

    V(u) = prod_a w_a^2 * [ (M^2 - omega^2) + sum_a m_a^2 / w_a^2 ] ,

w_a(u) = rho_a(z(u)).  The m^2/rho^2 terms are the centrifugal-like potentials
of motion on the shrinking circles.  Because V itself carries omega^2, the
spectral parameter of the bound-state problem is omega^2, not E.

Conformally coupled modes (massless, with the curvature term R/n_d,
n_d = 4/(1-1/d)) get the alternative potential

    V_c(u) = ( R/n_d - omega^2 + sum_a m_a^2 / w_a^2 ) * prod_a w_a^2 ,

with R the scalar curvature in the u variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coordinates
from .coordinates import UMap
from .errors import ValidationError
from .geometry import Geometry, scalar_curvature_u

__all__ = [
    "ModeSpec",
    "PotentialTable",
    "z_equation_coeffs",
    "potential",
    "conformal_potential",
    "conformal_weight",
    "threshold",
    "tabulate_potential",
]

# The u-space equation is solved at fixed spectral offset E = 0; all omega
# dependence lives inside V.
SCHRODINGER_E = 0.0


@dataclass(frozen=True)
class ModeSpec:
    """Separation constants (omega, M, m_1..m_{d-1}) and the coupling choice."""

    omega: float
    mass: float
    m: tuple[int, ...]
    coupling: str = "minimal"

    def __post_init__(self):
        if self.coupling not in ("minimal", "conformal"):
            raise ValidationError(f"coupling must be minimal or conformal, got {self.coupling!r}")
        if not np.isfinite(self.omega):
            raise ValidationError("omega must be finite")
        if self.mass < 0:
            raise ValidationError(f"mass must be nonnegative, got {self.mass}")
        if self.coupling == "conformal" and self.mass != 0:
            raise ValidationError("conformal coupling requires a massless mode")
        for m in self.m:
            if int(m) != m:
                raise ValidationError(f"angular numbers must be integers, got {m}")
        object.__setattr__(self, "m", tuple(int(m) for m in self.m))


def _check_mode(geom: Geometry, mode: ModeSpec):
    if len(mode.m) != geom.d - 1:
        raise ValidationError(
            f"mode carries {len(mode.m)} angular numbers but geometry d={geom.d} needs {geom.d - 1}"
        )


def z_equation_coeffs(geom: Geometry, mode: ModeSpec, z: float) -> tuple[float, float]:
    """(p, w) of the z-space mode equation (1/P^2) p (p Z')' + w Z = 0.

    p = rho_1...rho_{d-1}/rho_d is the first-order operator weight (applied
    twice) and w = omega^2 - M^2 - sum_a m_a^2/rho_a^2.
    """
    _check_mode(geom, mode)
    if mode.coupling != "minimal":
        raise ValidationError("the z-space coefficients are defined for minimal coupling")
    rho, drho, _ = geom.radii(z)
    if np.any(rho <= 0.0):
        raise ValidationError(f"degenerate point z={z}")
    rd = np.sqrt(1.0 + np.sum(drho * drho, axis=0))
    p = np.prod(rho, axis=0) / rd
    msq = np.asarray(mode.m, dtype=float) ** 2
    if rho.ndim > 1:
        msq = msq[:, None]
    w = mode.omega**2 - mode.mass**2 - np.sum(msq / (rho * rho), axis=0)
    if np.ndim(z) == 0:
        return float(p), float(w)
    return p, w


def _potential_from_radii(w_radii: np.ndarray, mode: ModeSpec, omega_sq: float):
    """V on precomputed u-space radii, with omega^2 supplied separately."""
    msq = np.asarray(mode.m, dtype=float) ** 2
    prod_sq = np.prod(w_radii * w_radii, axis=0)
    centrifugal = np.sum(
        (msq[:, None] if w_radii.ndim > 1 else msq) / (w_radii * w_radii), axis=0
    )
    return prod_sq * ((mode.mass**2 - omega_sq) + centrifugal)


def potential(geom: Geometry, umap: UMap, mode: ModeSpec, u):
    """Minimal-coupling potential V(u); scalar or array in u."""
    _check_mode(geom, mode)
    if mode.coupling != "minimal":
        raise ValidationError("potential() is the minimal-coupling form; see conformal_potential")
    z = coordinates.z_of_u(umap, u)
    w, _, _ = coordinates._chain_rule_triples(geom, z)
    out = _potential_from_radii(w, mode, mode.omega**2)
    return float(out) if np.ndim(u) == 0 else out


def conformal_potential(geom: Geometry, umap: UMap, mode: ModeSpec, u):
    """Conformal-coupling potential V_c(u) = (R/n_d - omega^2 + sum m^2/w^2) prod w^2."""
    _check_mode(geom, mode)
    if mode.coupling != "conformal":
        raise ValidationError("conformal_potential() requires a conformal-coupling mode")
    evaluators = coordinates.varrho_evaluators(umap, geom)
    scal = scalar_curvature_u(evaluators, u)
    z = coordinates.z_of_u(umap, u)
    w, _, _ = coordinates._chain_rule_triples(geom, z)
    msq = np.asarray(mode.m, dtype=float) ** 2
    prod_sq = np.prod(w * w, axis=0)
    centrifugal = np.sum((msq[:, None] if np.ndim(u) > 0 else msq) / (w * w), axis=0)
    out = (scal / conformal_weight(geom.d) - mode.omega**2 + centrifugal) * prod_sq
    return float(out) if np.ndim(u) == 0 else out


def conformal_weight(d: int) -> float:
    """Curvature-coupling denominator n_d = 4/(1 - 1/d); n_3 = 6.

    Evaluated as 4d/(d-1), which is exact in floating point for small d.
    """
    if d < 2:
        raise ValidationError(f"conformal weight needs d >= 2, got {d}")
    return 4.0 * d / (d - 1.0)


def threshold(geom: Geometry, mode: ModeSpec, z_asymptote: float) -> float:
    """omega^2 above which the channel propagates at the given asymptote:
    omega_th^2 = M^2 + sum_a m_a^2 / rho_a(z_asymptote)^2."""
    _check_mode(geom, mode)
    rho, _, _ = geom.radii(z_asymptote)
    msq = np.asarray(mode.m, dtype=float) ** 2
    return float(mode.mass**2 + np.sum(msq / rho**2))


@dataclass(frozen=True, eq=False)
class PotentialTable:
    """A potential sampled on a uniform u grid (what the propagators consume)."""

    u0: float
    du: float
    values: np.ndarray
    mode: ModeSpec
    provenance: str = "dV"  # dV (minimal) or dVc (conformal)

    def __post_init__(self):
        if self.du <= 0:
            raise ValidationError("potential table step must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("potential table contains non-finite values")

    @property
    def u_grid(self) -> np.ndarray:
        return self.u0 + self.du * np.arange(self.values.size)

    @property
    def u_end(self) -> float:
        return self.u0 + self.du * (self.values.size - 1)


def tabulate_potential(
    geom: Geometry,
    umap: UMap,
    mode: ModeSpec,
    n: int = 2001,
    u_min: float | None = None,
    u_max: float | None = None,
    omega_sq: float | None = None,
) -> PotentialTable:
    """Uniform-grid potential table over [u_min, u_max] (map range by default).

    ``omega_sq`` overrides mode.omega**2 so spectral searches can sweep the
    squared frequency directly (V depends on omega only through omega^2).
    """
    _check_mode(geom, mode)
    if n < 16:
        raise ValidationError("potential tables need at least 16 points")
    lo = umap.u_min if u_min is None else float(u_min)
    hi = umap.u_max if u_max is None else float(u_max)
    if not lo < hi:
        raise ValidationError(f"empty u-range [{lo}, {hi}]")
    u = np.linspace(lo, hi, n)
    if mode.coupling == "conformal":
        if omega_sq is not None:
            mode = ModeSpec(float(np.sqrt(omega_sq)), mode.mass, mode.m, mode.coupling)
        values = conformal_potential(geom, umap, mode, u)
        provenance = "dVc"
    else:
        wsq = mode.omega**2 if omega_sq is None else float(omega_sq)
        z = coordinates.z_of_u(umap, u)
        w, _, _ = coordinates._chain_rule_triples(geom, z)
        values = _potential_from_radii(w, mode, wsq)
        provenance = "dV"
    return PotentialTable(u0=lo, du=(hi - lo) / (n - 1), values=values, mode=mode,
                          provenance=provenance)
