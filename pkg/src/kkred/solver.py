"""One-dimensional solvers: Numerov propagation, shooting spectra, scattering.

The u-space equation is psi'' = V(u) psi (spectral offset fixed at zero, with
omega^2 living inside V), propagated by the fourth-order Numerov scheme with
log-amplitude renormalization in classically forbidden regions.  Bound
omega^2 values come from two-sided shooting with a matching-point Wronskian;
an independent dense symmetric-tridiagonal eigenvalue oracle cross-checks
them.  Scattering uses the discrete lattice dispersion of the Numerov
recurrence for the asymptotic plane-wave matching, which conserves the
discrete flux exactly, and an independent piecewise-constant transfer-matrix
oracle at higher resolution.

The original z-space equation (1/P^2) p (pZ')' + w Z = 0 is integrated
directly in self-adjoint (conservative) form as a cross-check on the
coordinate transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from . import coordinates, reduction
from .coordinates import UMap
from .errors import SolverError, ValidationError
from .geometry import Geometry
from .reduction import ModeSpec, PotentialTable

__all__ = [
    "GridFunction",
    "SpectrumResult",
    "ScatterResult",
    "numerov_integrate",
    "solve_z_equation",
    "transplant_difference",
    "potential_table_builder",
    "bound_modes",
    "bound_mode_wavefunction",
    "fd_eigen_oracle",
    "transmission",
    "transfer_matrix_transmission",
]

_RESCALE_LIMIT = 1e250


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Uniformly sampled function; true values are ``values * exp(log_scale)``.

    log_scale records the renormalizations applied during propagation through
    classically forbidden regions (zero unless rescaling was needed).
    """

    start: float
    step: float
    values: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValidationError("grid step must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("grid function contains non-finite values")

    @property
    def grid(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)


@dataclass(frozen=True)
class SpectrumResult:
    """Bound omega^2 values with Sturm node counts and solver residuals."""

    eigen_omega_sq: tuple[float, ...]
    node_counts: tuple[int, ...]
    residuals: tuple[float, ...]
    confining: bool = True


@dataclass(frozen=True)
class ScatterResult:
    """Transmission/reflection of one frequency through the junction."""

    omega: float
    transmission: float
    reflection: float
    channel_open: bool


def _numerov_sweep(g: np.ndarray, h: float, y0, y1, renormalize: bool = True):
    """Propagate y'' = g y left to right from the first two values.

    Returns (values, log_scale); complex initial data is propagated as is.
    """
    n = g.size
    dtype = np.result_type(type(y0), type(y1), float)
    y = np.zeros(n, dtype=dtype)
    y[0], y[1] = y0, y1
    gam = (h * h / 12.0) * g
    grow = 2.0 + 10.0 * gam
    damp = 1.0 - gam
    log_scale = 0.0
    for i in range(1, n - 1):
        y[i + 1] = (grow[i] * y[i] - damp[i - 1] * y[i - 1]) / damp[i + 1]
        if renormalize and abs(y[i + 1]) > _RESCALE_LIMIT:
            s = abs(y[i + 1])
            y[: i + 2] /= s
            log_scale += math.log(s)
    return y, log_scale


def numerov_integrate(table: PotentialTable, psi0: float, psi1: float,
                      direction: str = "forward") -> GridFunction:
    """Fourth-order Numerov solution of psi'' = V psi across the table.

    ``forward`` starts from the two leftmost grid values, ``backward`` from the
    two rightmost; returned values are always stored left to right.
    """
    if direction not in ("forward", "backward"):
        raise ValidationError(f"direction must be forward or backward, got {direction!r}")
    g = table.values
    if direction == "backward":
        vals, log_scale = _numerov_sweep(g[::-1], table.du, psi0, psi1)
        vals = vals[::-1]
    else:
        vals, log_scale = _numerov_sweep(g, table.du, psi0, psi1)
    return GridFunction(start=table.u0, step=table.du, values=vals, log_scale=log_scale)


def solve_z_equation(geom: Geometry, mode: ModeSpec, z_grid: np.ndarray,
                     z0_value: float, z1_value: float) -> GridFunction:
    """Integrate the z-space mode equation in conservative form.

    Discretizes (p Z')' = -(p rho_d^2 w) Z with p at panel midpoints, which
    keeps the discrete flux p Z' exactly conserved where w = 0.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size < 3:
        raise ValidationError("z-grid needs at least 3 points")
    steps = np.diff(z_grid)
    h = (z_grid[-1] - z_grid[0]) / (z_grid.size - 1)
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * h:
        raise ValidationError("z-grid must be uniform and increasing")
    p_mid, _ = reduction.z_equation_coeffs(geom, mode, 0.5 * (z_grid[:-1] + z_grid[1:]))
    p_node, w_node = reduction.z_equation_coeffs(geom, mode, z_grid)
    rho, drho, _ = geom.radii(z_grid)
    rdsq = 1.0 + np.sum(drho * drho, axis=0)
    source = h * h * p_node * rdsq * w_node
    y = np.zeros(z_grid.size)
    y[0], y[1] = z0_value, z1_value
    for i in range(1, z_grid.size - 1):
        y[i + 1] = y[i] + (p_mid[i - 1] * (y[i] - y[i - 1]) - source[i] * y[i]) / p_mid[i]
    return GridFunction(start=float(z_grid[0]), step=float(h), values=y)


def transplant_difference(geom: Geometry, z_range: tuple[float, float], mode: ModeSpec,
                          n_z: int = 2001, map_tol: float = 1e-12) -> float:
    """Max-norm mismatch between Z(z) and psi(u(z)) with matched initial data.

    Solves the same mode once in z and once in u (Numerov on the transformed
    potential), starting both from Z = 0 with unit slope at the left edge,
    and returns max|Z - psi(u(z))| / max|psi|.  This is the module's central
    cross-check of the coordinate transform.
    """
    z_lo, z_hi = float(z_range[0]), float(z_range[1])
    umap = coordinates.build_u_map(geom, (z_lo, z_hi), tol=map_tol, u_origin_z=z_lo)
    z_grid = np.linspace(z_lo, z_hi, n_z)
    h_z = z_grid[1] - z_grid[0]

    # initial data: Z(z_lo) = 0, Z'(z_lo) = 1, second value by Taylor expansion
    slope = 1.0
    p0, _ = reduction.z_equation_coeffs(geom, mode, z_lo)
    pp, _ = reduction.z_equation_coeffs(geom, mode, z_lo + h_z)
    pm, _ = reduction.z_equation_coeffs(geom, mode, z_lo - h_z)
    dp0 = (pp - pm) / (2.0 * h_z)
    z1_value = slope * h_z * (1.0 - 0.5 * h_z * dp0 / p0)
    z_sol = solve_z_equation(geom, mode, z_grid, 0.0, z1_value)

    u_hi = coordinates.u_of_z(umap, z_hi)
    table = reduction.tabulate_potential(geom, umap, mode, n=n_z, u_min=0.0, u_max=u_hi)
    h_u = table.du
    dpsi0 = slope * p0  # psi'(0) = Z'(z_lo) dz/du = Z'(z_lo) p(z_lo)
    psi1 = dpsi0 * h_u * (1.0 + h_u * h_u * table.values[0] / 6.0)
    psi = numerov_integrate(table, 0.0, psi1)

    spline = CubicSpline(table.u_grid, psi.values)
    u_at_z = coordinates.u_of_z(umap, z_grid)
    diff = z_sol.values - spline(u_at_z)
    return float(np.max(np.abs(diff)) / np.max(np.abs(psi.values)))


def potential_table_builder(geom: Geometry, umap: UMap, mode: ModeSpec,
                            n: int = 4001, u_min: float | None = None,
                            u_max: float | None = None):
    """omega^2 -> PotentialTable closure used by the spectral solvers.

    The returned builder accepts an optional ``n`` override so oracles can
    choose their own resolution.
    """

    def builder(omega_sq: float, n: int = n) -> PotentialTable:
        return reduction.tabulate_potential(
            geom, umap, mode, n=n, u_min=u_min, u_max=u_max, omega_sq=omega_sq
        )

    return builder


def _wkb_margins(table: PotentialTable) -> tuple[float, float]:
    """Forbidden-region suppression integral int sqrt(V) du inward from each end."""
    v = table.values
    du = table.du
    out = []
    for vals in (v, v[::-1]):
        if vals[0] <= 0.0:
            out.append(0.0)
            continue
        neg = np.nonzero(vals <= 0.0)[0]
        stop = int(neg[0]) if neg.size else vals.size
        out.append(float(np.sum(np.sqrt(vals[:stop])) * du))
    return out[0], out[1]


def _confining(table: PotentialTable, wkb_min: float) -> bool:
    left, right = _wkb_margins(table)
    return left >= wkb_min and right >= wkb_min


def _fd_derivative_at(values: np.ndarray, idx: int, h: float) -> float:
    """Five-point central derivative at an interior index."""
    return float(
        (values[idx - 2] - 8.0 * values[idx - 1] + 8.0 * values[idx + 1] - values[idx + 2])
        / (12.0 * h)
    )


def _shoot(table: PotentialTable, match_idx: int):
    """Two-sided Numerov shot; returns the normalized matching Wronskian and pieces."""
    g = table.values
    h = table.du
    left, _ = _numerov_sweep(g[: match_idx + 3], h, 0.0, 1e-100)
    right_rev, _ = _numerov_sweep(g[match_idx - 2 :][::-1], h, 0.0, 1e-100)
    right = right_rev[::-1]
    yl = float(left[match_idx])
    dyl = _fd_derivative_at(left, match_idx, h)
    yr = float(right[2])
    dyr = _fd_derivative_at(right, 2, h)
    kappa = math.sqrt(abs(g[match_idx])) + 1.0
    scale_l = math.hypot(yl, dyl / kappa)
    scale_r = math.hypot(yr, dyr / kappa)
    wron = (yl * dyr - dyl * yr) / (kappa * scale_l * scale_r)
    return wron, left, right


def _glue_eigenfunction(table: PotentialTable, match_idx: int) -> GridFunction:
    g = table.values
    h = table.du
    left, _ = _numerov_sweep(g, h, 0.0, 1e-100)
    right_rev, _ = _numerov_sweep(g[::-1], h, 0.0, 1e-100)
    right = right_rev[::-1]
    if abs(right[match_idx]) > h * abs(_fd_derivative_at(right, match_idx, h)):
        ratio = left[match_idx] / right[match_idx]
    else:
        ratio = _fd_derivative_at(left, match_idx, h) / _fd_derivative_at(right, match_idx, h)
    glued = np.concatenate([left[:match_idx], ratio * right[match_idx:]])
    peak = int(np.argmax(np.abs(glued)))
    glued = glued / glued[peak]
    return GridFunction(start=table.u0, step=h, values=glued)


def _count_nodes(values: np.ndarray) -> int:
    signs = np.sign(values[np.abs(values) > 1e-12 * np.max(np.abs(values))])
    return int(np.sum(signs[1:] != signs[:-1]))


def bound_modes(geom: Geometry, umap: UMap, mode_template: ModeSpec,
                omega_sq_range: tuple[float, float], k_max: int = 8,
                n_grid: int = 4001, scan_points: int = 120,
                wkb_min: float = 20.0) -> SpectrumResult:
    """Bound omega^2 values by two-sided shooting on the transformed potential.

    Scans the squared-frequency range, brackets sign changes of the matching
    Wronskian, and polishes each bracket to ~1e-10 relative.  Trials whose
    potential is not confining (positive at both ends with a forbidden-region
    suppression integral of at least wkb_min) are excluded; the result's
    ``confining`` flag records whether the whole range survived.
    """
    lo, hi = float(omega_sq_range[0]), float(omega_sq_range[1])
    if not lo < hi:
        raise ValidationError(f"empty omega^2 range [{lo}, {hi}]")
    builder = potential_table_builder(geom, umap, mode_template, n=n_grid)
    trials = np.linspace(lo, hi, scan_points)
    mid_table = builder(0.5 * (lo + hi))
    match_idx = int(np.clip(np.argmin(mid_table.values), 2, n_grid - 3))

    valid: list[float] = []
    wrons: list[float] = []
    all_confining = True
    for w2 in trials:
        table = builder(float(w2))
        if not _confining(table, wkb_min):
            all_confining = False
            continue
        wron, _, _ = _shoot(table, match_idx)
        valid.append(float(w2))
        wrons.append(wron)

    if not valid:
        return SpectrumResult((), (), (), confining=False)

    roots: list[float] = []
    residuals: list[float] = []
    for (w2a, wa), (w2b, wb) in zip(zip(valid, wrons), zip(valid[1:], wrons[1:])):
        if wa == 0.0:
            roots.append(w2a)
            residuals.append(0.0)
            continue
        if wa * wb >= 0.0:
            continue
        root = brentq(
            lambda w2: _shoot(builder(w2), match_idx)[0],
            w2a, w2b, xtol=1e-12, rtol=1e-11,
        )
        roots.append(float(root))
        residuals.append(abs(_shoot(builder(float(root)), match_idx)[0]))
    if len(roots) > k_max:
        raise SolverError(f"found {len(roots)} modes, more than k_max={k_max}")

    nodes = []
    for root in roots:
        psi = _glue_eigenfunction(builder(root), match_idx)
        nodes.append(_count_nodes(psi.values))
    order = np.argsort(roots)
    return SpectrumResult(
        eigen_omega_sq=tuple(roots[i] for i in order),
        node_counts=tuple(nodes[i] for i in order),
        residuals=tuple(residuals[i] for i in order),
        confining=all_confining,
    )


def bound_mode_wavefunction(geom: Geometry, umap: UMap, mode_template: ModeSpec,
                            omega_sq: float, n_grid: int = 4001) -> GridFunction:
    """Normalized eigenfunction for an already refined bound omega^2."""
    builder = potential_table_builder(geom, umap, mode_template, n=n_grid)
    table = builder(float(omega_sq))
    match_idx = int(np.clip(np.argmin(table.values), 2, n_grid - 3))
    return _glue_eigenfunction(table, match_idx)


def _dirichlet_levels(table: PotentialTable, k_upper: int) -> np.ndarray:
    """Lowest eigenvalues of -psi'' + V psi with Dirichlet walls at the table ends."""
    v = table.values
    h = table.du
    diag = 2.0 / (h * h) + v[1:-1]
    off = np.full(diag.size - 1, -1.0 / (h * h))
    k_upper = min(k_upper, diag.size - 1)
    return eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                            select_range=(0, k_upper))


def fd_eigen_oracle(v_builder, omega_sq_range: tuple[float, float], n_grid: int = 4000,
                    k_max: int = 8, scan_points: int = 120,
                    wkb_min: float = 20.0, richardson: bool = True) -> SpectrumResult:
    """Dense-diagonalization oracle for bound_modes.

    For each trial omega^2 the k-th Dirichlet level E_k of -D2 + V(.;omega^2)
    is computed on n_grid and 2*n_grid points and Richardson-extrapolated
    (``richardson=False`` keeps the raw O(h^2) levels, e.g. for refinement
    studies); the self-consistent bound frequencies are the roots
    E_k(omega^2) = 0.
    """
    lo, hi = float(omega_sq_range[0]), float(omega_sq_range[1])
    if n_grid < 64:
        raise ValidationError("oracle grid must have at least 64 points")

    def levels(w2: float) -> np.ndarray:
        coarse = _dirichlet_levels(v_builder(w2, n=n_grid), k_max)
        if not richardson:
            return coarse
        fine = _dirichlet_levels(v_builder(w2, n=2 * n_grid - 1), k_max)
        return (4.0 * fine[: coarse.size] - coarse) / 3.0

    trials = np.linspace(lo, hi, scan_points)
    valid = []
    spectra = []
    all_confining = True
    for w2 in trials:
        table = v_builder(float(w2), n=n_grid)
        if not _confining(table, wkb_min):
            all_confining = False
            continue
        valid.append(float(w2))
        spectra.append(levels(float(w2)))
    if not valid:
        return SpectrumResult((), (), (), confining=False)
    spectra_arr = np.vstack(spectra)

    roots = []
    residuals = []
    nodes = []
    for k in range(spectra_arr.shape[1]):
        ek = spectra_arr[:, k]
        for j in range(len(valid) - 1):
            if ek[j] == 0.0 or ek[j] * ek[j + 1] >= 0.0:
                if ek[j] == 0.0:
                    roots.append(valid[j])
                    residuals.append(0.0)
                    nodes.append(k)
                continue
            root = brentq(lambda w2, k=k: float(levels(w2)[k]), valid[j], valid[j + 1],
                          xtol=1e-12, rtol=1e-11)
            roots.append(float(root))
            residuals.append(abs(float(levels(float(root))[k])))
            nodes.append(k)
    if len(roots) > k_max:
        raise SolverError(f"oracle found {len(roots)} crossings, more than k_max={k_max}")
    order = np.argsort(roots)
    return SpectrumResult(
        eigen_omega_sq=tuple(roots[i] for i in order),
        node_counts=tuple(nodes[i] for i in order),
        residuals=tuple(residuals[i] for i in order),
        confining=all_confining,
    )


def _lattice_phase(g_value: float, h: float) -> float:
    """Propagation angle theta per step of the Numerov recurrence on constant g.

    cos(theta) = (1 + 5 gamma)/(1 - gamma), gamma = h^2 g / 12; requires an
    open channel (g < 0, |cos| < 1).
    """
    gam = h * h * g_value / 12.0
    c = (1.0 + 5.0 * gam) / (1.0 - gam)
    if abs(c) >= 1.0:
        raise SolverError("channel closed or step too coarse for the lattice wave")
    return math.acos(c)


def _check_asymptotically_constant(values: np.ndarray, frac: float, tol: float):
    edge = max(4, int(frac * values.size))
    for name, chunk in (("left", values[:edge]), ("right", values[-edge:])):
        spread = float(np.max(chunk) - np.min(chunk))
        if spread > tol * (1.0 + float(np.max(np.abs(chunk)))):
            raise SolverError(
                f"potential is not asymptotically constant on the {name} edge "
                f"(spread {spread:.3e}); enlarge the z-range"
            )


def transmission(geom: Geometry, umap: UMap, mode: ModeSpec, n_grid: int = 4001,
                 asym_tol: float = 1e-6) -> ScatterResult:
    """Plane-wave transmission through the junction for one mode.

    A unit transmitted lattice wave is propagated backwards with Numerov; the
    incident and reflected amplitudes are read off by exact two-point matching
    against the lattice dispersion at the incoming edge, so T + R = 1 holds to
    machine precision whenever both channels are open.
    """
    table = reduction.tabulate_potential(geom, umap, mode, n=n_grid)
    v = table.values
    h = table.du
    _check_asymptotically_constant(v, 0.05, asym_tol)
    g_left = float(v[0])
    g_right = float(v[-1])
    if g_left >= 0.0:
        raise SolverError(
            f"incoming channel is closed (V_left = {g_left:.6g} >= 0); "
            "raise omega above the threshold"
        )
    th_l = _lattice_phase(g_left, h)

    if g_right >= 0.0:
        # transmitted side evanescent: total reflection
        return ScatterResult(mode.omega, 0.0, 1.0, channel_open=False)

    th_r = _lattice_phase(g_right, h)
    psi_last = 1.0 + 0.0j
    psi_prev = complex(math.cos(th_r), -math.sin(th_r))  # e^{-i theta_r}: one step inward
    sweep, log_scale = _numerov_sweep(v[::-1], h, psi_last, psi_prev)
    psi = sweep[::-1]
    # psi_n ~ A e^{i theta_l n} + B e^{-i theta_l n} near the left edge
    expp = complex(math.cos(th_l), math.sin(th_l))
    amp_a = (psi[1] - psi[0] / expp) / (expp - 1.0 / expp)
    amp_b = psi[0] - amp_a
    amp_a_sq = abs(amp_a) ** 2 * math.exp(2.0 * log_scale)  # back to unit transmitted wave
    gam_l = h * h * g_left / 12.0
    gam_r = h * h * g_right / 12.0
    flux_ratio = ((1.0 - gam_r) ** 2 * math.sin(th_r)) / ((1.0 - gam_l) ** 2 * math.sin(th_l))
    t_coef = flux_ratio / amp_a_sq
    r_coef = abs(amp_b) ** 2 / abs(amp_a) ** 2
    return ScatterResult(mode.omega, float(t_coef), float(r_coef), channel_open=True)


def transfer_matrix_transmission(geom: Geometry, umap: UMap, mode: ModeSpec,
                                 n_grid: int = 4001, resolution_factor: int = 4) -> float:
    """Independent transmission oracle: piecewise-constant slabs, 2x2 transfer matrices.

    The potential is sliced into resolution_factor * n_grid constant slabs; the
    continuum plane-wave amplitudes are propagated with interface matching and
    the transmitted flux ratio is returned.
    """
    n_slabs = int(resolution_factor) * (n_grid - 1)
    table = reduction.tabulate_potential(geom, umap, mode, n=2 * n_slabs + 1)
    v_mid = table.values[1::2]
    edges_x = table.u_grid[0::2]
    q = np.sqrt(-v_mid.astype(complex))
    k_left = q[0]
    k_right = q[-1]
    if k_left.real <= 0.0:
        raise SolverError("incoming channel is closed for the transfer-matrix oracle")

    m11 = np.complex128(1.0)
    m12 = np.complex128(0.0)
    m21 = np.complex128(0.0)
    m22 = np.complex128(1.0)
    log_scale = 0.0
    for j in range(n_slabs - 1):
        q1 = q[j]
        q2 = q[j + 1]
        x = edges_x[j + 1]
        sp = 0.5 * (1.0 + q1 / q2)
        sm = 0.5 * (1.0 - q1 / q2)
        e_m = np.exp(1j * (q1 - q2) * x)
        e_p = np.exp(1j * (q1 + q2) * x)
        a11 = sp * e_m
        a12 = sm / e_p
        a21 = sm * e_p
        a22 = sp / e_m
        m11, m12, m21, m22 = (
            a11 * m11 + a12 * m21,
            a11 * m12 + a12 * m22,
            a21 * m11 + a22 * m21,
            a21 * m12 + a22 * m22,
        )
        peak = max(abs(m11), abs(m12), abs(m21), abs(m22))
        if peak > 1e100:  # evanescent stretches can overflow the raw product
            m11, m12, m21, m22 = m11 / peak, m12 / peak, m21 / peak, m22 / peak
            log_scale += math.log(peak)
    t_amp = m11 - m12 * m21 / m22
    t_coef = (k_right.real / k_left.real) * abs(t_amp) ** 2 * math.exp(2.0 * log_scale)
    return float(t_coef)
