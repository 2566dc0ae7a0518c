"""Cross-oracle verification battery behind the CLI ``verify`` task.

Each check pits a closed form against an independent brute-force route
(finite-difference tensors, embedding pullbacks, dense eigensolvers,
transfer matrices) on randomized but seeded inputs and reports one
pass/fail row.  The same sampling helpers feed the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coordinates, geometry, reduction, solver
from .geometry import Geometry
from .profiles import RadiusProfile

__all__ = ["CheckResult", "random_profile", "random_geometry", "run_battery", "DEFAULT_SEED"]

DEFAULT_SEED = 20260809

_NONFLAT_FAMILIES = ("tanh-step", "gaussian-bump", "exp-ramp", "cosh-well")


def random_profile(rng: np.random.Generator, family: str | None = None) -> RadiusProfile:
    """A random admissible profile with O(1) scales and a safe positivity margin."""
    if family is None:
        family = _NONFLAT_FAMILIES[rng.integers(len(_NONFLAT_FAMILIES))]
    sign = -1.0 if rng.random() < 0.5 else 1.0
    z0 = rng.uniform(-1.0, 1.0)
    if family == "constant":
        return RadiusProfile("constant", (rng.uniform(0.7, 2.2),))
    if family == "tanh-step":
        a = rng.uniform(1.2, 2.5)
        b = sign * rng.uniform(0.2, min(0.6, a - 0.5))
        return RadiusProfile("tanh-step", (a, b, rng.uniform(0.4, 1.3), z0))
    if family == "gaussian-bump":
        a = rng.uniform(0.8, 2.0)
        b = sign * rng.uniform(0.2, min(0.6, a - 0.3))
        return RadiusProfile("gaussian-bump", (a, b, rng.uniform(0.8, 1.8), z0))
    if family == "exp-ramp":
        k = sign * rng.uniform(0.2, 0.6)
        return RadiusProfile("exp-ramp", (rng.uniform(0.8, 1.6), rng.uniform(0.1, 0.4), k, z0))
    if family == "cosh-well":
        a = rng.uniform(1.0, 2.0)
        b = sign * rng.uniform(0.2, min(0.6, a - 0.4))
        return RadiusProfile("cosh-well", (a, b, rng.uniform(0.4, 1.2), z0))
    if family == "sum-of-terms":
        return RadiusProfile(
            "sum-of-terms",
            terms=(
                random_profile(rng, "constant"),
                random_profile(rng, "gaussian-bump"),
            ),
        )
    raise ValueError(f"no sampler for family {family!r}")


def random_geometry(rng: np.random.Generator, d: int | None = None) -> Geometry:
    """A random non-flat geometry with d in 2..5 unless fixed by the caller."""
    if d is None:
        d = int(rng.integers(2, 6))
    return Geometry(d, tuple(random_profile(rng) for _ in range(d - 1)))


@dataclass(frozen=True)
class CheckResult:
    """One verification row: ``value`` compared against ``threshold``."""

    name: str
    value: float
    threshold: float
    passed: bool


def _check(name: str, value: float, threshold: float) -> CheckResult:
    return CheckResult(name, float(value), float(threshold), bool(value < threshold))


def _profile_fd_check(rng: np.random.Generator) -> CheckResult:
    """Analytic first/second derivatives vs central differences of rho.

    h = 1e-4 balances the O(h^2) truncation against the eps/h^2 rounding of
    the second difference.
    """
    worst = 0.0
    h = 1e-4
    for family in _NONFLAT_FAMILIES + ("sum-of-terms",):
        prof = random_profile(rng, family)
        z = rng.uniform(-2.0, 2.0, 8)
        rho, d1, d2 = prof.eval(z)
        rp, _, _ = prof.eval(z + h)
        rm, _, _ = prof.eval(z - h)
        fd1 = (rp - rm) / (2.0 * h)
        fd2 = (rp - 2.0 * rho + rm) / (h * h)
        worst = max(worst, float(np.max(np.abs(fd1 - d1))), float(np.max(np.abs(fd2 - d2))))
    return _check("profiles: analytic vs finite-difference derivatives", worst, 1e-6)


def _curvature_closed_vs_oracle(rng: np.random.Generator, n_samples: int) -> list[CheckResult]:
    worst_u = 0.0
    worst_3d = 0.0
    worst_coincide = 0.0
    for _ in range(n_samples):
        geom = random_geometry(rng)
        z = rng.uniform(-1.5, 1.5)
        umap = coordinates.build_u_map(geom, (z - 1.0, z + 1.0), tol=1e-10, u_origin_z=z)
        closed = geometry.scalar_curvature_u(coordinates.varrho_evaluators(umap, geom), 0.0)
        report = geometry.curvature_oracle(geom, z, with_taub=False)
        denom = 1.0 + abs(report.scalar)
        worst_u = max(worst_u, abs(closed - report.scalar) / denom)
        worst_coincide = max(
            worst_coincide, abs(report.spacetime_scalar - report.scalar) / denom
        )
        if geom.d == 3:
            closed3 = geometry.scalar_curvature_closed_3d(geom, z)
            worst_3d = max(worst_3d, abs(closed3 - report.scalar) / denom)
    return [
        _check("curvature: u-space closed form vs oracle", worst_u, 1e-5),
        _check("curvature: d=3 z-space closed form vs oracle", worst_3d, 1e-5),
        _check("curvature: space-time scalar equals spatial scalar", worst_coincide, 1e-6),
    ]


def _weyl_taub_checks(rng: np.random.Generator, n_samples: int) -> list[CheckResult]:
    worst_weyl = 0.0
    min_taub = np.inf
    max_st_weyl = 0.0
    for _ in range(n_samples):
        geom = random_geometry(rng, 3)
        z = rng.uniform(-1.0, 1.0)
        report = geometry.curvature_oracle(geom, z)
        worst_weyl = max(worst_weyl, report.weyl_norm)
        min_taub = min(min_taub, report.taub_norm)
        max_st_weyl = max(max_st_weyl, report.spacetime_weyl_norm)
    return [
        _check("curvature: spatial Weyl norm vanishes (d=3)", worst_weyl, 1e-7),
        _check("curvature: space-time Weyl norm is nonzero", 1e-3 / max(max_st_weyl, 1e-300), 1.0),
        _check("curvature: Taub norm is nonzero on generic samples", 1e-8 / max(min_taub, 1e-300), 1.0),
    ]


def _embedding_check(rng: np.random.Generator, n_samples: int) -> list[CheckResult]:
    worst_diag = 0.0
    worst_off = 0.0
    for _ in range(n_samples):
        geom = random_geometry(rng)
        z = rng.uniform(-1.5, 1.5)
        phis = rng.uniform(0.0, 2.0 * np.pi, geom.d - 1)
        pullback = geometry.induced_pullback(geom, z, h=1e-4, phis=phis)
        closed = geometry.spatial_metric(geom, z).diag
        worst_diag = max(
            worst_diag, float(np.max(np.abs(np.diag(pullback) - closed) / closed))
        )
        off = pullback - np.diag(np.diag(pullback))
        worst_off = max(worst_off, float(np.max(np.abs(off))))
    return [
        _check("embedding: pullback matches closed-form metric", worst_diag, 1e-6),
        _check("embedding: pullback off-diagonals vanish", worst_off, 1e-8),
    ]


def _umap_checks(rng: np.random.Generator) -> list[CheckResult]:
    flat = Geometry(3, (RadiusProfile("constant", (1.0,)), RadiusProfile("constant", (1.0,))))
    fmap = coordinates.build_u_map(flat, (-8.0, 8.0), tol=1e-10)
    zq = np.linspace(-8.0, 8.0, 1001)
    flat_err = float(np.max(np.abs(coordinates.u_of_z(fmap, zq) - zq)))

    geom = Geometry(3, (random_profile(rng, "tanh-step"), random_profile(rng, "gaussian-bump")))
    umap = coordinates.build_u_map(geom, (-6.0, 6.0), tol=1e-10)
    zs = rng.uniform(-6.0, 6.0, 500)
    rt1 = np.abs(coordinates.z_of_u(umap, coordinates.u_of_z(umap, zs)) - zs) / (1.0 + np.abs(zs))
    us = rng.uniform(umap.u_min, umap.u_max, 500)
    rt2 = np.abs(coordinates.u_of_z(umap, coordinates.z_of_u(umap, us)) - us) / (1.0 + np.abs(us))
    return [
        _check("u-map: flat-case identity u(z) = z", flat_err, 1e-12),
        _check("u-map: round-trip consistency", max(np.max(rt1), np.max(rt2)), 1e-10),
    ]


def _transplant_check() -> CheckResult:
    geom = Geometry(3, (RadiusProfile("tanh-step", (2.0, 1.0, 1.0, 0.0)),
                        RadiusProfile("constant", (1.0,))))
    mode = reduction.ModeSpec(omega=1.3, mass=0.0, m=(1, 0))
    rel = solver.transplant_difference(geom, (-5.0, 5.0), mode, n_z=8001)
    return _check("transform: z-space vs u-space solutions agree", rel, 1e-6)


def _conformal_checks() -> list[CheckResult]:
    n3_err = abs(reduction.conformal_weight(3) - 6.0)
    geom = Geometry(3, (RadiusProfile("tanh-step", (2.0, 0.8, 1.0, 0.2)),
                        RadiusProfile("gaussian-bump", (1.0, 0.5, 1.0, 0.0))))
    umap = coordinates.build_u_map(geom, (-5.0, 5.0), tol=1e-10)
    mode_c = reduction.ModeSpec(omega=0.9, mass=0.0, m=(1, 2), coupling="conformal")
    mode_m = reduction.ModeSpec(omega=0.9, mass=0.0, m=(1, 2))
    u = np.linspace(umap.u_min, umap.u_max, 401)
    vc = reduction.conformal_potential(geom, umap, mode_c, u)
    vm = reduction.potential(geom, umap, mode_m, u)
    evaluators = coordinates.varrho_evaluators(umap, geom)
    scal = geometry.scalar_curvature_u(evaluators, u)
    prod_sq = np.prod(np.stack([evaluators[a](u)[0] ** 2 for a in range(geom.d - 1)]), axis=0)
    resid = float(np.max(np.abs(vc - vm - scal / 6.0 * prod_sq)))
    return [
        _check("conformal: weight n_3 equals 6", n3_err, 1e-15),
        _check("conformal: V_c - V(M=0) equals R/n_d times the radius product", resid, 1e-8),
    ]


def _spectrum_check() -> list[CheckResult]:
    geom = Geometry(2, (RadiusProfile("gaussian-bump", (1.0, 0.5, 1.0, 0.0)),))
    umap = coordinates.build_u_map(geom, (-70.0, 70.0), tol=1e-9)
    mode = reduction.ModeSpec(omega=0.0, mass=0.0, m=(1,))
    shoot = solver.bound_modes(geom, umap, mode, (0.5, 0.999), k_max=8)
    builder = solver.potential_table_builder(geom, umap, mode)
    dense = solver.fd_eigen_oracle(builder, (0.5, 0.999), n_grid=2000, k_max=8)
    n = min(len(shoot.eigen_omega_sq), len(dense.eigen_omega_sq))
    if n == 0 or len(shoot.eigen_omega_sq) != len(dense.eigen_omega_sq):
        return [_check("spectrum: shooting vs dense oracle eigenvalues", np.inf, 1e-6)]
    rel = max(
        abs(a - b) / abs(b)
        for a, b in zip(shoot.eigen_omega_sq, dense.eigen_omega_sq)
    )
    nodes_ok = shoot.node_counts == tuple(range(len(shoot.node_counts)))
    return [
        _check("spectrum: shooting vs dense oracle eigenvalues", rel, 1e-6),
        _check("spectrum: node counts are consecutive from zero", 0.0 if nodes_ok else 1.0, 0.5),
    ]


def _scatter_check() -> list[CheckResult]:
    geom = Geometry(2, (RadiusProfile("tanh-step", (2.0, 1.0, 1.0, 0.0)),))
    umap = coordinates.build_u_map(geom, (-9.0, 9.0), tol=1e-9)
    worst_flux = 0.0
    worst_tm = 0.0
    for omega in np.linspace(1.05, 3.0, 12):
        mode = reduction.ModeSpec(omega=float(omega), mass=0.0, m=(1,))
        res = solver.transmission(geom, umap, mode)
        worst_flux = max(worst_flux, abs(res.transmission + res.reflection - 1.0))
        t_tm = solver.transfer_matrix_transmission(geom, umap, mode, resolution_factor=4)
        worst_tm = max(worst_tm, abs(res.transmission - t_tm))
    return [
        _check("scattering: flux conservation T+R = 1", worst_flux, 1e-6),
        _check("scattering: agreement with transfer-matrix oracle", worst_tm, 1e-5),
    ]


def _footnote_reduction_check() -> CheckResult:
    prof = RadiusProfile("gaussian-bump", (1.0, 0.5, 1.0, 0.0))
    g3 = Geometry(3, (prof, RadiusProfile("constant", (1.0,))))
    g2 = Geometry(2, (prof,))
    m3 = coordinates.build_u_map(g3, (-6.0, 6.0), tol=1e-11)
    m2 = coordinates.build_u_map(g2, (-6.0, 6.0), tol=1e-11)
    mode3 = reduction.ModeSpec(omega=0.7, mass=0.3, m=(2, 0))
    mode2 = reduction.ModeSpec(omega=0.7, mass=0.3, m=(2,))
    u = np.linspace(max(m3.u_min, m2.u_min), min(m3.u_max, m2.u_max), 501)
    v3 = reduction.potential(g3, m3, mode3, u)
    v2 = reduction.potential(g2, m2, mode2, u)
    return _check("reduction: d=3 with unit second radius equals d=2 pipeline",
                  float(np.max(np.abs(v3 - v2))), 1e-10)


def run_battery(seed: int = DEFAULT_SEED, samples: int = 12) -> list[CheckResult]:
    """Run every cross-oracle check; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = [_profile_fd_check(rng)]
    results += _curvature_closed_vs_oracle(rng, samples)
    results += _weyl_taub_checks(rng, max(4, samples // 2))
    results += _embedding_check(rng, samples)
    results += _umap_checks(rng)
    results.append(_transplant_check())
    results += _conformal_checks()
    results += _spectrum_check()
    results += _scatter_check()
    results.append(_footnote_reduction_check())
    return results
