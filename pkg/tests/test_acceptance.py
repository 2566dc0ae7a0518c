"""Acceptance suite: every shipped criterion at its stated tolerance.

Each test prints one ``ACCEPTANCE <n>: pass`` line (visible with pytest -s;
pytest -v reports the same pass/fail per test) and asserts its runtime budget.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from kkred import cli, solver
from kkred.coordinates import build_u_map, u_of_z, varrho_evaluators, z_of_u
from kkred.geometry import (
    Geometry,
    curvature_oracle,
    induced_pullback,
    scalar_curvature_closed_3d,
    scalar_curvature_u,
    spatial_metric,
)
from kkred.profiles import RadiusProfile
from kkred.reduction import ModeSpec, conformal_potential, conformal_weight, potential
from kkred.verify import random_geometry

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

TANH3 = Geometry(3, (RadiusProfile("tanh-step", (2.0, 1.0, 1.0, 0.0)),
                     RadiusProfile("constant", (1.0,))))
BUMP2 = Geometry(2, (RadiusProfile("gaussian-bump", (1.0, 0.5, 1.0, 0.0)),))
STEP2 = Geometry(2, (RadiusProfile("tanh-step", (2.0, 1.0, 1.0, 0.0)),))


class budget:
    """Context manager asserting a wall-clock runtime bound."""

    def __init__(self, seconds: float):
        self.limit = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc == (None, None, None):
            assert self.elapsed < self.limit, f"runtime {self.elapsed:.1f}s over budget {self.limit}s"
        return False


def test_acceptance_01_curvature_closed_form_vs_oracle():
    rng = np.random.default_rng(101)
    worst_u = 0.0
    worst_3d = 0.0
    with budget(30.0) as b:
        for i in range(50):
            geom = random_geometry(rng, d=2 + i % 4)
            z = float(rng.uniform(-1.5, 1.5))
            umap = build_u_map(geom, (z - 1.0, z + 1.0), tol=1e-10, u_origin_z=z)
            closed = scalar_curvature_u(varrho_evaluators(umap, geom), 0.0)
            report = curvature_oracle(geom, z, with_taub=False)
            denom = 1.0 + abs(report.scalar)
            worst_u = max(worst_u, abs(closed - report.scalar) / denom)
            if geom.d == 3:
                closed3 = scalar_curvature_closed_3d(geom, z)
                worst_3d = max(worst_3d, abs(closed3 - report.scalar) / denom)
    assert worst_u < 1e-5
    assert worst_3d < 1e-5
    print(f"ACCEPTANCE 1: pass (u-form {worst_u:.2e}, z-form {worst_3d:.2e}, {b.elapsed:.1f}s)")


def test_acceptance_02_weyl_taub_and_scalar_coincidence():
    rng = np.random.default_rng(102)
    worst_weyl = 0.0
    worst_coincide = 0.0
    min_taub_max = np.inf
    with budget(30.0) as b:
        for _ in range(20):
            geom = random_geometry(rng, d=3)
            z0 = float(rng.uniform(-1.0, 1.0))
            taub_max = 0.0
            for dz in (-0.5, 0.0, 0.5):
                report = curvature_oracle(geom, z0 + dz)
                worst_weyl = max(worst_weyl, report.weyl_norm)
                refined = curvature_oracle(geom, z0 + dz, h=5e-4, with_taub=False)
                worst_weyl = max(worst_weyl, refined.weyl_norm)
                taub_max = max(taub_max, report.taub_norm)
                worst_coincide = max(
                    worst_coincide,
                    abs(report.spacetime_scalar - report.scalar) / (1.0 + abs(report.scalar)),
                )
            min_taub_max = min(min_taub_max, taub_max)
        designated = curvature_oracle(TANH3, 0.5, with_taub=False)
    assert worst_weyl < 1e-7          # 3d conformal curvature vanishes identically
    assert designated.spacetime_weyl_norm > 1e-3  # the 4d metric is not conformally flat
    assert min_taub_max > 1e-7        # generic slices are not conformally flat either
    assert worst_coincide < 1e-6      # (1+d) scalar coincides with the d-dim one
    print(
        f"ACCEPTANCE 2: pass (weyl {worst_weyl:.2e}, st-weyl {designated.spacetime_weyl_norm:.2e}, "
        f"taub>= {min_taub_max:.2e}, coincide {worst_coincide:.2e}, {b.elapsed:.1f}s)"
    )


def test_acceptance_03_embedding_pullback_matches_metric():
    rng = np.random.default_rng(103)
    worst_diag = 0.0
    worst_off = 0.0
    with budget(10.0) as b:
        for _ in range(50):
            geom = random_geometry(rng)
            z = float(rng.uniform(-1.5, 1.5))
            phis = rng.uniform(0.0, 2.0 * np.pi, geom.d - 1)
            pull = induced_pullback(geom, z, h=1e-4, phis=phis)
            closed = spatial_metric(geom, z).diag
            worst_diag = max(worst_diag, float(np.max(np.abs(np.diag(pull) - closed) / closed)))
            off = pull - np.diag(np.diag(pull))
            worst_off = max(worst_off, float(np.max(np.abs(off))))
    assert worst_diag < 1e-6
    assert worst_off < 1e-8
    print(f"ACCEPTANCE 3: pass (diag {worst_diag:.2e}, offdiag {worst_off:.2e}, {b.elapsed:.1f}s)")


def test_acceptance_04_coordinate_transform_quality():
    rng = np.random.default_rng(104)
    with budget(10.0) as b:
        flat = Geometry(3, (RadiusProfile("constant", (1.0,)), RadiusProfile("constant", (1.0,))))
        fmap = build_u_map(flat, (-8.0, 8.0), tol=1e-10)
        zq = np.linspace(-8.0, 8.0, 1001)
        flat_err = float(np.max(np.abs(u_of_z(fmap, zq) - zq)))

        umap = build_u_map(TANH3, (-8.0, 8.0), tol=1e-10)
        zs = rng.uniform(-8.0, 8.0, 1000)
        rt1 = np.max(np.abs(z_of_u(umap, u_of_z(umap, zs)) - zs) / (1.0 + np.abs(zs)))
        us = rng.uniform(umap.u_min, umap.u_max, 1000)
        rt2 = np.max(np.abs(u_of_z(umap, z_of_u(umap, us)) - us) / (1.0 + np.abs(us)))

        ref = build_u_map(TANH3, (-8.0, 8.0), tol=1e-12)
        zprobe = np.linspace(-7.9, 7.9, 741)
        uref = u_of_z(ref, zprobe)

        def quad_err(tol):
            m = build_u_map(TANH3, (-8.0, 8.0), tol=tol)
            return float(np.max(np.abs(u_of_z(m, zprobe) - uref)))

        ratios = [quad_err(tol / 2) / quad_err(tol) for tol in (1e-6, 2.5e-7, 1e-8)]
    assert flat_err < 1e-12
    assert max(rt1, rt2) < 1e-10
    assert all(r <= 0.5 for r in ratios)
    print(
        f"ACCEPTANCE 4: pass (flat {flat_err:.2e}, roundtrip {max(rt1, rt2):.2e}, "
        f"tol-halving ratios {[round(r, 3) for r in ratios]}, {b.elapsed:.1f}s)"
    )


def test_acceptance_05_z_vs_u_transplant():
    cases = [
        (TANH3, (-5.0, 5.0), ModeSpec(1.3, 0.0, (1, 0))),
        (BUMP2, (-5.0, 5.0), ModeSpec(0.9, 0.0, (1,))),
        (
            Geometry(4, (RadiusProfile("tanh-step", (2.0, 0.6, 0.8, 0.2)),
                         RadiusProfile("gaussian-bump", (1.5, -0.4, 1.2, -0.5)),
                         RadiusProfile("cosh-well", (2.0, 0.7, 0.9, 0.1)))),
            (-4.0, 4.0),
            ModeSpec(1.1, 0.2, (1, 0, 1)),
        ),
    ]
    with budget(60.0) as b:
        summaries = []
        for geom, z_range, mode in cases:
            errs = [solver.transplant_difference(geom, z_range, mode, n_z=n)
                    for n in (1001, 2001, 4001, 8001)]
            orders = [math.log2(a / c) for a, c in zip(errs, errs[1:])]
            assert min(orders) >= 1.9, f"d={geom.d}: orders {orders}"
            assert errs[-1] < 1e-6, f"d={geom.d}: final mismatch {errs[-1]:.2e}"
            summaries.append(f"d={geom.d}: err {errs[-1]:.1e} order {min(orders):.2f}")
    print(f"ACCEPTANCE 5: pass ({'; '.join(summaries)}, {b.elapsed:.1f}s)")


def test_acceptance_06_conformal_coupling():
    assert conformal_weight(3) == 6.0
    geom = Geometry(3, (RadiusProfile("tanh-step", (2.0, 0.8, 1.0, 0.2)),
                        RadiusProfile("gaussian-bump", (1.0, 0.5, 1.0, 0.0))))
    umap = build_u_map(geom, (-5.0, 5.0), tol=1e-10)
    u = np.linspace(umap.u_min, umap.u_max, 501)
    vc = conformal_potential(geom, umap, ModeSpec(0.9, 0.0, (1, 2), coupling="conformal"), u)
    vm = potential(geom, umap, ModeSpec(0.9, 0.0, (1, 2)), u)
    evaluators = varrho_evaluators(umap, geom)
    scal = scalar_curvature_u(evaluators, u)
    prod_sq = np.prod(np.stack([evaluators[a](u)[0] ** 2 for a in range(2)]), axis=0)
    resid = float(np.max(np.abs(vc - vm - scal / 6.0 * prod_sq)))
    assert resid < 1e-8
    print(f"ACCEPTANCE 6: pass (n_3 = 6 exact, identity residual {resid:.2e})")


def test_acceptance_07_spectral_cross_validation():
    with budget(60.0) as b:
        umap = build_u_map(BUMP2, (-70.0, 70.0), tol=1e-9)
        mode = ModeSpec(0.0, 0.0, (1,))
        shoot = solver.bound_modes(BUMP2, umap, mode, (0.5, 0.999), k_max=8)
        builder = solver.potential_table_builder(BUMP2, umap, mode)
        dense = solver.fd_eigen_oracle(builder, (0.5, 0.999), n_grid=4000, k_max=8)
    assert len(shoot.eigen_omega_sq) == len(dense.eigen_omega_sq) >= 1
    rel = max(abs(a -ple) / abs(ple)
              for a, ple in zip(shoot.eigen_omega_sq, dense.eigen_omega_sq))
    assert rel < 1e-6
    assert shoot.node_counts == tuple(range(len(shoot.node_counts)))
    assert dense.node_counts == tuple(range(len(dense.node_counts)))
    assert shoot.eigen_omega_sq[0] == pytest.approx(0.7715070, abs=1e-5)  # regression pin
    print(
        f"ACCEPTANCE 7: pass (k={len(shoot.eigen_omega_sq)}, rel {rel:.2e}, "
        f"nodes {shoot.node_counts}, {b.elapsed:.1f}s)"
    )


def test_acceptance_08_scattering_sweep():
    with budget(60.0) as b:
        umap = build_u_map(STEP2, (-9.0, 9.0), tol=1e-9)
        omegas = np.linspace(1.02, 4.0, 50)
        flux_worst = 0.0
        tm_worst = 0.0
        ts = []
        for omega in omegas:
            mode = ModeSpec(float(omega), 0.0, (1,))
            res = solver.transmission(STEP2, umap, mode)
            ts.append(res.transmission)
            flux_worst = max(flux_worst, abs(res.transmission + res.reflection - 1.0))
            t_tm = solver.transfer_matrix_transmission(STEP2, umap, mode, resolution_factor=4)
            tm_worst = max(tm_worst, abs(res.transmission - t_tm))
        tail = np.asarray(ts)[omegas >= 2.0]
    assert flux_worst < 1e-6
    assert tm_worst < 1e-5
    assert np.all(np.diff(tail) > -1e-9)  # T grows monotonically at high omega
    assert tail[-1] > 1.0 - 1e-6
    print(f"ACCEPTANCE 8: pass (flux {flux_worst:.2e}, tm {tm_worst:.2e}, T_end {tail[-1]:.8f}, {b.elapsed:.1f}s)")


def test_acceptance_09_footnote_reduction():
    prof = RadiusProfile("gaussian-bump", (1.0, 0.5, 1.0, 0.0))
    g3 = Geometry(3, (prof, RadiusProfile("constant", (1.0,))))
    g2 = Geometry(2, (prof,))
    m3 = build_u_map(g3, (-6.0, 6.0), tol=1e-11)
    m2 = build_u_map(g2, (-6.0, 6.0), tol=1e-11)
    u = np.linspace(max(m3.u_min, m2.u_min), min(m3.u_max, m2.u_max), 1001)
    worst = 0.0
    for omega, mass, m1 in ((0.7, 0.3, 2), (1.2, 0.0, 1), (0.0, 0.5, 0)):
        v3 = potential(g3, m3, ModeSpec(omega, mass, (m1, 0)), u)
        v2 = potential(g2, m2, ModeSpec(omega, mass, (m1,)), u)
        worst = max(worst, float(np.max(np.abs(v3 - v2))))
    assert worst < 1e-10
    print(f"ACCEPTANCE 9: pass (max pointwise gap {worst:.2e})")


def test_acceptance_10_cli_determinism_and_verify(tmp_path):
    tasks = {
        "curvature": "curvature_flat.toml",
        "transform": "transform_step.toml",
        "potential": "potential_bump.toml",
        "spectrum": "spectrum_bump.toml",
        "scatter": "scatter_step.toml",
    }
    with budget(120.0) as b:
        for task, config in tasks.items():
            outputs = []
            for attempt in ("first", "second"):
                out = tmp_path / f"{task}_{attempt}"
                code = cli.main([task, "--config", str(CONFIG_DIR / config),
                                 "--out", str(out)])
                assert code == 0, f"{task} exited {code}"
                blobs = {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}
                assert blobs, f"{task} wrote no CSV"
                outputs.append(blobs)
            assert outputs[0] == outputs[1], f"{task} output is not byte-deterministic"
        code = cli.main(["verify", "--config", str(CONFIG_DIR / "verify.toml"),
                         "--out", str(tmp_path / "verify")])
        assert code == 0
    print(f"ACCEPTANCE 10: pass (5 tasks byte-identical, verify exit 0, {b.elapsed:.1f}s)")
