import math

import numpy as np
import pytest

from kkred.coordinates import (
    UMap,
    build_u_map,
    u_integrand,
    u_of_z,
    varrho,
    z_of_u,
)
from kkred.errors import DegenerateGeometryError, ValidationError
from kkred.geometry import Geometry
from kkred.profiles import RadiusProfile

FLAT3 = Geometry(3, (RadiusProfile("constant", (1.0,)), RadiusProfile("constant", (1.0,))))
TANH3 = Geometry(3, (RadiusProfile("tanh-step", (2.0, 1.0, 1.0, 0.0)),
                     RadiusProfile("constant", (1.0,))))


@pytest.fixture(scope="module")
def tanh_map():
    return build_u_map(TANH3, (-8.0, 8.0), tol=1e-10)


def test_flat_map_is_identity():
    umap = build_u_map(FLAT3, (-8.0, 8.0), tol=1e-10)
    zq = np.linspace(-8.0, 8.0, 1001)
    assert float(np.max(np.abs(u_of_z(umap, zq) - zq))) < 1e-12


def test_exp_profile_matches_closed_form_antiderivative():
    geom = Geometry(2, (RadiusProfile("exp-ramp", (0.0, 1.0, 1.0, 0.0)),))
    tol = 1e-11
    umap = build_u_map(geom, (-2.0, 2.0), tol=tol)

    def exact(z):
        # antiderivative of sqrt(1+e^{2z}) e^{-z}, pinned to 0 at z=0
        e = np.exp(z)
        return -np.sqrt(1.0 + e * e) * np.exp(-z) + np.arcsinh(e) + math.sqrt(2.0) - math.asinh(1.0)

    zq = np.linspace(-2.0, 2.0, 301)
    assert float(np.max(np.abs(u_of_z(umap, zq) - exact(zq)))) < tol


def test_integrand_value_at_origin(tanh_map):
    # du/dz = sqrt(1 + rho_1'^2) / (rho_1 rho_2) = sqrt(2)/2 at z = 0
    assert u_integrand(TANH3, 0.0) == pytest.approx(math.sqrt(2.0) / 2.0, rel=1e-14)
    h = 1e-6
    slope = (u_of_z(tanh_map, h) - u_of_z(tanh_map, -h)) / (2 * h)
    assert slope == pytest.approx(math.sqrt(2.0) / 2.0, rel=1e-9)


def test_map_strictly_increasing(tanh_map):
    assert np.all(np.diff(tanh_map.u_grid) > 0)
    zq = np.linspace(-8.0, 8.0, 4001)
    assert np.all(np.diff(u_of_z(tanh_map, zq)) > 0)


def test_round_trips(tanh_map):
    rng = np.random.default_rng(2)
    zs = rng.uniform(-8.0, 8.0, 1000)
    err1 = np.abs(z_of_u(tanh_map, u_of_z(tanh_map, zs)) - zs) / (1.0 + np.abs(zs))
    us = rng.uniform(tanh_map.u_min, tanh_map.u_max, 1000)
    err2 = np.abs(u_of_z(tanh_map, z_of_u(tanh_map, us)) - us) / (1.0 + np.abs(us))
    assert float(np.max(err1)) < 1e-10
    assert float(np.max(err2)) < 1e-10


def test_endpoint_queries(tanh_map):
    assert z_of_u(tanh_map, tanh_map.u_min) == tanh_map.z_min
    assert z_of_u(tanh_map, tanh_map.u_max) == tanh_map.z_max
    assert u_of_z(tanh_map, tanh_map.z_max) == tanh_map.u_max


def test_out_of_range_queries(tanh_map):
    with pytest.raises(ValidationError):
        u_of_z(tanh_map, 8.5)
    with pytest.raises(ValidationError):
        z_of_u(tanh_map, tanh_map.u_max + 1.0)


def test_build_validation():
    with pytest.raises(ValidationError):
        build_u_map(FLAT3, (2.0, -2.0))
    with pytest.raises(ValidationError):
        build_u_map(FLAT3, (-2.0, 2.0), tol=0.0)
    with pytest.raises(ValidationError):
        build_u_map(FLAT3, (-2.0, 2.0), u_origin_z=5.0)


def test_varrho_flat():
    umap = build_u_map(FLAT3, (-4.0, 4.0), tol=1e-10)
    assert varrho(umap, FLAT3, 0, 1.3) == (1.0, 0.0, 0.0)


def test_varrho_chain_rule_value(tanh_map):
    w, dw, _ = varrho(tanh_map, TANH3, 0, 0.0)
    assert w == pytest.approx(2.0, abs=1e-12)
    assert dw == pytest.approx(math.sqrt(2.0), rel=1e-12)  # rho' dz/du = 1 * 2/sqrt(2)


def test_varrho_index_validation(tanh_map):
    with pytest.raises(ValidationError):
        varrho(tanh_map, TANH3, 5, 0.0)


def test_varrho_derivatives_match_finite_differences(tanh_map):
    geom = Geometry(3, (RadiusProfile("tanh-step", (2.0, 1.0, 1.0, 0.0)),
                        RadiusProfile("gaussian-bump", (1.0, 0.5, 1.0, 0.0))))
    umap = build_u_map(geom, (-6.0, 6.0), tol=1e-11)
    u0 = np.linspace(umap.u_min + 0.5, umap.u_max - 0.5, 25)

    def fd_errors(h):
        worst1 = worst2 = 0.0
        for alpha in range(2):
            wp = varrho(umap, geom, alpha, u0 + h)[0]
            w0, dw, ddw = varrho(umap, geom, alpha, u0)
            wm = varrho(umap, geom, alpha, u0 - h)[0]
            worst1 = max(worst1, float(np.max(np.abs((wp - wm) / (2 * h) - dw))))
            worst2 = max(worst2, float(np.max(np.abs((wp - 2 * w0 + wm) / h**2 - ddw))))
        return worst1, worst2

    e1a, e2a = fd_errors(1e-2)
    e1b, e2b = fd_errors(5e-3)
    assert math.log2(e1a / e1b) >= 1.9
    assert math.log2(e2a / e2b) >= 1.9


def test_quadrature_error_halves_with_tol():
    ref = build_u_map(TANH3, (-8.0, 8.0), tol=1e-12)
    zq = np.linspace(-7.9, 7.9, 741)
    uref = u_of_z(ref, zq)

    def err(tol):
        m = build_u_map(TANH3, (-8.0, 8.0), tol=tol)
        return float(np.max(np.abs(u_of_z(m, zq) - uref)))

    for tol in (1e-6, 2.5e-7, 1e-8):
        assert err(tol / 2) <= 0.5 * err(tol)


def test_truncation_for_degenerating_profile():
    prof = RadiusProfile("cosh-well", (0.5, 0.5, 1.0, 0.0), allows_degeneration=True)
    geom = Geometry(2, (prof,))
    umap = build_u_map(geom, (-4.0, 4.0), u_origin_z=-2.0, tol=1e-9)
    assert umap.truncated_high
    assert not umap.truncated_low
    assert umap.z_max < 0.0  # stops before the zero of rho at z = 0
    # the same profile without the flag is a hard error
    strict = Geometry(2, (RadiusProfile("cosh-well", (0.5, 0.5, 1.0, 0.0)),))
    with pytest.raises(DegenerateGeometryError):
        build_u_map(strict, (-4.0, 4.0), u_origin_z=-2.0)


def test_degenerate_origin_rejected():
    prof = RadiusProfile("cosh-well", (0.5, 0.5, 1.0, 0.0), allows_degeneration=True)
    geom = Geometry(2, (prof,))
    with pytest.raises(DegenerateGeometryError):
        build_u_map(geom, (-4.0, 4.0), u_origin_z=0.0)


def test_umap_rejects_non_monotone_grids():
    z = np.array([0.0, 1.0, 2.0])
    with pytest.raises(ValidationError):
        UMap(z_grid=z, u_grid=np.array([0.0, 2.0, 1.0]), dzdu_grid=np.ones(3),
             u_origin_z=0.0, tol=1e-9)
