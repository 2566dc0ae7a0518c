"""Induced metrics, tetrads, curvature closed forms, and tensor oracles.

A geometry is a spatial dimension ``d`` plus ``d-1`` radius profiles
rho_1(z)..rho_{d-1}(z).  The torus-fibred space carries the Riemannian interval

    dl^2 = rho_1(z)^2 dphi_1^2 + ... + rho_{d-1}(z)^2 dphi_{d-1}^2 + rho_d(z)^2 dz^2,

with rho_d(z) = sqrt(1 + sum_a rho_a'(z)^2), and the static space-time adds a
``+dt^2`` with all spatial signs flipped (signature +,-,...,-).

Sign convention.  The closed-form scalar curvatures in this module are stated
in the convention natural for the (+,-,...,-) space-time metric with the
standard (geometric) Riemann sign; for such static product metrics that value
equals minus the usual Riemannian scalar of the positive-definite spatial
metric, and the round sphere comes out negative.  The finite-difference oracle
computes standard-sign tensors internally and converts in its report, so that
the reported spatial and space-time scalars agree with each other and with
the closed forms.  Weyl and Taub norms are insensitive to the convention.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateGeometryError, ValidationError
from .profiles import RadiusProfile

__all__ = [
    "Geometry",
    "MetricSample",
    "Tetrad",
    "CurvatureReport",
    "spatial_metric",
    "spacetime_metric",
    "tetrad",
    "scalar_curvature_closed_3d",
    "scalar_curvature_u",
    "embed_point",
    "induced_pullback",
    "induced_metric_oracle",
    "curvature_oracle",
]


@dataclass(frozen=True)
class Geometry:
    """Spatial dimension d >= 2 and the d-1 radius profiles rho_1..rho_{d-1}."""

    d: int
    profiles: tuple[RadiusProfile, ...]

    def __post_init__(self):
        if self.d < 2:
            raise ValidationError(f"spatial dimension must be >= 2, got {self.d}")
        if len(self.profiles) != self.d - 1:
            raise ValidationError(
                f"geometry with d={self.d} needs {self.d - 1} profiles, got {len(self.profiles)}"
            )

    def radii(self, z):
        """Stacked (rho_a, rho_a', rho_a'') for a = 1..d-1; shape (d-1,) + shape(z)."""
        triples = [p.eval(z) for p in self.profiles]
        rho = np.stack([t[0] for t in triples])
        drho = np.stack([t[1] for t in triples])
        ddrho = np.stack([t[2] for t in triples])
        return rho, drho, ddrho

    def rho_last(self, z):
        """rho_d = sqrt(1 + sum rho_a'^2) and its z-derivative."""
        _, drho, ddrho = self.radii(z)
        rd = np.sqrt(1.0 + np.sum(drho * drho, axis=0))
        return rd, np.sum(drho * ddrho, axis=0) / rd


@dataclass(frozen=True, eq=False)
class MetricSample:
    """Diagonal of the spatial metric (angles first, z last) and sqrt(det)."""

    diag: np.ndarray
    sqrt_det: float

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True, eq=False)
class Tetrad:
    """Diagonal orthonormal co-frame e^(a)_mu for the space-time metric."""

    matrix: np.ndarray  # rows a, columns mu; diagonal (1, rho_1, ..., rho_d)

    def eta(self) -> np.ndarray:
        n = self.matrix.shape[0]
        return np.diag([1.0] + [-1.0] * (n - 1))

    def reconstruct_metric(self) -> np.ndarray:
        """g_{mu nu} = e^(a)_mu e^(b)_nu eta_{ab}."""
        return self.matrix.T @ self.eta() @ self.matrix


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    """Finite-difference curvature data of one geometry at one z.

    ``scalar`` and ``ricci`` follow the package sign convention (round sphere
    negative) so ``scalar == trace(inverse spatial metric @ ricci)`` and the
    space-time scalar from the (+,-,...,-) metric matches ``scalar``.
    """

    scalar: float
    spacetime_scalar: float
    ricci: np.ndarray
    weyl_norm: float
    taub_norm: float
    spacetime_weyl_norm: float
    scalar_err: float
    h: float


def _radii_checked(geom: Geometry, z: float):
    rho, drho, ddrho = geom.radii(z)
    if np.any(rho <= 0.0):
        bad = int(np.argmin(rho)) + 1
        raise DegenerateGeometryError(f"rho_{bad}(z={z}) = {rho[bad - 1]} <= 0")
    return rho, drho, ddrho


def spatial_metric(geom: Geometry, z: float) -> MetricSample:
    """Diagonal spatial metric (rho_1^2, ..., rho_{d-1}^2, rho_d^2) at z."""
    rho, drho, _ = _radii_checked(geom, z)
    gzz = 1.0 + np.sum(drho * drho)
    diag = np.concatenate([rho * rho, [gzz]])
    sqrt_det = float(np.prod(rho) * np.sqrt(gzz))
    return MetricSample(diag=diag, sqrt_det=sqrt_det)


def spacetime_metric(geom: Geometry, z: float) -> np.ndarray:
    """Diagonal of the (1+d) space-time metric: (+1, -rho_1^2, ..., -rho_d^2)."""
    sample = spatial_metric(geom, z)
    return np.concatenate([[1.0], -sample.diag])


def tetrad(geom: Geometry, z: float) -> Tetrad:
    """Diagonal tetrad (1, rho_1, ..., rho_{d-1}, rho_d) at z."""
    sample = spatial_metric(geom, z)
    return Tetrad(matrix=np.diag(np.concatenate([[1.0], np.sqrt(sample.diag)])))


def scalar_curvature_closed_3d(geom: Geometry, z: float) -> float:
    """Closed-form scalar curvature for d=3, directly in the z variable.

    Written term by term with rho_3 = sqrt(1 + rho_1'^2 + rho_2'^2) implicit in
    the denominators; symmetric under swapping the two profiles.
    """
    if geom.d != 3:
        raise ValidationError(f"closed-form 3d curvature needs d=3, got d={geom.d}")
    (r1, r2), (p1, p2), (q1, q2) = _radii_checked(geom, z)
    delta = 1.0 + p1 * p1 + p2 * p2  # rho_3^2
    denom = r1 * r2 * delta * delta
    term1 = 2.0 * (r2 * (1.0 + p2 * p2) - r1 * p1 * p2) * q1 / denom
    term2 = 2.0 * (r1 * (1.0 + p1 * p1) - r2 * p1 * p2) * q2 / denom
    term3 = 2.0 * p1 * p2 / (r1 * r2 * delta)
    return float(term1 + term2 + term3)


def scalar_curvature_u(varrhos: Sequence[Callable], u):
    """Scalar curvature from u-space radius evaluators, any dimension.

    Each evaluator maps u -> (w, dw/du, d2w/du2) for one u-space radius
    w_a(u) = rho_a(z(u)).  The curvature is

        2 * [ sum_a (w_a'/w_a)' - sum_{a<b} (w_a'/w_a)(w_b'/w_b) ] / prod_a w_a^2 ,

    with primes denoting d/du.
    """
    triples = [f(u) for f in varrhos]
    ratios = [d1 / w for (w, d1, _) in triples]
    leads = [d2 / w - r * r for (w, _, d2), r in zip(triples, ratios)]
    cross = sum(ra * rb for ra, rb in itertools.combinations(ratios, 2))
    prod_sq = np.prod(np.stack([w * w for (w, _, _) in triples]), axis=0)
    return 2.0 * (sum(leads) - cross) / prod_sq


def embed_point(geom: Geometry, t: float, phis: Sequence[float], z: float) -> np.ndarray:
    """Ambient coordinates of the point (t, phi_1..phi_{d-1}, z).

    x^0 = t, x^{2a-1} = rho_a cos(phi_a), x^{2a} = rho_a sin(phi_a) for
    a = 1..d-1, and x^{2d-1} = z; the even-index coordinate carries the sine so
    that the flat ambient interval pulls back to the diagonal metric above.
    """
    phis = np.asarray(phis, dtype=float)
    if phis.shape != (geom.d - 1,):
        raise ValidationError(f"need {geom.d - 1} angles, got shape {phis.shape}")
    if not (np.isfinite(t) and np.all(np.isfinite(phis))):
        raise ValidationError("embedding coordinates must be finite")
    rho, _, _ = geom.radii(z)
    out = np.empty(2 * geom.d)
    out[0] = t
    out[1:-1:2] = rho * np.cos(phis)
    out[2:-1:2] = rho * np.sin(phis)
    out[-1] = z
    return out


def induced_pullback(
    geom: Geometry, z: float, h: float = 1e-4, phis: Sequence[float] | None = None
) -> np.ndarray:
    """Pullback of the flat ambient spatial metric through the embedding.

    Jacobian by second-order central differences in (phi_1..phi_{d-1}, z);
    returns the full d x d matrix, which should match the closed-form diagonal
    spatial metric to O(h^2) with vanishing off-diagonal entries.
    """
    d = geom.d
    if phis is None:
        phis = 0.4 + 0.3 * np.arange(d - 1)
    q0 = np.concatenate([np.asarray(phis, dtype=float), [z]])

    def spatial_embed(q):
        return embed_point(geom, 0.0, q[:-1], q[-1])[1:]

    jac = np.empty((2 * d - 1, d))
    for k in range(d):
        qp, qm = q0.copy(), q0.copy()
        qp[k] += h
        qm[k] -= h
        jac[:, k] = (spatial_embed(qp) - spatial_embed(qm)) / (2.0 * h)
    return jac.T @ jac


def induced_metric_oracle(geom: Geometry, z: float, h: float = 1e-4) -> MetricSample:
    """MetricSample built from the embedding pullback (oracle for spatial_metric)."""
    g = induced_pullback(geom, z, h)
    return MetricSample(diag=np.diag(g).copy(), sqrt_det=float(np.sqrt(np.linalg.det(g))))


# ---------------------------------------------------------------------------
# Generic finite-difference tensor machinery (standard geometric sign:
# round sphere scalar positive).  metric_fn maps a coordinate vector of
# length n to the n x n metric matrix.
# ---------------------------------------------------------------------------

# five-point first-derivative stencil, offsets -2..2, weights / (12 h)
_D1_OFFSETS = (-2, -1, 1, 2)
_D1_WEIGHTS = (1.0, -8.0, 8.0, -1.0)


def _metric_derivs(metric_fn: Callable, x: np.ndarray, h: float):
    """Metric, first and second coordinate derivatives by 5-point stencils (O(h^4))."""
    n = x.size
    g = np.asarray(metric_fn(x), dtype=float)

    def at(offsets):
        y = x.copy()
        for axis, steps in offsets:
            y[axis] += steps * h
        return np.asarray(metric_fn(y), dtype=float)

    dg = np.zeros((n, n, n))
    axis_vals = {}
    for e in range(n):
        vals = {s: at([(e, s)]) for s in _D1_OFFSETS}
        axis_vals[e] = vals
        dg[e] = sum(w * vals[s] for s, w in zip(_D1_OFFSETS, _D1_WEIGHTS)) / (12.0 * h)

    ddg = np.zeros((n, n, n, n))
    for e in range(n):
        vals = axis_vals[e]
        # five-point second derivative along one axis
        ddg[e, e] = (
            -vals[2] + 16.0 * vals[1] - 30.0 * g + 16.0 * vals[-1] - vals[-2]
        ) / (12.0 * h * h)
        for f in range(e + 1, n):
            acc = np.zeros_like(g)
            for si, wi in zip(_D1_OFFSETS, _D1_WEIGHTS):
                for sj, wj in zip(_D1_OFFSETS, _D1_WEIGHTS):
                    acc += wi * wj * at([(e, si), (f, sj)])
            ddg[e, f] = acc / (144.0 * h * h)
            ddg[f, e] = ddg[e, f]
    return g, dg, ddg


def _christoffel(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    ginv = np.linalg.inv(g)
    return 0.5 * (
        np.einsum("ad,bdc->abc", ginv, dg)
        + np.einsum("ad,cdb->abc", ginv, dg)
        - np.einsum("ad,dbc->abc", ginv, dg)
    )


def _christoffel_derivs(g, dg, ddg) -> np.ndarray:
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("am,emn,nd->ead", ginv, dg, ginv)
    sym = (
        np.einsum("ebdc->ebdc", ddg)
        + np.einsum("ecdb->ebdc", ddg)
        - np.einsum("edbc->ebdc", ddg)
    )  # partial_e of (d_b g_dc + d_c g_db - d_d g_bc), laid out [e,b,d,c]
    first = (
        np.einsum("ead,bdc->eabc", dginv, dg)
        + np.einsum("ead,cdb->eabc", dginv, dg)
        - np.einsum("ead,dbc->eabc", dginv, dg)
    )
    return 0.5 * first + 0.5 * np.einsum("ad,ebdc->eabc", ginv, sym)


def _riemann(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + G^a_{ce}G^e_{db} - G^a_{de}G^e_{cb}."""
    return (
        np.einsum("cadb->abcd", dgamma)
        - np.einsum("dacb->abcd", dgamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )


def _curvature_parts(metric_fn: Callable, x: np.ndarray, h: float):
    """Riemann (lowered), Ricci, scalar, and Weyl of metric_fn at x, one step size."""
    g, dg, ddg = _metric_derivs(metric_fn, x, h)
    gamma = _christoffel(g, dg)
    dgamma = _christoffel_derivs(g, dg, ddg)
    riem = _riemann(gamma, dgamma)
    ric = np.einsum("abad->bd", riem)
    ginv = np.linalg.inv(g)
    scal = float(np.einsum("bd,bd", ginv, ric))
    riem_low = np.einsum("ae,ebcd->abcd", g, riem)
    n = g.shape[0]
    if n >= 3:
        weyl = (
            riem_low
            - (
                np.einsum("ac,bd->abcd", g, ric)
                - np.einsum("ad,bc->abcd", g, ric)
                + np.einsum("bd,ac->abcd", g, ric)
                - np.einsum("bc,ad->abcd", g, ric)
            )
            / (n - 2)
            + scal
            * (np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g))
            / ((n - 1) * (n - 2))
        )
    else:
        weyl = np.zeros_like(riem_low)  # no conformal curvature below n=3
    return {"g": g, "gamma": gamma, "ric": ric, "scalar": scal, "weyl": weyl}


def _schouten_like(metric_fn: Callable, x: np.ndarray, h: float) -> np.ndarray:
    parts = _curvature_parts(metric_fn, x, h)
    return parts["ric"] - 0.25 * parts["scalar"] * parts["g"]


def _taub_tensor(metric_fn: Callable, x: np.ndarray, h_outer: float, h_inner: float):
    """T_{abc} = grad_a S_bc - grad_b S_ac with S = Ricci - (1/4) scalar metric.

    The derivative of S is taken by an outer 5-point stencil over full
    curvature assemblies, so this needs third metric derivatives' worth of
    resolution; h_outer should sit well above the inner rounding floor.
    """
    n = x.size
    parts = _curvature_parts(metric_fn, x, h_inner)
    gamma = parts["gamma"]
    s0 = parts["ric"] - 0.25 * parts["scalar"] * parts["g"]
    ds = np.zeros((n, n, n))
    for e in range(n):
        acc = np.zeros((n, n))
        for s, w in zip(_D1_OFFSETS, _D1_WEIGHTS):
            y = x.copy()
            y[e] += s * h_outer
            acc += w * _schouten_like(metric_fn, y, h_inner)
        ds[e] = acc / (12.0 * h_outer)
    grad = (
        ds
        - np.einsum("eab,ec->abc", gamma, s0)
        - np.einsum("eac,be->abc", gamma, s0)
    )
    return grad - np.einsum("bac->abc", grad)


def _frob(t: np.ndarray) -> float:
    return float(np.sqrt(np.sum(t * t)))


def _spatial_metric_fn(geom: Geometry):
    def metric_fn(x):
        sample = spatial_metric(geom, float(x[-1]))
        return np.diag(sample.diag)

    return metric_fn


def _spacetime_metric_fn(geom: Geometry):
    def metric_fn(x):
        return np.diag(spacetime_metric(geom, float(x[-1])))

    return metric_fn


def _richardson(coarse, fine):
    """Combine O(h^4) results at h and h/2 to O(h^6)."""
    return (16.0 * fine - coarse) / 15.0


def curvature_oracle(geom: Geometry, z: float, h: float = 1e-3,
                     with_taub: bool = True) -> CurvatureReport:
    """Finite-difference curvature report at z, independent of the closed forms.

    Every tensor is assembled from 5-point central stencils of the metric
    components at steps h and h/2 and Richardson-combined.  The Taub tensor
    uses an outer stencil of width 10*h over full curvature assemblies; it
    dominates the cost, so callers that only need scalars can pass
    ``with_taub=False`` (taub_norm is then NaN).
    """
    _radii_checked(geom, z)  # fail early on degenerate points
    d = geom.d
    x_sp = np.concatenate([0.4 + 0.3 * np.arange(d - 1), [z]])
    x_st = np.concatenate([[0.0], x_sp])
    sp_fn = _spatial_metric_fn(geom)
    st_fn = _spacetime_metric_fn(geom)

    sp1 = _curvature_parts(sp_fn, x_sp, h)
    sp2 = _curvature_parts(sp_fn, x_sp, h / 2.0)
    st1 = _curvature_parts(st_fn, x_st, h)
    st2 = _curvature_parts(st_fn, x_st, h / 2.0)

    scalar_sp = _richardson(sp1["scalar"], sp2["scalar"])
    scalar_st = _richardson(st1["scalar"], st2["scalar"])
    ricci = _richardson(sp1["ric"], sp2["ric"])
    weyl = _richardson(sp1["weyl"], sp2["weyl"])
    weyl_st = _richardson(st1["weyl"], st2["weyl"])

    if with_taub:
        h_taub = 10.0 * h
        taub = _richardson(
            _taub_tensor(sp_fn, x_sp, h_taub, h),
            _taub_tensor(sp_fn, x_sp, h_taub / 2.0, h / 2.0),
        )
        taub_norm = _frob(taub)
    else:
        taub_norm = math.nan

    return CurvatureReport(
        scalar=-scalar_sp,  # package convention; equals the space-time value
        spacetime_scalar=scalar_st,
        ricci=-ricci,
        weyl_norm=_frob(weyl),
        taub_norm=taub_norm,
        spacetime_weyl_norm=_frob(weyl_st),
        scalar_err=abs(sp2["scalar"] - sp1["scalar"]) / 15.0,
        h=h,
    )
