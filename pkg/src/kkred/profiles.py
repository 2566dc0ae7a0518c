"""Analytic radius-profile families with exact first and second derivatives.

Curvature needs second derivatives of every compactification radius, so the
profile set is a closed list of smooth analytic families instead of arbitrary
user expressions; the derivatives are coded by hand and cross-checked against
finite differences in the test suite.  All quantities are dimensionless.

Config grammar (one table per profile): a ``family`` key naming one of the
families below plus that family's named real parameters:

    constant        rho(z) = a                             keys: a          (a > 0)
    tanh-step       rho(z) = a + b*tanh(k*(z - z0))        keys: a,b,k,z0   (k > 0)
    gaussian-bump   rho(z) = a + b*exp(-((z-z0)/sigma)^2)  keys: a,b,sigma,z0  (sigma > 0)
    exp-ramp        rho(z) = a + b*exp(k*(z - z0))         keys: a,b,k,z0   (k != 0)
    cosh-well       rho(z) = a - b/cosh(k*(z - z0))^2      keys: a,b,k,z0   (k > 0)
    sum-of-terms    pointwise sum of sub-profiles          keys: terms = [ {...}, ... ]

An optional boolean key ``allows_degeneration`` marks a profile whose isolated
zeros are intended (dimensional-reduction studies); positivity checks then
report zero crossings instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "RadiusProfile",
    "PositivityReport",
    "eval_profile",
    "parse_profile",
    "render_profile",
    "validate_positivity",
]

FAMILIES = ("constant", "tanh-step", "gaussian-bump", "exp-ramp", "cosh-well", "sum-of-terms")

_PARAM_NAMES = {
    "constant": ("a",),
    "tanh-step": ("a", "b", "k", "z0"),
    "gaussian-bump": ("a", "b", "sigma", "z0"),
    "exp-ramp": ("a", "b", "k", "z0"),
    "cosh-well": ("a", "b", "k", "z0"),
}

# (family, name) pairs that must be strictly positive at parse time.  Everything
# else is a shape parameter; positivity of rho itself over a z-range is checked
# separately by validate_positivity.
_POSITIVE_PARAMS = {
    ("constant", "a"),
    ("tanh-step", "k"),
    ("gaussian-bump", "sigma"),
    ("cosh-well", "k"),
}


@dataclass(frozen=True)
class RadiusProfile:
    """One compactification radius rho(z) as an analytic family.

    ``params`` holds the family's named parameters in the documented order;
    ``terms`` is used only by the ``sum-of-terms`` family.
    """

    family: str
    params: tuple[float, ...] = ()
    terms: tuple["RadiusProfile", ...] = ()
    allows_degeneration: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown profile family {self.family!r}")
        if self.family == "sum-of-terms":
            if self.params:
                raise ValidationError("sum-of-terms takes sub-profiles, not parameters")
            if not self.terms:
                raise ValidationError("sum-of-terms needs at least one term")
        else:
            names = _PARAM_NAMES[self.family]
            if self.terms:
                raise ValidationError(f"{self.family} takes no sub-profiles")
            if len(self.params) != len(names):
                raise ValidationError(
                    f"{self.family} needs {len(names)} parameters {names}, got {len(self.params)}"
                )
            for name, value in zip(names, self.params):
                if not np.isfinite(value):
                    raise ValidationError(f"{self.family}: parameter {name} is not finite")
                if (self.family, name) in _POSITIVE_PARAMS and value <= 0:
                    raise ValidationError(
                        f"{self.family}: parameter {name} must be positive, got {value}"
                    )
                if self.family == "exp-ramp" and name == "k" and value == 0:
                    raise ValidationError("exp-ramp: rate k must be nonzero")

    def eval(self, z):
        """Return (rho, drho/dz, d2rho/dz2) at ``z`` (scalar or array)."""
        return eval_profile(self, z)


def eval_profile(profile: RadiusProfile, z):
    """Evaluate a profile and its exact first and second derivatives.

    Accepts a float or an ndarray; returns a triple of matching shape.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValidationError("profile evaluation point must be finite")
    fam = profile.family
    if fam == "constant":
        (a,) = profile.params
        zero = np.zeros_like(z)
        return a + zero, zero, zero.copy()
    if fam == "tanh-step":
        a, b, k, z0 = profile.params
        t = np.tanh(k * (z - z0))
        s = 1.0 - t * t
        return a + b * t, b * k * s, -2.0 * b * k * k * t * s
    if fam == "gaussian-bump":
        a, b, sigma, z0 = profile.params
        x = (z - z0) / sigma
        g = np.exp(-x * x)
        return a + b * g, -2.0 * b * x * g / sigma, b * g * (4.0 * x * x - 2.0) / sigma**2
    if fam == "exp-ramp":
        a, b, k, z0 = profile.params
        e = np.exp(k * (z - z0))
        return a + b * e, b * k * e, b * k * k * e
    if fam == "cosh-well":
        a, b, k, z0 = profile.params
        t = np.tanh(k * (z - z0))
        s = 1.0 - t * t  # sech^2
        return a - b * s, 2.0 * b * k * s * t, 2.0 * b * k * k * s * (s - 2.0 * t * t)
    # sum-of-terms
    rho = np.zeros_like(z)
    drho = np.zeros_like(z)
    ddrho = np.zeros_like(z)
    for term in profile.terms:
        r, d1, d2 = eval_profile(term, z)
        rho = rho + r
        drho = drho + d1
        ddrho = ddrho + d2
    return rho, drho, ddrho


def parse_profile(spec: dict) -> RadiusProfile:
    """Build a validated profile from a config fragment (dict with named keys)."""
    if not isinstance(spec, dict):
        raise ValidationError(f"profile fragment must be a table, got {type(spec).__name__}")
    data = dict(spec)
    family = data.pop("family", None)
    if family is None:
        raise ValidationError("profile fragment is missing the 'family' key")
    if family not in FAMILIES:
        raise ValidationError(f"unknown profile family {family!r}")
    allows = bool(data.pop("allows_degeneration", False))
    if family == "sum-of-terms":
        terms = data.pop("terms", None)
        if data:
            raise ValidationError(f"sum-of-terms: unknown keys {sorted(data)}")
        if not isinstance(terms, (list, tuple)) or not terms:
            raise ValidationError("sum-of-terms needs a non-empty 'terms' list")
        return RadiusProfile(
            family, terms=tuple(parse_profile(t) for t in terms), allows_degeneration=allows
        )
    names = _PARAM_NAMES[family]
    missing = [n for n in names if n not in data]
    if missing:
        raise ValidationError(f"{family}: missing parameters {missing}")
    extra = sorted(set(data) - set(names))
    if extra:
        raise ValidationError(f"{family}: unknown keys {extra}")
    try:
        params = tuple(float(data[n]) for n in names)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{family}: parameters must be real numbers ({exc})") from exc
    return RadiusProfile(family, params=params, allows_degeneration=allows)


def render_profile(profile: RadiusProfile) -> dict:
    """Inverse of parse_profile: emit the config fragment for a profile."""
    out: dict = {"family": profile.family}
    if profile.family == "sum-of-terms":
        out["terms"] = [render_profile(t) for t in profile.terms]
    else:
        out.update(zip(_PARAM_NAMES[profile.family], profile.params))
    if profile.allows_degeneration:
        out["allows_degeneration"] = True
    return out


@dataclass(frozen=True)
class PositivityReport:
    """Result of sampling a profile for sign violations over an interval."""

    min_value: float
    min_z: float
    violations: tuple[float, ...] = ()
    zero_crossings: tuple[float, ...] = ()
    ok: bool = field(default=True)


def validate_positivity(
    profile: RadiusProfile, z_range: tuple[float, float], n_samples: int = 256
) -> PositivityReport:
    """Sample rho over ``z_range`` and report the minimum and any sign violations.

    For a profile flagged ``allows_degeneration`` the sampled sign changes are
    reported as zero crossings (midpoints of bracketing samples) and only
    strictly negative samples count as violations.
    """
    z_lo, z_hi = float(z_range[0]), float(z_range[1])
    if not z_lo < z_hi:
        raise ValidationError(f"empty z-range [{z_lo}, {z_hi}]")
    if n_samples < 2:
        raise ValidationError("n_samples must be at least 2")
    z = np.linspace(z_lo, z_hi, n_samples)
    rho, _, _ = eval_profile(profile, z)
    imin = int(np.argmin(rho))
    if profile.allows_degeneration:
        bad = z[rho < 0.0]
        sign_flip = np.nonzero(np.diff(np.signbit(rho)))[0]
        crossings = tuple(0.5 * (z[i] + z[i + 1]) for i in sign_flip)
        ok = bad.size == 0
    else:
        bad = z[rho <= 0.0]
        crossings = ()
        ok = bad.size == 0
    return PositivityReport(
        min_value=float(rho[imin]),
        min_z=float(z[imin]),
        violations=tuple(float(v) for v in bad),
        zero_crossings=crossings,
        ok=ok,
    )
