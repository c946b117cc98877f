"""Quadrature for Omega(p; z) = int_{T^3} phi^2(s) / (z - w_p(s)) ds, z >= M(p).

At z = M(p) the integrand has an integrable |s - q0|^-2 singularity at the
band maximizer.  The integral is split by a smooth radial bump chi centered
at q0 with support radius rho:

* far field: (1 - chi) phi^2 / (z - w) is a smooth periodic function,
  integrated with the product midpoint (trapezoid) rule - spectrally
  accurate on the torus;

* near field: the chi part is integrated in polar coordinates about q0,
  where the volume-element factor r^2 cancels the singularity.  On each
  ray the quadratic Hessian model phi^2(q0) r^2 / (delta + k(nu) r^2),
  k(nu) = nu.(-A)nu / 2, is subtracted and re-added in closed form, so the
  sharp boundary layer of width sqrt(delta) near the edge never has to be
  resolved by the radial Gauss rule.  At delta = 0 the closed form reduces
  to the removable-singularity value rho/k(nu) per ray, i.e. the r -> 0
  limit 2 phi^2(q0) / (nu.(-A)nu).

An OmegaEvaluator caches node data per refinement level, so evaluating at
many spectral parameters z (root finding, expansion fits) costs one
vectorised reduction per z, and values at different z share identical
node sets.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import comb

import numpy as np

from .errors import (
    BelowThresholdError,
    QuadratureError,
    QuadratureNotConvergedError,
)
from .torus import TorusVector, wrap_angles

RHO_CAP = 1.0  # default ball radius cap (must stay below pi/2)


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and tolerances for the split quadrature.

    n_grid     torus trapezoid nodes per axis (far field)
    rho        bump support radius; None selects it automatically
    n_radial   Gauss-Legendre nodes on [0, rho]
    n_angular  polar nodes in cos(theta); 2*n_angular azimuthal nodes
    bump_order C^k polynomial bump transition; None = C-infinity bump
    rel_tol    target relative tolerance for the refinement loop
    max_refinements  number of node-count doublings allowed
    """

    n_grid: int = 64
    rho: float | None = None
    n_radial: int = 48
    n_angular: int = 26
    bump_order: int | None = None
    rel_tol: float = 1e-6
    max_refinements: int = 2

    def __post_init__(self):
        if self.n_grid < 16:
            raise QuadratureError("n_grid must be >= 16")
        if self.n_radial < 4 or self.n_angular < 4:
            raise QuadratureError("too few radial/angular nodes")
        if self.rho is not None and not 0.0 < self.rho < 0.5 * np.pi:
            raise QuadratureError("rho must lie in (0, pi/2)")
        if self.max_refinements < 1:
            raise QuadratureError("refinement doubling must be supported")

    def refined(self):
        """The spec with all node counts doubled."""
        return replace(self, n_grid=2 * self.n_grid,
                       n_radial=2 * self.n_radial,
                       n_angular=2 * self.n_angular)


@dataclass(frozen=True)
class OmegaValue:
    """Value of Omega with an a-posteriori refinement error estimate."""

    value: float
    estimated_error: float
    near_field: float
    far_field: float
    n_grid: int
    rho: float


def bump_profile(t, order=None):
    """Radial bump: 1 on t <= 1/2, 0 on t >= 1, smooth in between.

    order=None gives the C-infinity exp(-1/s) transition; an integer k
    gives the C^k polynomial smoothstep.
    """
    t = np.asarray(t, dtype=float)
    s = np.clip(2.0 * (t - 0.5), 0.0, 1.0)
    if order is None:
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            fa = np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
            fb = np.where(s < 1.0,
                          np.exp(-1.0 / np.where(s < 1.0, 1.0 - s, 1.0)), 0.0)
        return fb / (fa + fb)
    k = int(order)
    rise = np.zeros_like(s)
    for n in range(k + 1):
        rise += comb(k + n, n) * comb(2 * k + 1, k - n) * (-s) ** n
    rise *= s ** (k + 1)
    return 1.0 - rise


def sphere_product_rule(n):
    """Gauss-Legendre x trapezoid product rule on the unit sphere.

    n nodes in cos(theta), 2n equispaced azimuthal nodes; weights sum to
    4*pi.  Returns (directions (m, 3), weights (m,)).
    """
    xu, wu = np.polynomial.legendre.leggauss(n)
    nphi = 2 * n
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    wphi = 2.0 * np.pi / nphi
    st = np.sqrt(np.clip(1.0 - xu * xu, 0.0, None))
    nu = np.empty((n * nphi, 3))
    nu[:, 0] = np.outer(st, np.cos(phi)).ravel()
    nu[:, 1] = np.outer(st, np.sin(phi)).ravel()
    nu[:, 2] = np.outer(xu, np.ones(nphi)).ravel()
    return nu, np.outer(wu, np.full(nphi, wphi)).ravel()


def _radial_closed_form(delta, k, rho):
    """int_0^rho r^2 / (delta + k r^2) dr, vectorised over k > 0."""
    k = np.asarray(k, dtype=float)
    if delta == 0.0:
        return rho / k
    a = np.sqrt(delta / k)
    return (rho - a * np.arctan(rho / a)) / k


def _radial_closed_form_sq(delta, k, rho):
    """int_0^rho r^2 / (delta + k r^2)^2 dr for delta > 0."""
    k = np.asarray(k, dtype=float)
    a = np.sqrt(delta / k)
    return (np.arctan(rho / a) / (2.0 * a)
            - rho / (2.0 * (a * a + rho * rho))) / (k * k)


def auto_rho(model, p, cp, cap=RHO_CAP):
    """Bump support radius: the largest r <= cap with M - w_p > 0 along a
    sampled bundle of rays from q0 (halved at the first sign dip)."""
    q0 = cp.q0.as_array()
    nu, _ = sphere_product_rule(8)
    radii = np.linspace(0.02, cap, 50)
    pts = q0[None, None, :] + radii[:, None, None] * nu[None, :, :]
    u = cp.M - model.w(p, (pts[..., 0], pts[..., 1], pts[..., 2]))
    floor = 1e-12 * max(cp.spread, 1.0)
    bad = np.nonzero(np.min(u, axis=1) <= floor)[0]
    if bad.size == 0:
        return float(cap)
    return float(max(0.5 * radii[bad[0]], 0.05))


class OmegaEvaluator:
    """Cached-node evaluator of Omega(p; .) for one (model, p, spec).

    Levels of node data are built lazily; level L uses node counts scaled
    by 2^L relative to the base spec.  evaluate() runs the refinement loop
    of the spec; values at a fixed level are deterministic functions of z
    (fixed-order reductions).  Lazy level construction is not synchronised:
    share an evaluator across threads only after its levels are built.
    """

    def __init__(self, model, p, cp, spec: QuadratureSpec | None = None):
        self.model = model
        self.p = np.asarray(
            p.as_array() if isinstance(p, TorusVector) else p, dtype=float)
        self.cp = cp
        self.spec = spec if spec is not None else QuadratureSpec()
        if not cp.nondegenerate:
            raise QuadratureError("critical point is not certified")
        self.rho = (self.spec.rho if self.spec.rho is not None
                    else auto_rho(model, self.p, cp))
        self.q0 = cp.q0.as_array()
        self.M = cp.M
        self._phi0_sq = float(model.phi(self.q0)) ** 2
        self._negA = -cp.hessian
        self._levels = []
        self._below_tol = 1e-12 * max(1.0, abs(self.M))

    # -- node data ------------------------------------------------------

    def _build_level(self, level):
        s = self.spec
        n_grid = s.n_grid * 2 ** level
        n_rad = s.n_radial * 2 ** level
        n_ang = s.n_angular * 2 ** level
        rho = self.rho

        # far field: midpoint torus grid, weight h^3 (1-chi) phi^2
        ax = -np.pi + 2.0 * np.pi * (np.arange(n_grid) + 0.5) / n_grid
        x1 = ax[:, None, None]
        x2 = ax[None, :, None]
        x3 = ax[None, None, :]
        d1 = wrap_angles(ax - self.q0[0])
        d2 = wrap_angles(ax - self.q0[1])
        d3 = wrap_angles(ax - self.q0[2])
        dist = np.sqrt((d1 * d1)[:, None, None] + (d2 * d2)[None, :, None]
                       + (d3 * d3)[None, None, :])
        weight = (2.0 * np.pi / n_grid) ** 3 * (
            1.0 - bump_profile(dist / rho, s.bump_order))
        phi2 = np.broadcast_to(np.asarray(self.model.phi((x1, x2, x3))) ** 2,
                               dist.shape)
        weight = weight * phi2
        keep = weight > 0.0
        far_weight = weight[keep]
        far_w = np.broadcast_to(self.model.w(self.p, (x1, x2, x3)),
                                dist.shape)[keep]
        del weight, phi2, dist, keep

        # near field: polar nodes about q0
        xr, wr = np.polynomial.legendre.leggauss(n_rad)
        r = 0.5 * rho * (xr + 1.0)
        wr = 0.5 * rho * wr
        nu, wa = sphere_product_rule(n_ang)
        pts = self.q0[None, None, :] + r[:, None, None] * nu[None, :, :]
        w_near = np.asarray(self.model.w(
            self.p, (pts[..., 0], pts[..., 1], pts[..., 2])))
        u = self.M - w_near
        if np.min(u) <= 0.0:
            raise QuadratureError(
                "near-field ball of radius %.3f contains points at or above "
                "the band edge; decrease rho" % rho)
        phi2_near = np.asarray(self.model.phi(
            (pts[..., 0], pts[..., 1], pts[..., 2]))) ** 2
        chi = bump_profile(r / rho, s.bump_order)
        P = (wr * chi * r * r)[:, None] * wa[None, :] * phi2_near
        R2 = wr * r * r
        k = 0.5 * np.einsum("ij,jk,ik->i", nu, self._negA, nu)
        return {
            "n_grid": n_grid, "far_weight": far_weight, "far_w": far_w,
            "P": P, "w_near": w_near, "r": r, "R2": R2, "k": k, "wa": wa,
        }

    def _level(self, level):
        while len(self._levels) <= level:
            self._levels.append(self._build_level(len(self._levels)))
        return self._levels[level]

    # -- evaluation -----------------------------------------------------

    def _delta(self, z):
        if z < self.M - self._below_tol:
            raise BelowThresholdError(
                "below threshold: z = %.12g < M(p) = %.12g" % (z, self.M))
        return max(float(z) - self.M, 0.0)

    def value_at_level(self, z, level):
        """(total, near, far) at a fixed refinement level."""
        delta = self._delta(z)
        L = self._level(level)
        far = float(np.sum(L["far_weight"] / (z - L["far_w"])))
        direct = float(np.sum(L["P"] / (delta + (self.M - L["w_near"]))))
        denom = delta + L["k"][None, :] * (L["r"] ** 2)[:, None]
        model_part = float(self._phi0_sq
                           * np.sum(L["R2"][:, None] * L["wa"][None, :] / denom))
        closed = float(self._phi0_sq * np.sum(
            L["wa"] * _radial_closed_form(delta, L["k"], self.rho)))
        near = direct - model_part + closed
        return near + far, near, far

    def evaluate(self, z) -> OmegaValue:
        """Omega(p; z) with one-step refinement error estimation.

        Doubles all node counts until consecutive levels agree to the
        spec's relative tolerance; raises QuadratureNotConvergedError if
        max_refinements doublings do not suffice.
        """
        prev = None
        for level in range(self.spec.max_refinements + 1):
            total, near, far = self.value_at_level(z, level)
            if prev is not None:
                est = abs(total - prev)
                if est <= self.spec.rel_tol * max(abs(total), 1e-300):
                    return OmegaValue(
                        value=total, estimated_error=est, near_field=near,
                        far_field=far,
                        n_grid=self.spec.n_grid * 2 ** level, rho=self.rho)
            prev = total
        raise QuadratureNotConvergedError(
            "quadrature not converged: estimate %.3e above tolerance %.1e"
            % (abs(total - prev) if prev != total else 0.0,
               self.spec.rel_tol))

    def second_moment(self, z):
        """int phi^2 / (z - w_p)^2 ds for z > M(p), same node reuse."""
        delta = self._delta(z)
        if delta <= 0.0:
            raise BelowThresholdError(
                "second moment diverges at the band edge")
        prev = None
        for level in range(self.spec.max_refinements + 1):
            L = self._level(level)
            far = np.sum(L["far_weight"] / (z - L["far_w"]) ** 2)
            direct = np.sum(L["P"] / (delta + (self.M - L["w_near"])) ** 2)
            denom = delta + L["k"][None, :] * (L["r"] ** 2)[:, None]
            model_part = self._phi0_sq * np.sum(
                L["R2"][:, None] * L["wa"][None, :] / denom ** 2)
            closed = self._phi0_sq * np.sum(
                L["wa"] * _radial_closed_form_sq(delta, L["k"], self.rho))
            total = float(far + direct - model_part + closed)
            if prev is not None and abs(total - prev) <= \
                    self.spec.rel_tol * max(abs(total), 1e-300):
                return total
            prev = total
        raise QuadratureNotConvergedError("second moment did not converge")


def omega(model, p, cp, z, spec: QuadratureSpec | None = None) -> OmegaValue:
    """One-shot Omega(p; z) for z >= M(p)."""
    return OmegaEvaluator(model, p, cp, spec).evaluate(z)


def omega_threshold(model, p, cp, spec: QuadratureSpec | None = None) -> OmegaValue:
    """Threshold value Omega(p) = Omega(p; M(p))."""
    return OmegaEvaluator(model, p, cp, spec).evaluate(cp.M)


@dataclass(frozen=True)
class NormDiagnostics:
    """L1/L2 behaviour of f = phi / (z - w_p) near the maximizer.

    l2_growth_rate is the fitted log-log slope of the L2 mass outside a
    shrinking excluded ball against 1/radius: ~1 for a resonance-type
    threshold state (f not in L2), ~0 when f is square integrable.
    """

    l1: float
    l2: float
    l2_growth_rate: float
    excluded_radii: np.ndarray
    l2_outside: np.ndarray


def state_norm_diagnostics(model, p, cp, z, spec: QuadratureSpec | None = None,
                           n_shells=8) -> NormDiagnostics:
    """Integrate |f| and |f|^2 outside balls of radius rho/2^k around q0.

    The region outside the largest ball uses the masked torus grid; the
    nested annuli use per-shell polar Gauss rules, which resolve radii far
    below the torus grid spacing.
    """
    spec = spec if spec is not None else QuadratureSpec()
    ev = OmegaEvaluator(model, p, cp, spec)
    delta = ev._delta(z)
    rho0 = ev.rho
    q0 = ev.q0

    n_grid = spec.n_grid
    ax = -np.pi + 2.0 * np.pi * (np.arange(n_grid) + 0.5) / n_grid
    x1 = ax[:, None, None]
    x2 = ax[None, :, None]
    x3 = ax[None, None, :]
    d1 = wrap_angles(ax - q0[0])
    d2 = wrap_angles(ax - q0[1])
    d3 = wrap_angles(ax - q0[2])
    dist2 = ((d1 * d1)[:, None, None] + (d2 * d2)[None, :, None]
             + (d3 * d3)[None, None, :])
    mask = dist2 > rho0 * rho0
    w_vals = np.broadcast_to(model.w(p, (x1, x2, x3)), dist2.shape)[mask]
    phi_vals = np.broadcast_to(model.phi((x1, x2, x3)), dist2.shape)[mask]
    h3 = (2.0 * np.pi / n_grid) ** 3
    f = phi_vals / (delta + (cp.M - w_vals))
    l2_out = h3 * float(np.sum(f * f))
    l1_out = h3 * float(np.sum(np.abs(f)))

    nu, wa = sphere_product_rule(max(spec.n_angular // 2, 10))
    xr, wr = np.polynomial.legendre.leggauss(16)
    radii = rho0 / 2.0 ** np.arange(n_shells + 1)
    l2_cum = [l2_out]
    l1_cum = l1_out
    for kk in range(n_shells):
        a, b = radii[kk + 1], radii[kk]
        r = 0.5 * (b - a) * (xr + 1.0) + a
        wrr = 0.5 * (b - a) * wr
        pts = q0[None, None, :] + r[:, None, None] * nu[None, :, :]
        w_sh = np.asarray(model.w(p, (pts[..., 0], pts[..., 1], pts[..., 2])))
        phi_sh = np.asarray(model.phi((pts[..., 0], pts[..., 1], pts[..., 2])))
        fsh = phi_sh / (delta + (cp.M - w_sh))
        r2 = (r * r)[:, None]
        l2_cum.append(l2_cum[-1]
                      + float(np.einsum("i,j,ij->", wrr, wa, fsh * fsh * r2)))
        l1_cum += float(np.einsum("i,j,ij->", wrr, wa, np.abs(fsh) * r2))

    l2_arr = np.array(l2_cum)
    x = np.log(1.0 / radii[-4:])
    y = np.log(l2_arr[-4:])
    slope = float(np.polyfit(x, y, 1)[0])
    return NormDiagnostics(l1=l1_cum, l2=float(l2_arr[-1]),
                           l2_growth_rate=slope, excluded_radii=radii,
                           l2_outside=l2_arr)
