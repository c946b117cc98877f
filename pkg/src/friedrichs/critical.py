"""Band-edge critical points of the dispersion w_p on the torus.

Locates the global maximizer q0(p) (coarse grid scan + torus-wrapped
Newton polish), certifies non-degeneracy of the Hessian and uniqueness of
the maximum, and computes the band edges M(p) = max w_p and m(p) = min w_p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMaximumError,
    NewtonConvergenceError,
    NonUniqueMaximumError,
    UnsupportedFamilyError,
)
from .torus import TorusVector, torus_distance, wrap_angles

GRID_N_DEFAULT = 24
GRAD_TOL = 1e-12
MAX_NEWTON_ITERS = 50
NONDEG_TOL = 1e-8        # largest Hessian eigenvalue must be <= -tol*(M-m)
UNIQUENESS_GAP = 1e-9    # two maxima within gap*(M-m) => non-unique
_DISTINCT_DIST = 1e-5    # torus distance separating distinct maximizers
_CANDIDATE_WINDOW = 0.05  # grid local maxima within window*(M-m) get polished


@dataclass(frozen=True, eq=False)
class CriticalPointInfo:
    """Certified band-edge data at a fixed quasi-momentum p."""

    q0: TorusVector
    M: float
    m: float
    hessian: np.ndarray          # q-Hessian A(p) at q0, symmetric 3x3
    det_negA: float
    nondegenerate: bool
    grad_norm: float
    hessian_eigenvalues: np.ndarray

    @property
    def spread(self):
        return self.M - self.m


def _grid_axes(n):
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def _grid_values(model, p, n):
    ax = _grid_axes(n)
    return ax, model.w(p, (ax[:, None, None], ax[None, :, None],
                           ax[None, None, :]))


def _local_maxima_mask(vals):
    """Grid nodes that dominate their full 26-point periodic neighborhood."""
    mask = np.ones(vals.shape, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                if dx == dy == dz == 0:
                    continue
                mask &= vals >= np.roll(vals, (dx, dy, dz), axis=(0, 1, 2))
    return mask


def _polish(model, p, x0, sign, trust_radius, gtol=GRAD_TOL):
    """Newton iteration for a critical point of sign*w_p, wrapped to the
    torus each step.  Returns (x, value, grad_norm)."""
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(MAX_NEWTON_ITERS):
        g = sign * np.asarray(model.grad_w(p, x), dtype=float)
        gn = float(np.linalg.norm(g))
        if gn <= gtol:
            break
        h = sign * np.asarray(model.hess_w(p, x), dtype=float)
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            step = -np.linalg.pinv(h) @ g
        if not np.all(np.isfinite(step)):
            step = -np.linalg.pinv(h) @ g
        sn = float(np.linalg.norm(step))
        if sn > trust_radius:
            step *= trust_radius / sn
        x = wrap_angles(x + step)
    else:
        g = sign * np.asarray(model.grad_w(p, x), dtype=float)
        if float(np.linalg.norm(g)) > gtol:
            raise NewtonConvergenceError(
                "no convergence: Newton polish exceeded %d iterations"
                % MAX_NEWTON_ITERS)
    return x, float(model.w(p, x)), float(np.linalg.norm(model.grad_w(p, x)))


def find_minimum(model, p, grid_n=GRID_N_DEFAULT) -> float:
    """Global minimum m(p) of w_p by grid scan plus Newton on -w_p.

    Degeneracy of the minimizer is tolerated; only the value is reported.
    """
    ax, vals = _grid_values(model, p, grid_n)
    i, j, k = np.unravel_index(np.argmin(vals), vals.shape)
    x0 = np.array([ax[i], ax[j], ax[k]])
    trust = 2.0 * np.pi / grid_n
    try:
        _, value, _ = _polish(model, p, x0, -1.0, trust)
    except NewtonConvergenceError:
        value = float(vals.min())
    return min(value, float(vals.min()))


def find_maximizer(model, p, seed=None, grid_n=GRID_N_DEFAULT,
                   gtol=GRAD_TOL, nondeg_tol=NONDEG_TOL,
                   uniqueness_gap=UNIQUENESS_GAP) -> CriticalPointInfo:
    """Locate and certify the unique non-degenerate maximizer of w_p.

    A coarse grid scan picks candidate basins (all grid-local maxima close
    to the grid maximum, plus the optional seed), each is polished by
    torus-wrapped Newton iteration, and the best is certified:

    * gradient norm <= gtol at q0,
    * Hessian negative definite (largest eigenvalue <= -nondeg_tol*(M-m)),
    * no second polished maximizer within uniqueness_gap*(M-m) of M at a
      separated torus point.

    Raises DegenerateMaximumError / NonUniqueMaximumError otherwise.
    """
    p = np.asarray(p.as_array() if isinstance(p, TorusVector) else p,
                   dtype=float)
    ax, vals = _grid_values(model, p, grid_n)
    spread_grid = float(vals.max() - vals.min())
    window = _CANDIDATE_WINDOW * spread_grid
    mask = _local_maxima_mask(vals) & (vals >= vals.max() - window)
    ii, jj, kk = np.nonzero(mask)
    order = np.argsort(vals[ii, jj, kk])[::-1][:16]
    starts = [np.array([ax[ii[t]], ax[jj[t]], ax[kk[t]]]) for t in order]
    if seed is not None:
        s = seed.as_array() if isinstance(seed, TorusVector) else np.asarray(
            seed, dtype=float)
        starts.append(wrap_angles(s))

    trust = 2.0 * np.pi / grid_n
    polished = []
    for x0 in starts:
        try:
            polished.append(_polish(model, p, x0, +1.0, trust, gtol))
        except NewtonConvergenceError:
            if len(starts) == 1:
                raise
    if not polished:
        raise NewtonConvergenceError("no convergence for any candidate start")

    polished.sort(key=lambda t: t[1], reverse=True)
    x_best, M, grad_norm = polished[0]
    m = find_minimum(model, p, grid_n)
    spread = max(M - m, 0.0)

    hess = np.asarray(model.hess_w(p, x_best), dtype=float)
    hess = 0.5 * (hess + hess.T)
    eigs = np.linalg.eigvalsh(hess)
    if not eigs[-1] <= -nondeg_tol * spread:
        raise DegenerateMaximumError(
            "degenerate maximum: largest Hessian eigenvalue %.3e exceeds "
            "-%.1e*(M-m)" % (eigs[-1], nondeg_tol))

    q0 = TorusVector(x_best)
    for x, value, _ in polished[1:]:
        if (torus_distance(x, x_best) > _DISTINCT_DIST
                and M - value < uniqueness_gap * spread):
            raise NonUniqueMaximumError(
                "non-unique maximum: second maximizer at torus distance "
                "%.3e with value gap %.3e" % (torus_distance(x, x_best),
                                              M - value))

    return CriticalPointInfo(
        q0=q0, M=M, m=m, hessian=hess, det_negA=float(np.linalg.det(-hess)),
        nondegenerate=True, grad_norm=grad_norm, hessian_eigenvalues=eigs)


@dataclass(frozen=True)
class ClosedFormCheck:
    q0_delta: float
    M_delta: float


def two_particle_closed_forms(hopping, p):
    """Closed forms for the builtin family: maximizer p/2 + pi, band edge
    and Hessian diag(-2 c_i cos(p_i/2))."""
    c = np.asarray(hopping, dtype=float)
    p = wrap_angles(np.asarray(p, dtype=float))
    half = 0.5 * p
    q0 = wrap_angles(half + np.pi)
    M = float(np.sum(c * (2.0 + 2.0 * np.abs(np.cos(half)))))
    m = float(np.sum(c * (2.0 - 2.0 * np.abs(np.cos(half)))))
    A = np.diag(-2.0 * c * np.abs(np.cos(half)))
    return TorusVector(q0), M, m, A


def closed_form_check(model, p, grid_n=GRID_N_DEFAULT) -> ClosedFormCheck:
    """Regression guard: numeric maximizer vs. the builtin closed form."""
    if model.family != "two_particle":
        raise UnsupportedFamilyError(
            "closed_form_check requires the two_particle family")
    info = find_maximizer(model, p, grid_n=grid_n)
    q0_cf, M_cf, _, _ = two_particle_closed_forms(model.hopping, p)
    return ClosedFormCheck(
        q0_delta=torus_distance(info.q0.as_array(), q0_cf.as_array()),
        M_delta=abs(info.M - M_cf))
