"""Finite-lattice brute-force oracle.

Discretises the torus to an N^3 midpoint momentum grid and studies the
diagonal-plus-rank-one matrix H_N = diag(w_p(q_j)) + mu h^3 v v^T with
v_j = phi(q_j), h = 2 pi / N.  Eigenvalues of H_N above the discrete band
top solve the secular equation 1 = mu h^3 sum_j phi^2(q_j)/(z - w_p(q_j)),
which is monotone in z and solved by bracketing.  The midpoint grid keeps
q0(p) off the nodes for generic p, so threshold sums stay finite.

This module is deliberately independent of the production quadrature: it
provides the ground truth the solver is validated against, including
Richardson-extrapolated threshold sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidInputError
from .torus import TorusVector

DENSE_N_MAX = 12


def _p_array(p):
    return np.asarray(p.as_array() if isinstance(p, TorusVector) else p,
                      dtype=float)


def midpoint_axis(N, offset=0.5):
    """Grid q_j = -pi + 2 pi (j + offset)/N; offset=0.5 is the midpoint grid."""
    return -np.pi + 2.0 * np.pi * (np.arange(N) + offset) / N


def grid_values(model, p, N, offset=0.5):
    """(w_p values, phi values) flattened over the N^3 grid."""
    ax = midpoint_axis(N, offset)
    grid = (ax[:, None, None], ax[None, :, None], ax[None, None, :])
    w = np.asarray(model.w(_p_array(p), grid))
    phi = np.broadcast_to(np.asarray(model.phi(grid)), w.shape)
    return w.ravel(), phi.ravel()


def discrete_omega(model, p, z, N, offset=0.5):
    """Plain lattice sum h^3 sum phi^2/(z - w); requires z - w > 0 at all
    nodes (z >= M(p) with the maximizer off the grid)."""
    w, phi = grid_values(model, p, N, offset)
    denom = z - w
    if np.min(denom) <= 0.0:
        raise InvalidInputError(
            "discrete sum undefined: z - w_p <= 0 at a grid node")
    return (2.0 * np.pi / N) ** 3 * float(np.sum(phi * phi / denom))


def richardson_omega_threshold(model, p, M, N_pair=(64, 128), offset=0.5):
    """Threshold sums at two grids plus 1/N Richardson extrapolation.

    The midpoint-sum error at the band edge is c/N + O(N^-2); for the pair
    (N, 2N) the extrapolant is 2 S_{2N} - S_N.  Returns (S_N, S_2N, R).
    """
    n1, n2 = N_pair
    if n2 != 2 * n1:
        raise InvalidInputError("Richardson pair must be (N, 2N)")
    s1 = discrete_omega(model, p, M, n1, offset)
    s2 = discrete_omega(model, p, M, n2, offset)
    return s1, s2, 2.0 * s2 - s1


EDGE_RESOLUTION_FRACTION = 0.01


def secular_root(model, p, mu, N, offset=0.5):
    """Root of 1 = mu h^3 sum phi^2/(z - w) above the discrete band top.

    Returns None when no root exists beyond the grid's own energy
    resolution.  For phi nonzero at the top grid node the exact discrete
    matrix always has a root above the band top, but for sub-threshold mu
    it hugs the edge at a distance ~ mu h^3 phi^2, far below the spacing
    of the discrete levels themselves; such artifacts are reported as
    None.  The bracket therefore starts EDGE_RESOLUTION_FRACTION of the
    top level spacing above the largest diagonal entry - small enough to
    keep genuine near-threshold roots (which clear the edge by a O(1)
    fraction of the spacing), large enough to reject the artifacts.
    """
    if N < 8 or N % 2:
        raise InvalidInputError("secular_root requires even N >= 8")
    w, phi = grid_values(model, p, N, offset)
    phi2 = phi * phi
    h3 = (2.0 * np.pi / N) ** 3
    w_max = float(np.max(w))
    below = w[w < w_max - 1e-13 * max(1.0, abs(w_max))]
    gap = float(w_max - np.max(below)) if below.size else 0.0
    spread = float(w_max - np.min(w))
    z_lo = w_max + max(EDGE_RESOLUTION_FRACTION * gap,
                       64.0 * np.finfo(float).eps * max(1.0, abs(w_max)))

    def det(z):
        return 1.0 - mu * h3 * np.sum(phi2 / (z - w))

    if det(z_lo) >= 0.0:
        return None
    z_hi = z_lo + mu * h3 * float(np.sum(phi2)) + max(spread, 1.0)
    while det(z_hi) <= 0.0:
        z_hi = w_max + 2.0 * (z_hi - w_max)
    return float(brentq(det, z_lo, z_hi, xtol=1e-13,
                        rtol=4.0 * np.finfo(float).eps, maxiter=200))


@dataclass(frozen=True)
class OracleResult:
    """Summary of one finite-lattice solve."""

    N: int
    secular_root: float | None
    max_diag: float
    min_eig: float | None
    spectrum_summary: dict = field(default_factory=dict)


def dense_spectrum(model, p, mu, N) -> OracleResult:
    """Full symmetric eigendecomposition of H_N for N <= 12.

    Reports the extremal eigenvalues and the number of eigenvalues strictly
    above the top diagonal entry (0 or 1 by rank-one interlacing).
    """
    if N > DENSE_N_MAX:
        raise InvalidInputError(
            "dense_spectrum limited to N <= %d (matrix size N^3)" % DENSE_N_MAX)
    w, phi = grid_values(model, p, N)
    h3 = (2.0 * np.pi / N) ** 3
    H = np.diag(w) + mu * h3 * np.outer(phi, phi)
    eigs = np.linalg.eigvalsh(H)
    max_diag = float(np.max(w))
    tol = 1e-12 * max(1.0, abs(max_diag))
    count_above = int(np.sum(eigs > max_diag + tol))
    return OracleResult(
        N=N,
        secular_root=secular_root(model, p, mu, N) if N >= 8 else None,
        max_diag=max_diag,
        min_eig=float(eigs[0]),
        spectrum_summary={
            "min_eig": float(eigs[0]),
            "max_eig": float(eigs[-1]),
            "min_diag": float(np.min(w)),
            "count_above_max_diag": count_above,
            "matrix_size": int(N ** 3),
        })


@dataclass(frozen=True)
class ConvergenceReport:
    """Secular-root deviations from a continuum eigenvalue over a grid ladder.

    trend_ok: deviations decrease monotonically until they reach the
    comparison floor (the accuracy of the continuum value itself); once a
    deviation is at or below the floor the sequence counts as converged.
    """

    mu: float
    E_continuum: float
    rows: tuple  # (N, root, abs_dev, rel_dev)
    floor: float
    trend_ok: bool

    def to_csv(self, path_or_file):
        def _write(fh):
            fh.write("N,root,abs_dev,rel_dev\n")
            for N, root, adev, rdev in self.rows:
                fh.write("%d,%.17g,%.17g,%.17g\n" % (N, root, adev, rdev))
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file,
                                                             "__fspath__"):
            with open(path_or_file, "w") as fh:
                _write(fh)
        else:
            _write(path_or_file)


def convergence_report(model, p, mu, N_list, E_continuum,
                       floor=0.0) -> ConvergenceReport:
    """Tabulate |secular root - E_continuum| over N_list and check the trend.

    floor should reflect the accuracy of E_continuum (e.g. propagated from
    the quadrature error estimate); deviations at or below it are treated
    as converged rather than required to keep shrinking.
    """
    rows = []
    for N in N_list:
        root = secular_root(model, p, mu, N)
        if root is None:
            raise InvalidInputError(
                "no secular root at N=%d; convergence study needs mu above "
                "the discrete threshold" % N)
        adev = abs(root - E_continuum)
        rows.append((int(N), float(root), float(adev),
                     float(adev / abs(E_continuum))))
    floor = max(float(floor), 16.0 * np.finfo(float).eps * abs(E_continuum))
    trend_ok = True
    for (_, _, prev, _), (_, _, cur, _) in zip(rows, rows[1:]):
        if cur > prev and cur > floor:
            trend_ok = False
    return ConvergenceReport(mu=float(mu), E_continuum=float(E_continuum),
                             rows=tuple(rows), floor=floor, trend_ok=trend_ok)
