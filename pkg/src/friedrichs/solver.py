"""Fredholm determinant, coupling threshold, bound states, classification.

The scalar determinant D(mu, p; z) = 1 - mu * Omega(p; z) is strictly
increasing in z on (M(p), inf) and tends to 1, so the unique bound-state
energy above the band is found by monotone bracketing.  The coupling
threshold mu(p) = 1 / Omega(p; M(p)) separates the no-eigenvalue regime
from the bound-state regime; at mu = mu(p) the band edge is either an
energy resonance or a threshold eigenvalue depending on whether the form
factor vanishes at the maximizer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .critical import CriticalPointInfo
from .errors import BracketingError, ExpansionFitError, InvalidInputError
from .quadrature import (
    NormDiagnostics,
    OmegaEvaluator,
    QuadratureSpec,
    state_norm_diagnostics,
)
from .torus import TorusVector

MU_REL_TOL = 1e-9        # relative band around mu(p) treated as "equal"
PHI_REL_TOL = 1e-8       # |phi(q0)| below this fraction of max|phi| is zero
DET_TOL = 1e-12          # target |determinant| at the eigenvalue
MAX_BRACKET_EXPANSIONS = 200
FIT_WINDOW = (1e-4, 1e-2)
FIT_POINTS = 8
FIT_RESIDUAL_GATE = 1e-3
TWO_PI_SQ = 2.0 * np.pi ** 2


class Classification(str, enum.Enum):
    """Spectral situation at a given (mu, p)."""

    REGULAR = "Regular"                        # mu < mu(p): nothing anywhere
    BOUND_STATE = "BoundState"                 # mu > mu(p): eigenvalue above M
    RESONANCE = "Resonance"                    # mu = mu(p), phi(q0) != 0
    THRESHOLD_EIGENVALUE = "ThresholdEigenvalue"  # mu = mu(p), phi(q0) = 0


def _evaluator(model, p, cp, spec, evaluator):
    if evaluator is not None:
        return evaluator
    return OmegaEvaluator(model, p, cp, spec)


def coupling_threshold(model, p, cp: CriticalPointInfo,
                       spec: QuadratureSpec | None = None,
                       evaluator: OmegaEvaluator | None = None) -> float:
    """mu(p) = 1 / Omega(p; M(p)); strictly positive."""
    ev = _evaluator(model, p, cp, spec, evaluator)
    return 1.0 / ev.evaluate(cp.M).value


def fredholm_det(model, p, cp: CriticalPointInfo, mu, z,
                 spec: QuadratureSpec | None = None,
                 evaluator: OmegaEvaluator | None = None) -> float:
    """Determinant 1 - mu * Omega(p; z) for z >= M(p)."""
    if mu <= 0.0:
        raise InvalidInputError("coupling mu must be positive")
    ev = _evaluator(model, p, cp, spec, evaluator)
    return 1.0 - mu * ev.evaluate(z).value


def solve_eigenvalue(model, p, cp: CriticalPointInfo, mu,
                     spec: QuadratureSpec | None = None,
                     evaluator: OmegaEvaluator | None = None,
                     mu_rel_tol=MU_REL_TOL):
    """The unique root E of the determinant above M(p), or None.

    Returns None for mu <= mu(p) (1 + mu_rel_tol).  Otherwise the root is
    bracketed on (M(p), z_hi] - z_hi grown geometrically from
    M(p) + mu * ||phi||^2, above which the determinant is provably
    positive - and polished by Brent's method (bisection with secant /
    inverse-quadratic acceleration).
    """
    if mu <= 0.0:
        raise InvalidInputError("coupling mu must be positive")
    ev = _evaluator(model, p, cp, spec, evaluator)
    mu_p = 1.0 / ev.evaluate(cp.M).value
    if mu <= mu_p * (1.0 + mu_rel_tol):
        return None

    def det(z):
        return 1.0 - mu * ev.evaluate(z).value

    gap = mu * model.phi_l2_norm_sq()
    z_hi = cp.M + gap
    for _ in range(MAX_BRACKET_EXPANSIONS):
        if det(z_hi) > 0.0:
            break
        gap *= 2.0
        z_hi = cp.M + gap
    else:
        raise BracketingError(
            "failed to bracket the determinant root above the band edge")
    root = brentq(det, cp.M, z_hi, xtol=1e-14,
                  rtol=4.0 * np.finfo(float).eps, maxiter=200)
    return float(root)


def eigenvalue_error_estimate(model, p, cp: CriticalPointInfo, mu, energy,
                              spec: QuadratureSpec | None = None,
                              evaluator: OmegaEvaluator | None = None) -> float:
    """A-posteriori accuracy estimate for a solved eigenvalue.

    The root shift caused by a quadrature error e in Omega is
    e / |dOmega/dz|, and -dOmega/dz is the second moment
    int phi^2/(E - w)^2.  Used as the comparison floor when grading
    finite-lattice convergence against the continuum value.
    """
    ev = _evaluator(model, p, cp, spec, evaluator)
    return ev.evaluate(energy).estimated_error / ev.second_moment(energy)


@dataclass(frozen=True)
class EigenfunctionEval:
    """Normalized bound-state eigenfunction psi(q) = C mu phi(q)/(E - w_p(q)).

    C > 0 is chosen so the L2(T^3) norm equals 1.
    """

    normalization: float
    mu: float
    energy: float
    model: object
    p: np.ndarray

    def __call__(self, q):
        return (self.normalization * self.mu * self.model.phi(q)
                / (self.energy - self.model.w(self.p, q)))

    def norm_on_grid(self, n_grid=64):
        """L2 norm via the plain midpoint rule (smooth integrand)."""
        ax = -np.pi + 2.0 * np.pi * (np.arange(n_grid) + 0.5) / n_grid
        vals = self((ax[:, None, None], ax[None, :, None], ax[None, None, :]))
        return float(np.sqrt((2.0 * np.pi / n_grid) ** 3 * np.sum(vals * vals)))

    def residual_sup(self, n_grid=64):
        """sup |(H_mu(p) - E) psi| with H applied on a midpoint grid.

        The rank-one term uses the grid inner product, so this is an
        independent discrete application of the operator, not a replay of
        the quadrature that produced E.
        """
        ax = -np.pi + 2.0 * np.pi * (np.arange(n_grid) + 0.5) / n_grid
        grid = (ax[:, None, None], ax[None, :, None], ax[None, None, :])
        w = np.asarray(self.model.w(self.p, grid))
        phi = np.broadcast_to(np.asarray(self.model.phi(grid)), w.shape)
        psi = self.normalization * self.mu * phi / (self.energy - w)
        inner = (2.0 * np.pi / n_grid) ** 3 * np.sum(phi * psi)
        resid = (w - self.energy) * psi + self.mu * phi * inner
        return float(np.max(np.abs(resid)))


def eigenfunction(model, p, cp: CriticalPointInfo, mu, energy,
                  spec: QuadratureSpec | None = None,
                  evaluator: OmegaEvaluator | None = None) -> EigenfunctionEval:
    """Normalize the eigenfunction at a solved energy E > M(p)."""
    if not energy > cp.M:
        raise InvalidInputError("eigenfunction requires E > M(p)")
    ev = _evaluator(model, p, cp, spec, evaluator)
    det = 1.0 - mu * ev.evaluate(energy).value
    if abs(det) > 1e-8:
        raise InvalidInputError(
            "energy is not an eigenvalue: |determinant| = %.3e" % abs(det))
    norm_sq = ev.second_moment(energy)  # int phi^2/(E-w)^2
    c = 1.0 / (mu * np.sqrt(norm_sq))
    return EigenfunctionEval(normalization=float(c), mu=float(mu),
                             energy=float(energy), model=model, p=ev.p)


@dataclass(frozen=True)
class ClassificationResult:
    label: Classification
    mu: float
    mu_threshold: float
    phi_at_q0: float
    phi_scale: float
    l2_growth_rate: float | None
    diagnostics: NormDiagnostics | None


def classify_threshold(model, p, cp: CriticalPointInfo, mu,
                       spec: QuadratureSpec | None = None,
                       evaluator: OmegaEvaluator | None = None,
                       tol_mu=MU_REL_TOL, tol_phi=PHI_REL_TOL,
                       with_diagnostics=True) -> ClassificationResult:
    """Classify (mu, p): Regular / BoundState off the threshold coupling,
    Resonance / ThresholdEigenvalue at it (by phi(q0) = 0 or not).

    For the two at-threshold classes the measured L2 divergence exponent
    of the threshold state is attached as corroboration.
    """
    ev = _evaluator(model, p, cp, spec, evaluator)
    mu_p = 1.0 / ev.evaluate(cp.M).value
    phi_q0 = float(model.phi(cp.q0.as_array()))
    phi_scale = model.phi_max_abs()
    if abs(mu - mu_p) > tol_mu * mu_p:
        label = (Classification.BOUND_STATE if mu > mu_p
                 else Classification.REGULAR)
        diag = None
    else:
        if abs(phi_q0) > tol_phi * phi_scale:
            label = Classification.RESONANCE
        else:
            label = Classification.THRESHOLD_EIGENVALUE
        diag = (state_norm_diagnostics(model, p, cp, cp.M, ev.spec)
                if with_diagnostics else None)
    return ClassificationResult(
        label=label, mu=float(mu), mu_threshold=mu_p, phi_at_q0=phi_q0,
        phi_scale=phi_scale,
        l2_growth_rate=None if diag is None else diag.l2_growth_rate,
        diagnostics=diag)


@dataclass(frozen=True)
class ExpansionFit:
    """Edge expansion Omega(p) - Omega(p; M+d) ~ a sqrt(d) + b d + c d^{3/2}.

    tau0_fit = a / (2 pi^2) recovers the leading Puiseux coefficient in the
    spherical-mean normalisation where the closed form is
    tau0 = phi^2(q0) * 2^{3/2} / sqrt(det(-A)).
    """

    tau0_fit: float
    tau0_closed: float
    rel_residual: float
    sqrt_coeff: float
    linear_coeff: float
    threehalf_coeff: float
    deltas: np.ndarray
    data: np.ndarray

    @property
    def sqrt_term_fraction(self):
        """Size of the fitted sqrt term at the window top relative to the
        largest data value; ~0 when the sqrt term is genuinely absent."""
        scale = float(np.max(np.abs(self.data)))
        if scale == 0.0:
            return 0.0
        return abs(self.sqrt_coeff) * float(np.sqrt(self.deltas[-1])) / scale


def tau0_closed_form(model, cp: CriticalPointInfo) -> float:
    """tau0 = phi^2(q0) * 2^{3/2} / sqrt(det(-A)) (Morse-chart Jacobian)."""
    phi_q0 = float(model.phi(cp.q0.as_array()))
    return phi_q0 ** 2 * 2.0 ** 1.5 / np.sqrt(cp.det_negA)


def expansion_fit(model, p, cp: CriticalPointInfo,
                  spec: QuadratureSpec | None = None,
                  evaluator: OmegaEvaluator | None = None,
                  window=FIT_WINDOW, n_points=FIT_POINTS) -> ExpansionFit:
    """Least-squares fit of the square-root edge expansion of Omega.

    Samples Omega(p) - Omega(p; M + d_k) at log-spaced offsets d_k in the
    window, all on identical quadrature nodes so systematic errors cancel
    in the differences.
    """
    ev = _evaluator(model, p, cp, spec, evaluator)
    deltas = np.logspace(np.log10(window[0]), np.log10(window[1]), n_points)
    omega0 = ev.evaluate(cp.M).value
    data = np.array([omega0 - ev.evaluate(cp.M + d).value for d in deltas])
    design = np.column_stack([np.sqrt(deltas), deltas, deltas ** 1.5])
    coeffs, *_ = np.linalg.lstsq(design, data, rcond=None)
    resid = data - design @ coeffs
    rel_residual = float(np.linalg.norm(resid) / max(np.linalg.norm(data),
                                                     1e-300))
    fit = ExpansionFit(
        tau0_fit=float(coeffs[0] / TWO_PI_SQ),
        tau0_closed=tau0_closed_form(model, cp),
        rel_residual=rel_residual,
        sqrt_coeff=float(coeffs[0]), linear_coeff=float(coeffs[1]),
        threehalf_coeff=float(coeffs[2]), deltas=deltas, data=data)
    if rel_residual > FIT_RESIDUAL_GATE:
        raise ExpansionFitError(
            "expansion fit failed: relative residual %.3e" % rel_residual)
    return fit


@dataclass
class SpectralReport:
    """Bundle of spectral results at one (mu, p); JSON field names fixed."""

    mu_threshold: float
    mu: float
    E: float | None
    delta_at_threshold: float
    classification: Classification
    eigenfunction_norm: float | None  # normalization constant C (unit L2 norm)
    tau0_fit: float | None = None
    tau0_closed: float | None = None
    l2_growth_rate: float | None = None

    def to_json_dict(self):
        return {
            "mu_threshold": self.mu_threshold,
            "mu": self.mu,
            "E": self.E,
            "delta_at_threshold": self.delta_at_threshold,
            "classification": self.classification.value,
            "eigenfunction_norm": self.eigenfunction_norm,
            "tau0_fit": self.tau0_fit,
            "tau0_closed": self.tau0_closed,
            "l2_growth_rate": self.l2_growth_rate,
        }


def analyze(model, p, cp: CriticalPointInfo, mu,
            spec: QuadratureSpec | None = None,
            evaluator: OmegaEvaluator | None = None,
            with_expansion=False, with_diagnostics=True) -> SpectralReport:
    """Full single-point analysis: threshold, eigenvalue, classification."""
    ev = _evaluator(model, p, cp, spec, evaluator)
    mu_p = 1.0 / ev.evaluate(cp.M).value
    energy = solve_eigenvalue(model, p, cp, mu, evaluator=ev)
    norm_const = None
    if energy is not None:
        norm_const = eigenfunction(model, p, cp, mu, energy,
                                   evaluator=ev).normalization
    cls = classify_threshold(model, p, cp, mu, evaluator=ev,
                             with_diagnostics=with_diagnostics)
    tau_fit = tau_closed = None
    if with_expansion:
        fit = expansion_fit(model, p, cp, evaluator=ev)
        tau_fit, tau_closed = fit.tau0_fit, fit.tau0_closed
    return SpectralReport(
        mu_threshold=mu_p, mu=float(mu), E=energy,
        delta_at_threshold=1.0 - mu / mu_p, classification=cls.label,
        eigenfunction_norm=norm_const, tau0_fit=tau_fit,
        tau0_closed=tau_closed, l2_growth_rate=cls.l2_growth_rate)
