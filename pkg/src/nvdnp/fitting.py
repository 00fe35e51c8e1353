"""Damped least-squares fitting with covariance-based confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .errors import FitError

CONFIDENCE = 0.95


@dataclass
class FitResult:
    params: np.ndarray
    covariance: np.ndarray
    stderr: np.ndarray
    ci_halfwidth: np.ndarray
    residual_norm: float
    dof: int
    nfev: int


def t_quantile(dof, confidence=CONFIDENCE):
    return float(stats.t.ppf(0.5 + confidence / 2, max(dof, 1)))


def covariance_from_jacobian(J, residuals, dof, cond_limit=1e12):
    """s^2 (J^T J)^-1 via SVD; raises FitError when J is rank deficient."""
    _, s, Vt = np.linalg.svd(J, full_matrices=False)
    if s.size == 0 or s[0] == 0 or s[0] / s[-1] > cond_limit:
        cond = np.inf if s.size == 0 or s[-1] == 0 else s[0] / s[-1]
        raise FitError("rank-deficient Jacobian at solution", {"condition_number": float(cond)})
    s2 = float(residuals @ residuals) / max(dof, 1)
    return s2 * (Vt.T / s**2) @ Vt


def least_squares_fit(model, jacobian, x0, t, y, confidence=CONFIDENCE, max_nfev=2000):
    """Levenberg-Marquardt fit of ``model(t, *p)`` to ``y``.

    ``jacobian(t, *p)`` returns the (n, n_params) derivative matrix.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n, k = y.size, x0.size
    if n <= k:
        raise FitError(f"{n} points cannot determine {k} parameters")

    def resid(p):
        return model(t, *p) - y

    def jac(p):
        return jacobian(t, *p)

    try:
        # trial steps may overflow exp() before being rejected
        with np.errstate(over="ignore", invalid="ignore"):
            sol = optimize.least_squares(
                resid, x0, jac=jac, method="lm", x_scale="jac", max_nfev=max_nfev,
                xtol=1e-15, ftol=1e-15, gtol=1e-15,
            )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitError(f"least-squares solver failed: {exc}") from exc
    r = sol.fun
    diag = {"status": int(sol.status), "message": sol.message,
            "residual_norm": float(np.linalg.norm(r)), "nfev": int(sol.nfev)}
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitError(f"fit did not converge: {sol.message}", diag)
    dof = n - k
    cov = covariance_from_jacobian(jac(sol.x), r, dof)
    if not np.all(np.isfinite(cov)):
        raise FitError("non-finite parameter covariance", diag)
    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        params=sol.x,
        covariance=cov,
        stderr=stderr,
        ci_halfwidth=t_quantile(dof, confidence) * stderr,
        residual_norm=diag["residual_norm"],
        dof=dof,
        nfev=diag["nfev"],
    )
