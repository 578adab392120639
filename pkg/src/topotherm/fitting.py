"""Three-parameter gap-vs-m models fitted by Levenberg-Marquardt.

``exp3``: ``y = A exp(-B m) + C``  and  ``pow3``: ``y = A m**B + C``.
Both use analytic Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class FitKind(str, Enum):
    EXP3 = "exp3"
    POW3 = "pow3"


class FitError(RuntimeError):
    pass


class RankDeficiencyError(FitError):
    pass


class ConvergenceError(FitError):
    """Raised when the iteration budget runs out; ``last`` holds the final iterate."""

    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class FitModel:
    kind: FitKind
    params: tuple[float, float, float]
    residual_rms: float
    fit_window: tuple[float, float]
    n_points: int
    n_iter: int

    def __call__(self, m):
        return evaluate(self.kind, self.params, m)


def evaluate(kind, params, m):
    A, B, C = params
    m = np.asarray(m, dtype=float)
    if FitKind(kind) is FitKind.EXP3:
        return A * np.exp(-B * m) + C
    return A * m**B + C


def jacobian(kind, params, m) -> np.ndarray:
    A, B, _ = params
    m = np.asarray(m, dtype=float)
    if FitKind(kind) is FitKind.EXP3:
        e = np.exp(-B * m)
        return np.column_stack([e, -A * m * e, np.ones_like(m)])
    p = m**B
    return np.column_stack([p, A * p * np.log(m), np.ones_like(m)])


def levenberg_marquardt(fun, jac, p0, lam0=1e-3, xtol=1e-10, max_iter=500):
    """Minimize ``sum(fun(p)**2)``.

    The damped normal equations use Marquardt's diagonal scaling; ``lam`` is
    divided by 10 after an accepted step and multiplied by 10 after a
    rejected one.  Returns ``(p, n_iter)``.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = fun(p)
    cost = r @ r
    lam = lam0
    for it in range(1, max_iter + 1):
        J = jac(p)
        g = J.T @ r
        JTJ = J.T @ J
        scale = np.diag(JTJ).copy()
        scale[scale == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(JTJ + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            small = np.linalg.norm(step) < xtol * (np.linalg.norm(p) + xtol)
            p_new = p + step
            r_new = fun(p_new)
            cost_new = r_new @ r_new
            if np.isfinite(cost_new) and cost_new <= cost:
                p, r, cost = p_new, r_new, cost_new
                lam = max(lam / 10.0, 1e-15)
                break
            if small or lam > 1e16:
                return p, it
            lam *= 10.0
        if small or cost == 0.0:
            return p, it
    raise ConvergenceError(f"no convergence in {max_iter} iterations", p)


def initial_guess(kind, m, y, eps=None):
    """Log-linear estimate of ``(A, B)`` with ``C`` set to ``min(y)``."""
    kind = FitKind(kind)
    C0 = float(np.min(y))
    if eps is None:
        eps = 1e-2 * float(np.ptp(y))
    z = np.log(y - C0 + eps)
    x = -m if kind is FitKind.EXP3 else np.log(m)
    slope, intercept = np.polyfit(x, z, 1)
    return float(np.exp(intercept)), float(slope), C0


def fit_gap_model(points, kind, window, init=None, xtol=1e-10, max_iter=500) -> FitModel:
    """Fit ``(m, gap)`` pairs whose ``m`` lies inside ``window = (m_lo, m_hi)``.

    The window is mandatory; there is no meaningful default range.
    """
    kind = FitKind(kind)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    m_lo, m_hi = map(float, window)
    if m_lo > m_hi:
        raise ValueError(f"empty fit window {window}")
    sel = (pts[:, 0] >= m_lo) & (pts[:, 0] <= m_hi)
    m, y = pts[sel, 0], pts[sel, 1]
    if len(m) < 4:
        raise ValueError(f"need at least 4 points inside the window, got {len(m)}")
    if kind is FitKind.POW3 and np.any(m <= 0):
        raise ValueError("pow3 requires m > 0 for every point")
    if np.ptp(y) == 0:
        raise RankDeficiencyError("constant data: amplitude and rate are not identifiable")
    p0 = initial_guess(kind, m, y) if init is None else tuple(map(float, init))

    p, n_iter = levenberg_marquardt(
        lambda q: evaluate(kind, q, m) - y,
        lambda q: jacobian(kind, q, m),
        p0,
        xtol=xtol,
        max_iter=max_iter,
    )
    if not p[1] > 0:
        raise FitError(f"{kind.value} fit converged to non-positive rate B={p[1]}")
    resid = evaluate(kind, p, m) - y
    return FitModel(
        kind=kind,
        params=tuple(float(v) for v in p),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        fit_window=(m_lo, m_hi),
        n_points=len(m),
        n_iter=n_iter,
    )
