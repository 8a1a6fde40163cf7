"""Shared fitting utilities: damped Gauss-Newton least squares, double
Gaussian and power-law models, FFT peak estimation with quadratic refinement.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FitResult",
    "damped_gauss_newton",
    "fit_double_gaussian",
    "fit_power_law",
    "fft_peak",
    "local_maxima",
]


@dataclass
class FitResult:
    model: str
    params: dict
    errors: dict
    residual_norm: float
    converged: bool
    extras: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


def _finite_difference_jacobian(residual, x, r0):
    jac = np.empty((len(r0), len(x)))
    for k in range(len(x)):
        step = 1e-7 * max(abs(x[k]), 1.0)
        xp = x.copy()
        xp[k] += step
        jac[:, k] = (residual(xp) - r0) / step
    return jac


def damped_gauss_newton(residual, x0, jacobian=None, max_iter=200, rel_step_tol=1e-10):
    """Damped Gauss-Newton (Levenberg-style) nonlinear least squares.

    residual(x) returns the residual vector; jacobian(x) is optional and
    defaults to forward finite differences. Converged when the relative step
    is below rel_step_tol or the iteration cap is hit while the damped step
    still reduces the cost. Returns (x, covariance, converged, residual_norm).
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual(x), dtype=float)
    if not np.all(np.isfinite(r)):
        return x, np.full((len(x), len(x)), np.nan), False, float("inf")
    cost = 0.5 * r @ r
    lam = 1e-3
    converged = False
    for _ in range(max_iter):
        jac = jacobian(x) if jacobian else _finite_difference_jacobian(residual, x, r)
        g = jac.T @ r
        a = jac.T @ jac
        diag = np.diag(a).copy()
        diag[diag <= 0.0] = 1.0
        step_ok = False
        for _ in range(25):
            try:
                delta = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if not np.all(np.isfinite(delta)):
                lam *= 10.0
                continue
            x_new = x + delta
            r_new = np.asarray(residual(x_new), dtype=float)
            cost_new = 0.5 * r_new @ r_new if np.all(np.isfinite(r_new)) else np.inf
            if cost_new <= cost:
                step_ok = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if not step_ok:
            break
        rel_step = np.max(np.abs(delta) / np.maximum(np.abs(x_new), 1e-30))
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-14)
        if rel_step < rel_step_tol:
            converged = True
            break
    else:
        converged = True  # iteration cap with monotone cost decrease
    # covariance from the linearized problem at the solution
    jac = jacobian(x) if jacobian else _finite_difference_jacobian(residual, x, r)
    dof = max(len(r) - len(x), 1)
    sigma2 = (r @ r) / dof
    try:
        cov = sigma2 * np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov = np.full((len(x), len(x)), np.nan)
        converged = False
    return x, cov, converged, float(np.sqrt(r @ r))


def local_maxima(y, min_prominence=0.0):
    """Indices of strict local maxima with simple prominence filtering."""
    y = np.asarray(y, dtype=float)
    idx = [
        i
        for i in range(1, len(y) - 1)
        if y[i] > y[i - 1] and y[i] >= y[i + 1]
    ]
    if min_prominence > 0.0:
        floor = np.min(y)
        idx = [i for i in idx if y[i] - floor >= min_prominence]
    return np.array(idx, dtype=int)


def _double_gaussian(x, p):
    a1, c1, w1, a2, c2, w2, off = p
    return (
        a1 * np.exp(-0.5 * ((x - c1) / w1) ** 2)
        + a2 * np.exp(-0.5 * ((x - c2) / w2) ** 2)
        + off
    )


_DG_NAMES = ("a1", "c1", "w1", "a2", "c2", "w2", "offset")


def fit_double_gaussian(x, y):
    """Two-Gaussian-plus-offset fit with automatic peak-picking seeds.

    Peaks are seeded from the largest local maxima on either side of the
    signal's weighted center. Flat or featureless data is flagged
    non-converged instead of producing a spurious estimate.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    span = np.max(y) - np.min(y)
    if not np.isfinite(span) or span < 1e-12:
        return FitResult(
            model="double_gaussian",
            params={},
            errors={},
            residual_norm=float(np.linalg.norm(y - np.mean(y))),
            converged=False,
            extras={"reason": "no structure in data"},
        )
    off0 = np.min(y)
    peaks = local_maxima(y, min_prominence=0.2 * span)
    if len(peaks) < 2:
        order = np.argsort(y)[::-1]
        peaks = order[:2]
    else:
        peaks = peaks[np.argsort(y[peaks])[::-1]][:2]
    peaks = np.sort(peaks)
    width0 = (x.max() - x.min()) / 20.0
    p0 = np.array(
        [
            y[peaks[0]] - off0, x[peaks[0]], width0,
            y[peaks[1]] - off0, x[peaks[1]], width0,
            off0,
        ]
    )

    def residual(p):
        return _double_gaussian(x, p) - y

    p, cov, converged, rnorm = damped_gauss_newton(residual, p0)
    p[2], p[5] = abs(p[2]), abs(p[5])
    errs = np.sqrt(np.abs(np.diag(cov)))
    if not np.all(np.isfinite(p)):
        converged = False
    return FitResult(
        model="double_gaussian",
        params=dict(zip(_DG_NAMES, p)) if converged else {},
        errors=dict(zip(_DG_NAMES, errs)) if converged else {},
        residual_norm=rnorm,
        converged=converged,
    )


def fit_power_law(x, y):
    """Fit y = A x^p, seeded by log-log linear regression."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive x and y")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    p0 = np.array([np.exp(intercept), slope])

    def residual(p):
        return p[0] * x ** p[1] - y

    p, cov, converged, rnorm = damped_gauss_newton(residual, p0)
    errs = np.sqrt(np.abs(np.diag(cov)))
    return FitResult(
        model="power_law",
        params={"amplitude": p[0], "exponent": p[1]} if converged else {},
        errors={"amplitude": errs[0], "exponent": errs[1]} if converged else {},
        residual_norm=rnorm,
        converged=converged,
    )


def fft_peak(signal, dt):
    """Frequency of the dominant spectral component of a uniformly sampled
    signal, refined by quadratic interpolation over neighboring bins.

    dt sets the unit: seconds give Hz, microseconds give MHz. The DC bin is
    excluded (the mean is removed first).
    """
    y = np.asarray(signal, dtype=float)
    y = y - np.mean(y)
    spectrum = np.abs(np.fft.rfft(y))
    if len(spectrum) < 3:
        raise ValueError("signal too short for peak estimation")
    k = int(np.argmax(spectrum[1:]) + 1)
    df = 1.0 / (len(y) * dt)
    if k == 0 or k >= len(spectrum) - 1:
        return k * df
    a, b, g = spectrum[k - 1], spectrum[k], spectrum[k + 1]
    denom = a - 2.0 * b + g
    shift = 0.0 if denom == 0.0 else 0.5 * (a - g) / denom
    return (k + shift) * df
