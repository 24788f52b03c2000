"""ARIMA estimation and forecasting, differencing and classical decomposition.

Estimation minimizes the conditional sum of squares (CSS): residuals are
computed recursively from index ``max(p, q)`` of the differenced series
with all pre-sample residuals set to zero. Coefficients are optimized in
an unconstrained space where each AR/MA polynomial is parameterized by
its partial autocorrelations ``tanh(u)``, which keeps every iterate
stationary and invertible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .datamodel import TrafficSeries
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateDataError,
    ShapeError,
    StabilityError,
)

MAX_AR = 5
MAX_MA = 5
MAX_D = 2
PSI_TERMS = 1000
BURN_IN = 500
# bound on the unconstrained PACF parameters; tanh(10) = 1 - 4e-9
_U_LIMIT = 10.0


@dataclass(frozen=True)
class ArimaOrder:
    p: int = 2
    d: int = 0
    q: int = 1

    def __post_init__(self):
        for name in ("p", "d", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ConfigError(f"ARIMA order {name} must be a non-negative integer")
        if self.p > MAX_AR or self.q > MAX_MA or self.d > MAX_D:
            raise ConfigError(f"ARIMA order {tuple(self)} exceeds (p<={MAX_AR}, d<={MAX_D}, q<={MAX_MA})")

    def __iter__(self):
        return iter((self.p, self.d, self.q))

    @classmethod
    def parse(cls, value) -> "ArimaOrder":
        if isinstance(value, ArimaOrder):
            return value
        if isinstance(value, str):
            try:
                value = [int(v) for v in value.split(",")]
            except ValueError:
                raise ConfigError(f"cannot parse ARIMA order {value!r}") from None
        if len(value) != 3:
            raise ConfigError("ARIMA order needs exactly three integers p,d,q")
        return cls(*(int(v) for v in value))


@dataclass(frozen=True)
class Forecast:
    point: np.ndarray
    stderr: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.point)

    def interval(self, z: float = 1.96):
        return self.point - z * self.stderr, self.point + z * self.stderr


@dataclass(frozen=True)
class Decomposition:
    observed: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    residual: np.ndarray
    period: int

    @property
    def defined(self) -> np.ndarray:
        """Mask of indices where the centered moving average exists."""
        return ~np.isnan(self.trend)


# -- polynomial helpers ------------------------------------------------------

def pacf_to_coefs(partial) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to coefficients ``a`` of a
    stable polynomial ``1 - sum(a_i z^i)`` (Durbin-Levinson recursion)."""
    partial = np.asarray(partial, dtype=float)
    a = np.zeros(partial.size)
    for k, r in enumerate(partial):
        prev = a[:k].copy()
        a[:k] = prev - r * prev[::-1]
        a[k] = r
    return a


def coefs_to_pacf(coefs) -> np.ndarray:
    a = np.array(coefs, dtype=float)
    r = np.zeros(a.size)
    for k in range(a.size - 1, -1, -1):
        r[k] = a[k]
        if k > 0:
            a[:k] = (a[:k] + r[k] * a[:k][::-1]) / (1.0 - r[k] ** 2)
    return r


def is_stable(coefs) -> bool:
    """True when every root of ``1 - sum(c_i z^i)`` lies outside the unit circle."""
    coefs = np.asarray(coefs, dtype=float)
    if coefs.size == 0 or not np.any(coefs):
        return True
    # roots of the reciprocal (monic) polynomial must lie inside the unit circle
    roots = np.roots(np.r_[1.0, -coefs])
    return bool(np.all(np.abs(roots) < 1.0))


def psi_weights(phi, theta, n: int) -> np.ndarray:
    """First ``n`` coefficients of the MA(infinity) representation."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    impulse = np.zeros(n)
    impulse[0] = 1.0
    return signal.lfilter(np.r_[1.0, theta], np.r_[1.0, -phi], impulse)


# -- differencing ------------------------------------------------------------

def difference(series, d: int = 1) -> np.ndarray:
    """Apply ``(1 - L)^d``; the result is ``d`` samples shorter."""
    x = np.asarray(series, dtype=float).ravel()
    if d < 0:
        raise ConfigError("differencing order must be non-negative")
    if d >= x.size:
        raise ShapeError(f"cannot difference {x.size} values {d} times")
    return np.diff(x, n=d) if d else x.copy()


def difference_initials(series, d: int) -> np.ndarray:
    """First value of each of the 0..d-1 fold differences, as needed by ``undifference``."""
    x = np.asarray(series, dtype=float).ravel()
    return np.array([np.diff(x, n=j)[0] for j in range(d)])


def undifference(diffed, initials) -> np.ndarray:
    """Invert ``difference`` given the values from ``difference_initials``."""
    y = np.asarray(diffed, dtype=float).ravel()
    for start in reversed(np.asarray(initials, dtype=float)):
        y = np.r_[start, start + np.cumsum(y)]
    return y


def _integrate(forecast_diffs, history, d: int) -> np.ndarray:
    out = np.asarray(forecast_diffs, dtype=float)
    for j in range(d - 1, -1, -1):
        out = np.diff(history, n=j)[-1] + np.cumsum(out)
    return out


# -- estimation --------------------------------------------------------------

def _unpack(params, p, q):
    u = np.clip(params[:p + q], -_U_LIMIT, _U_LIMIT)
    phi = pacf_to_coefs(np.tanh(u[:p]))
    theta = -pacf_to_coefs(np.tanh(u[p:]))
    return phi, theta, params[p + q]


def css_residuals(w, phi, theta, mean) -> np.ndarray:
    """One-step residuals of the differenced series ``w`` from index max(p, q)."""
    w = np.asarray(w, dtype=float)
    p, q = len(phi), len(theta)
    m = max(p, q)
    z = w - mean
    y = z[m:].copy()
    n = z.size
    for i in range(1, p + 1):
        y -= phi[i - 1] * z[m - i:n - i]
    if q:
        return signal.lfilter([1.0], np.r_[1.0, theta], y)
    return y


class ARIMA(BaseEstimator):
    """ARIMA(p, d, q) fitted by conditional sum of squares.

    Parameters
    ----------
    order : tuple of int
        ``(p, d, q)``. The default ``(2, 0, 1)`` is the hourly-volume setup.
    max_iter : int
        Quasi-Newton iteration cap.
    tol : float
        Stop once the relative CSS improvement of an iteration drops below it.
    grad_step : float
        Central-difference step for numerical gradients.

    Attributes
    ----------
    phi_, theta_ : ndarray
        AR and MA coefficients (``1 - sum phi L^i`` and ``1 + sum theta L^j``).
    mean_ : float
        Level of the differenced series.
    sigma2_ : float
        Innovation variance, ``css_ / nobs_``.
    resid_ : ndarray
        In-sample one-step residuals (from index ``max(p, q)``).
    """

    def __init__(self, order=(2, 0, 1), max_iter=500, tol=1e-10, grad_step=1e-6):
        self.order = order
        self.max_iter = max_iter
        self.tol = tol
        self.grad_step = grad_step

    def fit(self, y, X=None):
        order = ArimaOrder.parse(self.order)
        p, d, q = order
        if isinstance(y, TrafficSeries):
            y = y.values
        x = np.asarray(y, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise DataError("series contains non-finite values")
        need = 10 * (p + q + 1)
        if x.size < need:
            raise DataError(f"ARIMA{tuple(order)} needs at least {need} observations, got {x.size}")
        w = difference(x, d)
        if p + q > 0 and np.ptp(w) == 0.0:
            raise DegenerateDataError("series is constant after differencing")

        m = max(p, q)
        n_eff = w.size - m
        if p + q == 0:
            params = np.array([w.mean()])
            n_iter, converged = 0, True
        else:
            params, n_iter, converged = self._optimize(w, p, q)

        phi, theta, mean = _unpack(params, p, q)
        resid = css_residuals(w, phi, theta, mean)
        css = float(resid @ resid)
        self.order_ = order
        self.phi_ = phi
        self.theta_ = theta
        self.mean_ = float(mean)
        self.css_ = css
        self.nobs_ = n_eff
        self.sigma2_ = css / n_eff
        self.resid_ = resid
        self.n_iter_ = n_iter
        self.history_ = x[-(m + d + 1):].copy() if x.size > m + d else x.copy()
        if self.sigma2_ <= 0:
            raise DegenerateDataError("fitted innovation variance is zero")
        if not converged:
            raise ConvergenceError(
                f"CSS optimizer did not converge in {self.max_iter} iterations", best=self)
        return self

    def _optimize(self, w, p, q):
        m = max(p, q)
        scale = 1.0 / (w.size - m)
        h = self.grad_step

        def objective(params):
            phi, theta, mean = _unpack(params, p, q)
            e = css_residuals(w, phi, theta, mean)
            return float(e @ e) * scale

        def gradient(params):
            g = np.empty_like(params)
            for i in range(params.size):
                step = np.zeros_like(params)
                step[i] = h
                g[i] = (objective(params + step) - objective(params - step)) / (2 * h)
            return g

        x0 = np.zeros(p + q + 1)
        x0[-1] = w.mean()
        state = {"prev": objective(x0), "converged": False}

        def callback(intermediate_result):
            f = intermediate_result.fun
            prev = state["prev"]
            state["prev"] = f
            if abs(prev - f) <= self.tol * max(abs(prev), 1e-300):
                state["converged"] = True
                raise StopIteration

        res = optimize.minimize(objective, x0, jac=gradient, method="BFGS", callback=callback,
                                options={"maxiter": self.max_iter, "gtol": 1e-9})
        # BFGS status 2 is a line-search stall at machine precision: treat as converged
        converged = state["converged"] or res.status in (0, 2)
        return res.x, int(res.nit), converged

    def forecast(self, horizon: int = 24, last_observations=None) -> Forecast:
        """Point forecasts and standard errors ``horizon`` steps past the data."""
        check_is_fitted(self, "phi_")
        return forecast(self, horizon, last_observations)

    def predict(self, horizon: int = 24) -> np.ndarray:
        return self.forecast(horizon).point

    def fitted_mae(self) -> float:
        """Mean absolute one-step in-sample error."""
        check_is_fitted(self, "phi_")
        return float(np.mean(np.abs(self.resid_)))

    def to_state(self) -> dict:
        check_is_fitted(self, "phi_")
        return {
            "params": {"order": list(self.order_), "max_iter": self.max_iter, "tol": self.tol,
                       "grad_step": self.grad_step, "mean": self.mean_, "sigma2": self.sigma2_,
                       "css": self.css_, "nobs": self.nobs_, "n_iter": self.n_iter_},
            "arrays": {"phi": self.phi_, "theta": self.theta_, "resid": self.resid_,
                       "history": self.history_},
        }

    @classmethod
    def from_state(cls, state: dict) -> "ARIMA":
        p = state["params"]
        a = state["arrays"]
        model = cls(order=tuple(p["order"]), max_iter=p["max_iter"], tol=p["tol"], grad_step=p["grad_step"])
        model.order_ = ArimaOrder.parse(p["order"])
        model.mean_ = float(p["mean"])
        model.sigma2_ = float(p["sigma2"])
        model.css_ = float(p["css"])
        model.nobs_ = int(p["nobs"])
        model.n_iter_ = int(p["n_iter"])
        model.phi_ = np.asarray(a["phi"], dtype=float)
        model.theta_ = np.asarray(a["theta"], dtype=float)
        model.resid_ = np.asarray(a["resid"], dtype=float)
        model.history_ = np.asarray(a["history"], dtype=float)
        return model


def fit_arima(series, order=(2, 0, 1), **cfg) -> ARIMA:
    return ARIMA(order=order, **cfg).fit(series)


def forecast(model: ARIMA, horizon: int = 24, last_observations=None) -> Forecast:
    """ARMA recursion forward with future shocks set to zero.

    ``last_observations`` are trailing raw (undifferenced) values; by default
    the tail of the training series. Trailing residuals always come from the fit.
    """
    if not isinstance(horizon, (int, np.integer)) or horizon < 1:
        raise ConfigError(f"forecast horizon must be a positive integer, got {horizon!r}")
    p, d, q = model.order_
    history = model.history_ if last_observations is None else np.asarray(last_observations, dtype=float).ravel()
    if history.size < p + d:
        raise DataError(f"need at least {p + d} trailing observations, got {history.size}")
    w_hist = difference(history, d) if d else history
    z = list(w_hist[w_hist.size - p:] - model.mean_) if p else []
    resid = model.resid_
    if resid.size < q:
        raise DataError("model carries too few residuals to forecast")
    e = list(resid[resid.size - q:]) if q else []

    out = np.empty(horizon)
    for h in range(horizon):
        value = 0.0
        for i in range(1, p + 1):
            value += model.phi_[i - 1] * z[-i]
        for j in range(1, q + 1):
            value += model.theta_[j - 1] * e[-j]
        z.append(value)
        e.append(0.0)
        out[h] = value + model.mean_
    if d:
        out = _integrate(out, history, d)

    # psi weights of the integrated process: AR polynomial times (1 - L)^d
    ar_poly = np.r_[1.0, -model.phi_]
    for _ in range(d):
        ar_poly = np.convolve(ar_poly, [1.0, -1.0])
    n_psi = min(horizon, PSI_TERMS)
    psi = signal.lfilter(np.r_[1.0, model.theta_], ar_poly, np.eye(1, n_psi).ravel())
    var = model.sigma2_ * np.cumsum(psi ** 2)
    if horizon > n_psi:
        var = np.r_[var, np.full(horizon - n_psi, var[-1])]
    return Forecast(point=out, stderr=np.sqrt(var))


# -- scoring, decomposition, simulation --------------------------------------

def mae(actual, predicted) -> float:
    a = np.asarray(actual, dtype=float).ravel()
    b = np.asarray(predicted, dtype=float).ravel()
    if a.size != b.size or a.size == 0:
        raise ShapeError(f"mae needs equal non-empty sequences, got {a.size} and {b.size}")
    return float(np.mean(np.abs(a - b)))


def decompose(series, period: int = 24) -> Decomposition:
    """Classical additive decomposition with a centered moving-average trend.

    Even periods use the 2xP average (half weights on both ends). Trend,
    and therefore residual, is NaN over the first and last half-window.
    """
    if isinstance(series, TrafficSeries):
        series = series.values
    x = np.asarray(series, dtype=float).ravel()
    if period < 2:
        raise ConfigError("decomposition period must be at least 2")
    if x.size < 2 * period:
        raise ShapeError(f"need at least {2 * period} values for period {period}, got {x.size}")

    if period % 2 == 0:
        weights = np.r_[0.5, np.ones(period - 1), 0.5] / period
    else:
        weights = np.ones(period) / period
    half = weights.size // 2
    trend = np.full(x.size, np.nan)
    trend[half:x.size - half] = np.convolve(x, weights, mode="valid")

    detrended = x - trend
    phase = np.arange(x.size) % period
    phase_means = np.array([np.nanmean(detrended[phase == k]) for k in range(period)])
    phase_means -= phase_means.mean()
    seasonal = phase_means[phase]
    residual = x - trend - seasonal
    return Decomposition(observed=x, trend=trend, seasonal=seasonal, residual=residual, period=period)


def simulate_arma(phi=(), theta=(), mean=0.0, sigma=1.0, n=1000, seed=0) -> np.ndarray:
    """Seeded ARMA sample path; the first 500 draws are discarded as burn-in."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if not is_stable(phi):
        raise StabilityError(f"AR coefficients {phi.tolist()} are not stationary")
    if not is_stable(-theta):
        raise StabilityError(f"MA coefficients {theta.tolist()} are not invertible")
    if n < 1:
        raise ConfigError("n must be at least 1")
    if sigma < 0 or not math.isfinite(sigma):
        raise ConfigError("sigma must be finite and non-negative")
    rng = np.random.default_rng(seed)
    shocks = rng.normal(0.0, 1.0, n + BURN_IN) * sigma
    x = signal.lfilter(np.r_[1.0, theta], np.r_[1.0, -phi], shocks)
    return x[BURN_IN:] + mean


class SeasonalARIMA(BaseEstimator):
    """ARIMA on a seasonally adjusted series.

    ``fit`` removes the per-phase seasonal profile estimated by
    ``decompose(y, period)`` and fits ``ARIMA(order)`` to what remains.
    Forecasts add the profile back at the matching phase. Standard errors
    are those of the adjusted model (the profile is treated as known).
    ``period=None`` reduces to a plain ARIMA fit.
    """

    def __init__(self, order=(2, 0, 1), period=24, max_iter=500, tol=1e-10, grad_step=1e-6):
        self.order = order
        self.period = period
        self.max_iter = max_iter
        self.tol = tol
        self.grad_step = grad_step

    def fit(self, y, X=None):
        if isinstance(y, TrafficSeries):
            y = y.values
        x = np.asarray(y, dtype=float).ravel()
        if self.period:
            profile = decompose(x, int(self.period)).seasonal[: int(self.period)].copy()
            adjusted = x - profile[np.arange(x.size) % profile.size]
        else:
            profile = np.zeros(1)
            adjusted = x
        self.profile_ = profile
        self.n_train_ = x.size
        self.arima_ = ARIMA(order=self.order, max_iter=self.max_iter, tol=self.tol,
                            grad_step=self.grad_step).fit(adjusted)
        return self

    def forecast(self, horizon: int = 24) -> Forecast:
        check_is_fitted(self, "arima_")
        base = forecast(self.arima_, horizon)
        phase = (self.n_train_ + np.arange(base.horizon)) % self.profile_.size
        return Forecast(point=base.point + self.profile_[phase], stderr=base.stderr)

    def predict(self, horizon: int = 24) -> np.ndarray:
        return self.forecast(horizon).point

    def fitted_mae(self) -> float:
        return self.arima_.fitted_mae()

    @property
    def resid_(self) -> np.ndarray:
        return self.arima_.resid_

    def to_state(self) -> dict:
        check_is_fitted(self, "arima_")
        inner = self.arima_.to_state()
        return {"params": {**inner["params"], "period": int(self.period or 0), "n_train": self.n_train_},
                "arrays": {**inner["arrays"], "profile": self.profile_}}

    @classmethod
    def from_state(cls, state: dict) -> "SeasonalARIMA":
        params = dict(state["params"])
        period = params.pop("period")
        n_train = params.pop("n_train")
        arrays = dict(state["arrays"])
        profile = np.asarray(arrays.pop("profile"), dtype=float)
        inner = ARIMA.from_state({"params": params, "arrays": arrays})
        model = cls(order=tuple(params["order"]), period=period or None, max_iter=inner.max_iter,
                    tol=inner.tol, grad_step=inner.grad_step)
        model.arima_ = inner
        model.profile_ = profile
        model.n_train_ = int(n_train)
        return model
