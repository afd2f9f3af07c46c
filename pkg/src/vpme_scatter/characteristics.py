"""Backward characteristic flow pinned by conditions at the horizon.

Trajectories solve dX/dt = V, dV/dt = E(t, X) with the free-flight state
(x + vT, v) imposed at the finite horizon T, which stands in for t -> infinity;
the field is treated as exactly zero past T.  Positions are kept unreduced
during integration (the label formula X(T) - T V(T) needs the winding) and
reduced mod 1 only at field sampling and output.

Integration is fixed-step RK4, vectorized over batches of phase points.  Past
the history's quiet time (where the stored field drops below a negligible
impulse threshold) the flow is advanced in closed form as free transport.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError, OutOfRangeError, ParameterError
from .poisson import FieldSlice, SpatialGrid

DEFAULT_SUBSTEPS = 4


@dataclass(frozen=True)
class PhaseLabel:
    """Asymptotic label (x, v): the limits of X - Vt and V as t -> infinity."""

    x: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x) % 1.0)


@dataclass(frozen=True)
class PhasePoint:
    """Phase coordinates (x, v) at a concrete time t."""

    t: float
    x: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x) % 1.0)


def _cubic_periodic(row: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Four-point Lagrange cubic interpolation of periodic nodal data at x (mod 1)."""
    n = row.shape[-1]
    p = np.mod(x, 1.0) * n
    j = np.floor(p).astype(np.int64)
    j = np.clip(j, 0, n - 1)  # guard the mod-rounding edge p == n
    th = p - j
    # Padded copy avoids four modular index arrays on the hot path.
    rowp = np.concatenate((row[-1:], row, row[:2]))
    a = th - 1.0
    b = th - 2.0
    c = th + 1.0
    wm1 = -th * a * b / 6.0
    w0 = c * a * b / 2.0
    w1 = -c * th * b / 2.0
    w2 = c * th * a / 6.0
    return wm1 * rowp[j] + w0 * rowp[j + 1] + w1 * rowp[j + 2] + w2 * rowp[j + 3]


@dataclass(frozen=True)
class FieldHistory:
    """Time x space samples of the split electric field for one scheme iterate."""

    times: np.ndarray
    grid: SpatialGrid
    Ebar: np.ndarray
    Etilde: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if times.ndim != 1 or times.size < 2:
            raise ParameterError("time grid needs at least two nodes")
        dt = np.diff(times)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
            raise ParameterError("time grid must be uniform")
        for name in ("Ebar", "Etilde"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (times.size, self.grid.nx):
                raise ParameterError(f"{name} shape {arr.shape} does not match grids")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "E", self.Ebar + self.Etilde)
        self.E.setflags(write=False)

    @classmethod
    def zero(cls, times: np.ndarray, grid: SpatialGrid) -> "FieldHistory":
        z = np.zeros((np.asarray(times).size, grid.nx))
        return cls(times=times, grid=grid, Ebar=z, Etilde=z.copy())

    @classmethod
    def from_slices(cls, times, grid, slices: list[FieldSlice]) -> "FieldHistory":
        return cls(
            times=times,
            grid=grid,
            Ebar=np.vstack([s.Ebar for s in slices]),
            Etilde=np.vstack([s.Etilde for s in slices]),
        )

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def quiet_time(self, threshold: float | None = None) -> float:
        """Earliest grid time after which every slice stays below the threshold.

        The default threshold keeps the neglected velocity impulse below 1e-14
        over the remaining span and sits eight decades under the peak
        amplitude, so it also clears the round-off floor (~1e-15) the Poisson
        solves leave at long times.
        """
        if threshold is None:
            span = max(1.0, self.horizon - self.t0)
            peak = float(np.max(np.abs(self.E))) if self.E.size else 0.0
            threshold = max(1e-14 / span, 1e-8 * peak)
        sup = np.max(np.abs(self.E), axis=1)
        loud = np.nonzero(sup > threshold)[0]
        if loud.size == 0:
            return self.t0
        idx = min(loud[-1] + 1, self.times.size - 1)
        return float(self.times[idx])

    def sample(self, t: float, x: np.ndarray) -> np.ndarray:
        """E(t, x): cubic periodic interpolation in x, linear in t; zero past the horizon."""
        if t < self.t0 - 1e-12:
            raise OutOfRangeError(f"time {t} precedes the history start {self.t0}")
        if t >= self.horizon:
            if t == self.horizon:
                return _cubic_periodic(self.E[-1], np.asarray(x, dtype=float))
            return np.zeros_like(np.asarray(x, dtype=float))
        s = (t - self.t0) / self.dt
        i = max(0, min(int(np.floor(s)), self.times.size - 2))
        th = s - i
        row = (1.0 - th) * self.E[i] + th * self.E[i + 1]
        return _cubic_periodic(row, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class UniformDecayField:
    """Synthetic spatially uniform field E(t) = amplitude * exp(-rate t).

    Exercises the integrator against the closed-form trajectory; exposes the
    same sampling surface as FieldHistory.
    """

    rate: float
    amplitude: float
    t_start: float
    horizon: float

    @property
    def t0(self) -> float:
        return self.t_start

    def quiet_time(self, threshold: float | None = None) -> float:
        return self.horizon

    def sample(self, t: float, x: np.ndarray) -> np.ndarray:
        if t > self.horizon:
            return np.zeros_like(np.asarray(x, dtype=float))
        return np.full_like(
            np.asarray(x, dtype=float), self.amplitude * math.exp(-self.rate * t)
        )

    def exact_state(self, t: float, x: float, v: float):
        """Closed-form (X, V) at time t for the horizon-pinned trajectory."""
        a, c, T = self.rate, self.amplitude, self.horizon
        eT = math.exp(-a * T)
        et = math.exp(-a * t)
        V = v + c * (eT - et) / a
        X = x + v * t - c * (T - t) * eT / a + c * (et - eT) / a**2
        return X, V


def _rk4_span(field, t_from: float, t_to: float, X, V, step: float):
    """Advance (X, V) from t_from to t_to with fixed-step RK4; either direction."""
    span = t_to - t_from
    if span == 0.0:
        return X, V
    nsteps = max(1, int(math.ceil(abs(span) / step - 1e-12)))
    # Step endpoints are computed from t_from/t_to directly (never by
    # accumulation): round-off drift past the horizon would sample the
    # hard-zeroed field and poison the last step.
    for i in range(nsteps):
        t = t_from + span * (i / nsteps)
        t_next = t_to if i == nsteps - 1 else t_from + span * ((i + 1) / nsteps)
        dt = t_next - t
        t_mid = 0.5 * (t + t_next)
        k1v = field.sample(t, X)
        k2x = V + 0.5 * dt * k1v
        k2v = field.sample(t_mid, X + 0.5 * dt * V)
        k3v = field.sample(t_mid, X + 0.5 * dt * k2x)
        k3x = V + 0.5 * dt * k2v
        k4x = V + dt * k3v
        k4v = field.sample(t_next, X + dt * k3x)
        X = X + dt / 6.0 * (V + 2.0 * k2x + 2.0 * k3x + k4x)
        V = V + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(V))):
        raise IntegrationError("non-finite state during trajectory integration")
    return X, V


def transport_to_horizon(field, t: float, X, V, step: float):
    """Forward map from phase state (X, V) at time t to the horizon.

    RK4 up to the quiet time, closed-form free flight beyond it.  X may be
    unreduced; it stays unreduced.
    """
    T = field.horizon
    tq = min(max(field.quiet_time(), t), T)
    X, V = _rk4_span(field, t, tq, X, V, step)
    return X + V * (T - tq), V


def transport_from_horizon(field, t: float, X, V, step: float):
    """Backward map from the horizon state (X, V) to time t."""
    T = field.horizon
    tq = min(max(field.quiet_time(), t), T)
    X = X - V * (T - tq)
    return _rk4_span(field, tq, t, X, V, step)


def _check_time(field, t: float):
    if t < field.t0 - 1e-12 or t > field.horizon + 1e-12:
        raise OutOfRangeError(
            f"time {t} outside the history span [{field.t0}, {field.horizon}]"
        )


def sample_field(history: FieldHistory, t: float, x) -> float | np.ndarray:
    """E(t, x) from a stored history; scalar in, scalar out."""
    val = history.sample(t, np.asarray(x, dtype=float))
    return float(val) if np.ndim(x) == 0 else val


def flow_from_label(
    label: PhaseLabel, history, t: float, substeps: int = DEFAULT_SUBSTEPS
) -> PhasePoint:
    """(X(t), V(t)) of the trajectory with asymptotic label (x, v)."""
    _check_time(history, t)
    step = _step_size(history, substeps)
    X0 = label.x + label.v * history.horizon
    X, V = transport_from_horizon(
        history, t, np.asarray([X0]), np.asarray([label.v]), step
    )
    return PhasePoint(t=t, x=float(X[0]), v=float(V[0]))


def label_from_point(
    point: PhasePoint, history, substeps: int = DEFAULT_SUBSTEPS
) -> PhaseLabel:
    """Asymptotic label of the trajectory through (x, v) at time t (the inverse flow)."""
    _check_time(history, point.t)
    step = _step_size(history, substeps)
    X, V = transport_to_horizon(
        history, point.t, np.asarray([point.x]), np.asarray([point.v]), step
    )
    return PhaseLabel(x=float(X[0] - history.horizon * V[0]), v=float(V[0]))


def _step_size(field, substeps: int) -> float:
    dt = getattr(field, "dt", None)
    if dt is None:
        dt = (field.horizon - field.t0) / 100.0
    return dt / substeps
