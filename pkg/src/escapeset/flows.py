"""Concrete dynamical systems.

Every system exposes ``evaluate(x, t)`` (the time-``t`` map) and
``orbit(x, t_end, dt)`` (samples at ``0, dt, 2dt, ...`` towards ``t_end``;
a negative ``t_end`` samples backward time). Orbits stop early, with
``blowup_time`` set, when the trajectory diverges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import Diverged, DomainError, HorizonExhausted, NonInvertible, VariantMismatch
from .expressions import CustomMap, Expression
from .phase_space import DEFAULT_HORIZON, EuclideanPoint, SymbolicPoint, as_point, distance


@dataclass(frozen=True)
class IntegratorSettings:
    h: float = 1e-3
    method: str = "rk4"
    max_steps: int = 50_000_000
    r_div: float = 1e6

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if not self.r_div > 0:
            raise ValueError("divergence threshold must be positive")
        if self.method != "rk4":
            raise ValueError("only fixed-step 'rk4' is supported")


@dataclass
class Orbit:
    """Sampled trajectory. ``states`` is an (n, d) array, or a list of
    symbolic points for the shift."""

    times: np.ndarray
    states: object
    blowup_time: float | None = None
    truncated: bool = False

    def __len__(self):
        return len(self.times)


def _sample_grid(t_end: float, dt: float) -> tuple[int, float]:
    """Number of samples after t=0 and the signed step."""
    if dt <= 0:
        raise ValueError("sampling step must be positive")
    n = int(round(abs(t_end) / dt))
    if not math.isclose(n * dt, abs(t_end), rel_tol=1e-9, abs_tol=1e-12):
        n = int(math.ceil(abs(t_end) / dt))
    return n, math.copysign(dt, t_end) if t_end != 0 else dt


class FlowSystem:
    """Base class. Subclasses set the class attributes and implement
    ``_evaluate`` and (optionally) a faster ``orbits``."""

    name = "system"
    discrete = False
    invertible = True
    symbolic = False
    dim: int | None = None
    default_dt = 0.01

    def _check_time(self, t):
        if self.discrete and float(t) != int(t):
            raise ValueError(f"{self.name} is discrete; time must be an integer, got {t}")
        if t < 0 and not self.invertible:
            raise NonInvertible(f"{self.name} is not invertible; negative time {t}")

    def _check_point(self, x):
        x = as_point(x)
        if isinstance(x, SymbolicPoint) != self.symbolic:
            raise VariantMismatch(f"{self.name} does not act on {type(x).__name__}")
        if not self.symbolic and self.dim is not None and x.dim != self.dim:
            raise VariantMismatch(f"{self.name} acts on R^{self.dim}, got dimension {x.dim}")
        return x

    def evaluate(self, x, t):
        x = self._check_point(x)
        self._check_time(t)
        if t == 0:
            return x
        return self._evaluate(x, t)

    def _evaluate(self, x, t):
        raise NotImplementedError

    def orbit(self, x, t_end: float, dt: float | None = None) -> Orbit:
        return self.orbits([x], t_end, dt)[0]

    def orbits(self, points: Sequence, t_end: float, dt: float | None = None) -> list[Orbit]:
        """Sample trajectories; default implementation steps ``evaluate``."""
        dt = dt or self.default_dt
        n, step = _sample_grid(t_end, dt)
        self._check_time(step * n)
        out = []
        for x in points:
            x = self._check_point(x)
            times = [0.0]
            states = [x.array]
            blowup = None
            cur = x
            for k in range(1, n + 1):
                try:
                    cur = self._evaluate(cur, step)
                except Diverged as exc:
                    blowup = (k - 1) * step + exc.blowup_time
                    break
                times.append(k * step)
                states.append(cur.array)
            out.append(Orbit(np.array(times), np.array(states), blowup))
        return out

    def describe(self) -> dict:
        return {"type": self.name}

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


class Translation(FlowSystem):
    """``x + c t`` on R^n."""

    name = "translation"

    def __init__(self, c: Sequence[float]):
        self.c = np.asarray(c, dtype=float).ravel()
        self.dim = self.c.size

    def _evaluate(self, x, t):
        return EuclideanPoint(tuple(x.array + self.c * t))

    def orbits(self, points, t_end, dt=None):
        dt = dt or self.default_dt
        n, step = _sample_grid(t_end, dt)
        times = np.arange(n + 1) * step
        res = []
        for x in points:
            x = self._check_point(x)
            res.append(Orbit(times, x.array[None, :] + times[:, None] * self.c[None, :]))
        return res

    def describe(self):
        return {"type": self.name, "c": self.c.tolist()}


def spiral_blowup_time(r0: float) -> float | None:
    """Backward blowup time ``0.5 * ln(1 - 1/r0**2)`` of the spiral, or None for r0 <= 1."""
    if r0 <= 1.0:
        return None
    return 0.5 * math.log1p(-1.0 / (r0 * r0))


def spiral_radius(r0, t):
    """Closed-form radius; NaN where the backward solution no longer exists.

    Uses the equivalent form ``r0 / sqrt(r0^2 + (1 - r0^2) e^{-2t})``, which
    stays accurate for large |t|.
    """
    r0 = np.asarray(r0, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        gap = 1.0 - r0 * r0
        den = r0 * r0 + np.where(gap == 0, 0.0, gap * np.exp(-2.0 * t))
        r = np.where(den > 0, r0 / np.sqrt(den), np.nan)
    return np.where(r0 == 0, 0.0, r)


class Spiral(FlowSystem):
    """Planar flow with limit cycle |x| = 1, evaluated in closed form:
    ``r(t) = e^t r0 / sqrt(r0^2 (e^{2t} - 1) + 1)``, ``theta(t) = theta0 - t``."""

    name = "spiral"
    dim = 2

    @staticmethod
    def point(r0: float, theta0: float = 0.0) -> EuclideanPoint:
        return EuclideanPoint((r0 * math.cos(theta0), r0 * math.sin(theta0)))

    def _polar(self, x):
        return math.hypot(x[0], x[1]), math.atan2(x[1], x[0])

    def _evaluate(self, x, t):
        r0, th0 = self._polar(x)
        tstar = spiral_blowup_time(r0)
        if t < 0 and tstar is not None and t <= tstar:
            raise Diverged(tstar, f"spiral from r0={r0:g} blows up at t*={tstar:.9g}")
        r = float(spiral_radius(r0, t))
        th = th0 - t
        return EuclideanPoint((r * math.cos(th), r * math.sin(th)))

    def orbits(self, points, t_end, dt=None):
        dt = dt or self.default_dt
        n, step = _sample_grid(t_end, dt)
        times = np.arange(n + 1) * step
        res = []
        for x in points:
            x = self._check_point(x)
            r0, th0 = self._polar(x)
            tstar = spiral_blowup_time(r0)
            blowup = None
            ts = times
            if step < 0 and tstar is not None and times[-1] <= tstar:
                ts = times[times > tstar]
                blowup = tstar
            r = spiral_radius(r0, ts)
            th = th0 - ts
            res.append(Orbit(ts, np.column_stack([r * np.cos(th), r * np.sin(th)]), blowup))
        return res


def spiral_radius_rk4(r0: float, t_end: float, h: float = 1e-3, dt: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``dr/dt = r (1 - r^2)`` with RK4; cross-check for the closed form."""
    n, step = _sample_grid(t_end, dt)
    per = max(1, int(round(dt / h)))
    samples, _ = _kernels.rk4_samples(
        _kernels.FIELD_RADIAL, np.array([[r0]], dtype=float), math.copysign(dt / per, step), n, per, 1e12
    )
    return np.arange(n + 1) * step, samples[0, :, 0]


class _ODEFlow(FlowSystem):
    """Shared RK4 machinery for vector-field systems."""

    settings: IntegratorSettings

    def _integrate(self, y0: np.ndarray, n: int, per: int, h: float):
        raise NotImplementedError

    def _steps(self, dt: float) -> tuple[int, float]:
        per = max(1, int(math.ceil(abs(dt) / self.settings.h - 1e-9)))
        return per, dt / per

    def _evaluate(self, x, t):
        per, h = self._steps(t)
        if per > self.settings.max_steps:
            raise ValueError(f"{per} steps exceeds max_steps={self.settings.max_steps}")
        samples, div = self._integrate(x.array[None, :], 1, per, h)
        if div[0] >= 0:
            raise Diverged(div[0] * h)
        return EuclideanPoint(tuple(samples[0, 1]))

    def orbits(self, points, t_end, dt=None):
        dt = dt or self.default_dt
        n, step = _sample_grid(t_end, dt)
        per, h = self._steps(step)
        if per * n > self.settings.max_steps:
            raise ValueError(f"{per * n} steps exceeds max_steps={self.settings.max_steps}")
        pts = [self._check_point(x) for x in points]
        if not pts:
            return []
        y0 = np.ascontiguousarray([p.array for p in pts], dtype=float)
        samples, div = self._integrate(y0, n, per, h)
        times = np.arange(n + 1) * step
        res = []
        for i in range(len(pts)):
            if div[i] >= 0:
                keep = int(div[i] // per) + 1
                res.append(Orbit(times[:keep], samples[i, :keep], float(div[i] * h)))
            else:
                res.append(Orbit(times, samples[i]))
        return res


class R3Saddle(_ODEFlow):
    """The R^3 field whose escaping set is the z-axis, integrated with fixed-step RK4."""

    name = "r3saddle"
    dim = 3

    def __init__(self, settings: IntegratorSettings | None = None):
        self.settings = settings or IntegratorSettings()

    def _integrate(self, y0, n, per, h):
        return _kernels.rk4_samples(_kernels.FIELD_R3SADDLE, np.ascontiguousarray(y0), h, n, per, self.settings.r_div)

    def describe(self):
        return {"type": self.name, "h": self.settings.h, "r_div": self.settings.r_div}


class SpiralODE(_ODEFlow):
    """The spiral integrated numerically (oracle for :class:`Spiral`)."""

    name = "spiral-ode"
    dim = 2

    def __init__(self, settings: IntegratorSettings | None = None):
        self.settings = settings or IntegratorSettings()

    def _integrate(self, y0, n, per, h):
        return _kernels.rk4_samples(_kernels.FIELD_SPIRAL, np.ascontiguousarray(y0), h, n, per, self.settings.r_div)


class CustomODE(_ODEFlow):
    """User vector field given by expressions, RK4 in numpy."""

    name = "custom-ode"

    def __init__(self, field: CustomMap, settings: IntegratorSettings | None = None):
        self.field = field
        self.dim = field.dim
        self.settings = settings or IntegratorSettings()

    def _integrate(self, y0, n, per, h):
        return _kernels.rk4_generic(self.field, y0, h, n, per, self.settings.r_div)

    def describe(self):
        return {"type": self.name, "field": self.field.to_dict(), "h": self.settings.h, "r_div": self.settings.r_div}


class ExpressionFlow(FlowSystem):
    """Closed-form flow ``Phi(x, t)`` given by expressions in the state variables and ``t``."""

    name = "expression-flow"

    def __init__(self, components: Sequence[str], variables: Sequence[str] | None = None,
                 time_variable: str = "t", label: str = ""):
        if isinstance(components, str):
            components = [components]
        variables = list(variables or (["x"] if len(components) == 1 else [f"x{i}" for i in range(len(components))]))
        self.variables = tuple(variables)
        self.time_variable = time_variable
        self.components = tuple(Expression(c, (*variables, time_variable)) for c in components)
        self.dim = len(variables)
        self.label = label

    def _apply(self, arr: np.ndarray, t) -> np.ndarray:
        env = {v: arr[..., i] for i, v in enumerate(self.variables)}
        env[self.time_variable] = t
        with np.errstate(all="ignore"):
            cols = [np.broadcast_to(np.asarray(c.evaluate(env), dtype=float), arr.shape[:-1]) for c in self.components]
        out = np.stack(cols, axis=-1)
        if np.isnan(out).any():
            raise DomainError(f"flow {self.label or self.name} left the real domain")
        return out

    def _evaluate(self, x, t):
        return EuclideanPoint(tuple(self._apply(x.array, float(t))))

    def orbits(self, points, t_end, dt=None):
        dt = dt or self.default_dt
        n, step = _sample_grid(t_end, dt)
        times = np.arange(n + 1) * step
        res = []
        for x in points:
            x = self._check_point(x)
            grid = np.broadcast_to(x.array, (n + 1, self.dim))
            res.append(Orbit(times, self._apply(grid, times)))
        return res

    def describe(self):
        return {"type": self.name, "components": [c.source for c in self.components],
                "variables": list(self.variables)}


class MapSystem(FlowSystem):
    """Discrete system generated by iterating a custom map (backward with its inverse)."""

    name = "custom-map"
    discrete = True
    default_dt = 1

    def __init__(self, map: CustomMap, r_div: float = 1e300):
        self.map = map
        self.dim = map.dim
        self.invertible = map.has_inverse
        self.r_div = r_div

    def _step_all(self, arr, n):
        f = self.map if n > 0 else self.map.inverse
        for _ in range(abs(int(n))):
            arr = f(arr)
        return arr

    def _evaluate(self, x, t):
        out = self._step_all(x.array[None, :], t)[0]
        if not np.isfinite(out).all() or np.linalg.norm(out) > self.r_div:
            raise Diverged(t)
        return EuclideanPoint(tuple(out))

    def orbits(self, points, t_end, dt=None):
        n = int(abs(round(t_end)))
        sign = 1 if t_end >= 0 else -1
        self._check_time(sign)
        f = self.map if sign > 0 else self.map.inverse
        pts = [self._check_point(x) for x in points]
        if not pts:
            return []
        cur = np.array([p.array for p in pts])
        states = np.full((len(pts), n + 1, self.dim), np.nan)
        states[:, 0] = cur
        alive = np.ones(len(pts), dtype=bool)
        blow = np.full(len(pts), -1)
        for k in range(1, n + 1):
            if not alive.any():
                break
            nxt = f(cur[alive])
            with np.errstate(over="ignore"):
                bad = ~np.isfinite(nxt).all(axis=1) | (np.linalg.norm(nxt, axis=1) > self.r_div)
            idx = np.flatnonzero(alive)
            blow[idx[bad]] = k
            alive[idx[bad]] = False
            cur[idx[~bad]] = nxt[~bad]
            states[idx[~bad], k] = nxt[~bad]
        times = sign * np.arange(n + 1, dtype=float)
        res = []
        for i in range(len(pts)):
            if blow[i] >= 0:
                res.append(Orbit(times[: blow[i]], states[i, : blow[i]], float(sign * blow[i])))
            else:
                res.append(Orbit(times, states[i]))
        return res

    def describe(self):
        return {"type": self.name, "map": self.map.to_dict()}


class Shift(FlowSystem):
    """Left shift on N^N: ``(x1, x2, x3, ...) -> (x2, x3, ...)``."""

    name = "shift"
    discrete = True
    invertible = False
    symbolic = True
    default_dt = 1

    def _evaluate(self, x, t):
        return x.shifted(int(t))

    def orbits(self, points, t_end, dt=None):
        self._check_time(t_end)
        n = int(t_end)
        res = []
        for x in points:
            x = self._check_point(x)
            usable = min(n, x.horizon - 1)
            states = [x.shifted(k) for k in range(usable + 1)]
            res.append(Orbit(np.arange(usable + 1, dtype=float), states, truncated=usable < n))
        return res


def evaluate(sys: FlowSystem, x, t):
    """Time-``t`` map of ``sys`` at ``x``."""
    return sys.evaluate(x, t)


def group_law_residual(sys: FlowSystem, x, t, s) -> float:
    """``d(Phi(x, t+s), Phi(Phi(x, t), s))``; zero up to rounding for a true flow."""
    direct = sys.evaluate(x, t + s)
    composed = sys.evaluate(sys.evaluate(x, t), s)
    if isinstance(direct, SymbolicPoint):
        return 0.0 if direct.offset == composed.offset and direct.horizon == composed.horizon else distance(direct, composed)
    return distance(direct, composed)


def _x_spikes_rule(i: np.ndarray) -> np.ndarray:
    # 2^j at index 2^j, 1 elsewhere
    return np.where((i & (i - 1)) == 0, i, 1)


def _y_countdown_rule(i: np.ndarray) -> np.ndarray:
    # counts down from 2^j to 1 on each block (2^{j-1}, 2^j]: y_i = 2^{bitlen(i)} - i
    return np.left_shift(np.int64(1), np.frexp(i.astype(np.float64))[1].astype(np.int64)) - i


def example_shift_points(horizon: int = DEFAULT_HORIZON) -> tuple[SymbolicPoint, SymbolicPoint]:
    """The sequences ``x = (1,2,1,4,1,1,1,8,...)`` and ``y = (1,2,1,4,3,2,1,8,7,...)``."""
    return (
        SymbolicPoint(_x_spikes_rule, horizon, name="x_spikes"),
        SymbolicPoint(_y_countdown_rule, horizon, name="y_countdown"),
    )


EXAMPLE_SYSTEMS = {
    "translation": lambda: Translation([1.0, 0.0]),
    "spiral": Spiral,
    "r3saddle": R3Saddle,
    "shift": Shift,
}
