"""Explicit integrators: fixed-step RK4, adaptive Dormand-Prince 5(4), and
RK4 method of steps for fixed delays.

Nonstiff problems only.  Every solve ends exactly at ``t1``.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import VectorField
from .errors import OpetriError, SolverError

__all__ = ["SolveConfig", "Trajectory", "solve_ode", "solve_dde", "hermite"]


@dataclass(frozen=True)
class SolveConfig:
    t0: float = 0.0
    t1: float = 1.0
    dt: float = 0.01
    method: str = "rk45"
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_steps: int = 1_000_000
    save_every: int = 1
    min_step: float = 1e-12

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must be greater than t0")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.save_every < 1 or self.max_steps < 1:
            raise ValueError("save_every and max_steps must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)
    var_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states.reshape(len(self.times), -1)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "var_names", tuple(self.var_names))
        if len(self.times) != len(states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.var_names.index(name)]

    def at(self, t) -> np.ndarray:
        """Linear interpolation of every variable at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        cols = [np.interp(t, self.times, self.states[:, k]) for k in range(self.states.shape[1])]
        return np.stack(cols, axis=-1) if cols else np.zeros(t.shape + (0,))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.var_names])
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        data = np.array([[float(x) for x in r] for r in body], dtype=float).reshape(len(body), len(header))
        return cls(data[:, 0], data[:, 1:], header[1:])


def _check(du: np.ndarray, dim: int, t: float, u: np.ndarray) -> np.ndarray:
    if du.shape != (dim,):
        raise SolverError(f"vector field returned shape {du.shape}, expected ({dim},)", t)
    if not np.all(np.isfinite(du)):
        raise SolverError("non-finite derivative", t, u)
    return du


def _n_steps(t0: float, t1: float, dt: float) -> int:
    return max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))


def _grid_time(k: int, n: int, t0: float, t1: float, dt: float) -> float:
    return t1 if k >= n else t0 + k * dt


def _rk4_step(f, t, u, h, k1):
    k2 = f(t + h / 2, u + h / 2 * k1)
    k3 = f(t + h / 2, u + h / 2 * k2)
    k4 = f(t + h, u + h * k3)
    return u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B_LOW = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW


def solve_ode(f: VectorField, u0: Sequence[float], cfg: SolveConfig) -> Trajectory:
    """Integrate an ODE field from ``cfg.t0`` to ``cfg.t1``.

    ``rk4`` takes fixed steps of ``cfg.dt`` (the last one shortened);
    ``rk45`` starts at ``cfg.dt`` and adapts the step with a PI controller
    on the embedded error estimate.
    """
    if f.delays:
        raise OpetriError("field has delays; use solve_dde")
    u = np.array(u0, dtype=float)
    if u.shape != (f.dim,):
        raise ValueError(f"initial state has length {u.size}, field has dimension {f.dim}")

    def rhs(t, x):
        return _check(f(t, x), f.dim, t, x)

    if cfg.method == "rk4":
        return _fixed_rk4(rhs, u, cfg, f.var_names)
    return _dopri(rhs, u, cfg, f.var_names)


def _fixed_rk4(rhs, u, cfg: SolveConfig, names) -> Trajectory:
    n = _n_steps(cfg.t0, cfg.t1, cfg.dt)
    if n > cfg.max_steps:
        raise SolverError(f"{n} steps needed, max_steps is {cfg.max_steps}")
    times, states = [cfg.t0], [u.copy()]
    t = cfg.t0
    for k in range(1, n + 1):
        t_next = _grid_time(k, n, cfg.t0, cfg.t1, cfg.dt)
        u = _rk4_step(rhs, t, u, t_next - t, rhs(t, u))
        t = t_next
        if k % cfg.save_every == 0 or k == n:
            times.append(t)
            states.append(u.copy())
    return Trajectory(times, states, names)


def _dopri(rhs, u, cfg: SolveConfig, names) -> Trajectory:
    safety, fac_min, fac_max = 0.9, 0.2, 5.0
    alpha, beta = 0.7 / 5, 0.4 / 5
    t, h = cfg.t0, min(cfg.dt, cfg.t1 - cfg.t0)
    times, states = [t], [u.copy()]
    k = np.zeros((7, u.size))
    k[0] = rhs(t, u)
    err_prev = 1e-4
    steps = accepted = 0
    while t < cfg.t1:
        steps += 1
        if steps > cfg.max_steps:
            raise SolverError(f"max_steps={cfg.max_steps} exceeded", t, u)
        last = t + h >= cfg.t1 - 1e-12 * max(1.0, abs(cfg.t1))
        if last:
            h = cfg.t1 - t
        for i in range(1, 7):
            k[i] = rhs(t + _C[i] * h, u + h * (np.dot(_A[i], k[:i]) if i else 0))
        u_new = u + h * (_B @ k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(u), np.abs(u_new))
        err = float(np.sqrt(np.mean((h * (_E @ k) / scale) ** 2))) if u.size else 0.0
        if err <= 1.0:
            t = cfg.t1 if last else t + h
            u = u_new
            k[0] = k[6]
            accepted += 1
            if accepted % cfg.save_every == 0 or t >= cfg.t1:
                times.append(t)
                states.append(u.copy())
            fac = fac_max if err == 0 else safety * err ** -alpha * err_prev**beta
            err_prev = max(err, 1e-4)
            h *= min(fac_max, max(fac_min, fac))
        else:
            h *= max(fac_min, safety * err ** -alpha)
        if h < cfg.min_step and t < cfg.t1:
            raise SolverError(f"step size {h!r} fell below min_step", t, u)
    return Trajectory(times, states, names)


# -- delays ---------------------------------------------------------------------


def hermite(t0: float, t1: float, y0, y1, f0, f1, s: float) -> np.ndarray:
    """Cubic Hermite interpolant on ``[t0, t1]`` evaluated at ``s``."""
    h = t1 - t0
    x = (s - t0) / h
    h00 = (1 + 2 * x) * (1 - x) ** 2
    h10 = x * (1 - x) ** 2
    h01 = x * x * (3 - 2 * x)
    h11 = x * x * (x - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _delay_step(delays: Sequence[float], dt: float, min_step: float) -> float:
    pos = sorted({d for d in delays if d > 0})
    if not pos:
        return dt
    if pos[0] < min_step:
        raise SolverError(f"delay {pos[0]!r} is smaller than the minimum step {min_step!r}")
    m0 = max(1, int(math.ceil(pos[0] / dt - 1e-9)))
    for m in range(m0, 1000 * m0 + 1):
        h = pos[0] / m
        if all(abs(d / h - round(d / h)) <= 1e-9 * d / h for d in pos):
            return h
    raise SolverError(f"no step below {dt!r} divides all delays {pos}")


def solve_dde(
    f: VectorField,
    u0: Sequence[float],
    hist: Callable[[float], Sequence[float]],
    cfg: SolveConfig,
) -> Trajectory:
    """Method of steps with RK4 for fixed delays.

    The step is ``cfg.dt`` shrunk until it divides every positive delay, so
    lagged lookups at step ends land on stored points; lookups in between
    use cubic Hermite interpolation of the stored states and derivatives.
    Before ``cfg.t0`` the ``hist`` function is used.  The full dense
    history is kept, so memory grows as O(steps * dim).  ``cfg.method`` is
    ignored.
    """
    if not f.is_dde:
        raise OpetriError("field is a plain ODE; coerce it with ode_to_dde or use solve_ode")
    u = np.array(u0, dtype=float)
    if u.shape != (f.dim,):
        raise ValueError(f"initial state has length {u.size}, field has dimension {f.dim}")
    h = _delay_step(f.delays, cfg.dt, cfg.min_step)
    t0, t1 = cfg.t0, cfg.t1
    n = _n_steps(t0, t1, h)
    if n > cfg.max_steps:
        raise SolverError(f"{n} steps needed, max_steps is {cfg.max_steps}")

    ts: list[float] = [t0]
    ys: list[np.ndarray] = [u.copy()]
    fs: list[np.ndarray] = []
    eps = 1e-12 * max(1.0, abs(t0), abs(t1))

    def lookup(s: float, stage_t: float, stage_u: np.ndarray) -> np.ndarray:
        if s < t0 - eps:
            return np.asarray(hist(s), dtype=float)
        if s <= ts[-1] + eps:
            if s >= ts[-1] - eps:
                return ys[-1]
            if s <= t0 + eps:
                return ys[0]
            k = bisect.bisect_right(ts, s) - 1
            return hermite(ts[k], ts[k + 1], ys[k], ys[k + 1], fs[k], fs[k + 1], s)
        if abs(s - stage_t) <= eps:
            return stage_u
        raise SolverError(f"history requested at {s!r}, ahead of the solution", stage_t)

    def rhs(t, x):
        return _check(f(t, x, lambda s: lookup(s, t, x)), f.dim, t, x)

    times, states = [t0], [u.copy()]
    t = t0
    fs.append(rhs(t, u))
    for k in range(1, n + 1):
        t_next = _grid_time(k, n, t0, t1, h)
        u = _rk4_step(rhs, t, u, t_next - t, fs[-1])
        t = t_next
        ts.append(t)
        ys.append(u.copy())
        fs.append(rhs(t, u))
        if k % cfg.save_every == 0 or k == n:
            times.append(t)
            states.append(u.copy())
    return Trajectory(times, states, f.var_names)
