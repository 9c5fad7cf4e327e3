"""Calibration and sensitivity analysis of mass-action models.

Calibration minimises the sum of squared residuals against observed series
with a bounded Nelder-Mead search.  Sensitivities are central finite
differences of a trajectory integral with respect to each transition rate.
A fixed-step ``rk4`` solver config keeps the outcome a smooth function of
the rates, which finite differences rely on.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .dynamics import mass_action
from .errors import OpetriError, SolverError
from .petri_core import PetriNet, to_dot
from .solve import SolveConfig, Trajectory, solve_ode

__all__ = [
    "Dataset",
    "Bounded",
    "FitSpec",
    "OutcomeSpec",
    "Calibration",
    "NelderMeadResult",
    "simulate",
    "nelder_mead",
    "calibrate",
    "outcome",
    "sensitivity",
    "sensitivity_heatmap",
    "heat_color",
]

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class Dataset:
    """Observed series on a common time grid; NaN marks a missing value."""

    times: np.ndarray
    observations: Mapping[str, np.ndarray]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        obs = {k: np.asarray(v, dtype=float) for k, v in self.observations.items()}
        if np.any(np.diff(times) <= 0):
            raise ValueError("dataset times must be strictly increasing")
        for k, v in obs.items():
            if v.shape != times.shape:
                raise ValueError(f"series {k!r} has {v.size} values for {times.size} times")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "observations", obs)

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        header = [h.strip() for h in rows[0]]
        if not header or header[0] != "t":
            raise ValueError("dataset CSV must start with a 't' column")

        def num(x):
            x = x.strip()
            return float(x) if x else math.nan

        data = [[num(x) for x in r] + [math.nan] * (len(header) - len(r)) for r in rows[1:]]
        arr = np.array(data, dtype=float).reshape(len(data), len(header))
        return cls(arr[:, 0], {name: arr[:, k] for k, name in enumerate(header) if k})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.observations)
        w.writerow(["t", *names])
        for i, t in enumerate(self.times):
            vals = [self.observations[n][i] for n in names]
            w.writerow([repr(float(t)), *("" if math.isnan(v) else repr(float(v)) for v in vals)])
        return buf.getvalue()


@dataclass(frozen=True)
class Bounded:
    guess: float
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class FitSpec:
    """Which rates and initial values to estimate.

    Every transition must be either free or fixed.  Initial values not
    listed in ``free_u0`` come from the template passed to :func:`calibrate`.
    """

    free: Mapping[str, Bounded]
    fixed: Mapping[str, float] = field(default_factory=dict)
    free_u0: Mapping[str, Bounded] = field(default_factory=dict)
    max_evals: int = 2000
    f_tol: float = 1e-14
    x_tol: float = 1e-9

    def violations(self, net: PetriNet) -> list[str]:
        out = []
        names = set(net.transition_names)
        both = set(self.free) & set(self.fixed)
        if both:
            out.append(f"transitions both free and fixed: {sorted(both)}")
        missing = names - set(self.free) - set(self.fixed)
        if missing:
            out.append(f"transitions neither free nor fixed: {sorted(missing)}")
        unknown = (set(self.free) | set(self.fixed)) - names
        if unknown:
            out.append(f"unknown transitions: {sorted(unknown)}")
        unknown = set(self.free_u0) - set(net.species_names)
        if unknown:
            out.append(f"unknown species: {sorted(unknown)}")
        for name, b in [*self.free.items(), *self.free_u0.items()]:
            if not b.lower <= b.guess <= b.upper:
                out.append(f"{name}: guess {b.guess} outside [{b.lower}, {b.upper}]")
        for name, b in self.free.items():
            if b.lower < 0:
                out.append(f"{name}: rate lower bound {b.lower} is negative")
        for name, v in self.fixed.items():
            if not v >= 0:
                out.append(f"{name}: fixed rate {v} is negative")
        return out


@dataclass(frozen=True)
class OutcomeSpec:
    """Time integral of the summed populations of ``species`` over [t0, t1]."""

    species: tuple[str, ...]
    t0: float
    t1: float

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        if not self.species:
            raise ValueError("outcome needs at least one species")
        if not self.t1 > self.t0:
            raise ValueError("outcome horizon must have t1 > t0")


def simulate(net: PetriNet, u0, cfg: SolveConfig) -> Trajectory:
    if isinstance(u0, Mapping):
        u0 = [u0[s] for s in net.species_names]
    return solve_ode(mass_action(net), u0, cfg)


# -- Nelder-Mead ----------------------------------------------------------------


def _reflect(x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Fold each coordinate back into its interval by mirror reflection."""
    x = x.copy()
    for i in range(x.size):
        lo, hi = lower[i], upper[i]
        if math.isfinite(lo) and math.isfinite(hi):
            width = hi - lo
            if width == 0:
                x[i] = lo
                continue
            y = (x[i] - lo) % (2 * width)
            x[i] = lo + (y if y <= width else 2 * width - y)
        elif math.isfinite(lo):
            x[i] = lo + abs(x[i] - lo)
        elif math.isfinite(hi):
            x[i] = hi - abs(hi - x[i])
    return x


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool
    budget_exhausted: bool
    # best loss seen after each evaluation
    history: list[float]
    failures: int = 0


def nelder_mead(
    fun: Callable[[np.ndarray], float],
    x0: Sequence[float],
    lower: Sequence[float],
    upper: Sequence[float],
    *,
    max_evals: int = 2000,
    f_tol: float = 1e-14,
    x_tol: float = 1e-9,
    seed: int = 0,
    initial_step: float = 0.05,
) -> NelderMeadResult:
    """Minimise ``fun`` inside box bounds with the Nelder-Mead simplex.

    Candidate points leaving the box are mirrored back into it.  Vertices
    with equal losses are ordered by a random key drawn from ``seed``;
    nothing else is random.  Non-finite losses count as failures and rank
    last.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x0 = _reflect(np.asarray(x0, dtype=float), lower, upper)
    n = x0.size
    rng = np.random.default_rng(seed)
    history: list[float] = []
    best = math.inf
    failures = 0

    def f(x):
        nonlocal best, failures
        val = float(fun(x))
        if not math.isfinite(val):
            failures += 1
            val = math.inf
        best = min(best, val)
        history.append(best)
        return val

    def done():
        return len(history) >= max_evals

    simplex = [x0]
    for i in range(n):
        step = np.zeros(n)
        step[i] = initial_step * x0[i] if x0[i] != 0 else 0.00025
        simplex.append(_reflect(x0 + step, lower, upper))
    values = []
    for x in simplex:
        if done():
            break
        values.append(f(x))
    if len(values) < len(simplex):
        k = int(np.argmin(values))
        return NelderMeadResult(simplex[k], values[k], len(history), False, True, history, failures)
    keys = list(rng.random(n + 1))

    converged = False
    while not done():
        order = sorted(range(n + 1), key=lambda k: (values[k], keys[k]))
        simplex = [simplex[k] for k in order]
        values = [values[k] for k in order]
        keys = [keys[k] for k in order]
        if (
            max(abs(v - values[0]) for v in values) <= f_tol
            and max(np.max(np.abs(x - simplex[0])) for x in simplex) <= x_tol
        ):
            converged = True
            break
        if n == 0:
            converged = True
            break

        centroid = np.mean(simplex[:-1], axis=0)
        worst, f_worst = simplex[-1], values[-1]
        xr = _reflect(centroid + (centroid - worst), lower, upper)
        fr = f(xr)
        new = None
        if values[0] <= fr < values[-2]:
            new = (xr, fr)
        elif fr < values[0]:
            if done():
                new = (xr, fr)
            else:
                xe = _reflect(centroid + 2 * (xr - centroid), lower, upper)
                fe = f(xe)
                new = (xe, fe) if fe < fr else (xr, fr)
        elif not done():
            if fr < f_worst:
                xc = _reflect(centroid + 0.5 * (xr - centroid), lower, upper)
                fc = f(xc)
                if fc <= fr:
                    new = (xc, fc)
            else:
                xc = _reflect(centroid + 0.5 * (worst - centroid), lower, upper)
                fc = f(xc)
                if fc < f_worst:
                    new = (xc, fc)
            if new is None:
                for k in range(1, n + 1):
                    if done():
                        break
                    simplex[k] = _reflect(simplex[0] + 0.5 * (simplex[k] - simplex[0]), lower, upper)
                    values[k] = f(simplex[k])
                    keys[k] = rng.random()
                continue
        if new is not None:
            simplex[-1], values[-1] = new
            keys[-1] = rng.random()

    k = min(range(n + 1), key=lambda k: (values[k], keys[k]))
    return NelderMeadResult(
        simplex[k], values[k], len(history), converged, not converged, history, failures
    )


# -- calibration ------------------------------------------------------------------


@dataclass
class Calibration:
    rates: dict[str, float]
    u0: dict[str, float]
    loss: float
    evals: int
    converged: bool
    budget_exhausted: bool
    failures: int
    history: list[float]

    def to_json(self) -> dict:
        return {"rates": self.rates, "u0": self.u0, "loss": self.loss, "evals": self.evals}


def sse(traj: Trajectory, data: Dataset) -> float:
    """Sum of squared residuals at the data times; missing values skipped."""
    pred = traj.at(data.times)
    total = 0.0
    for name, obs in data.observations.items():
        col = pred[:, traj.var_names.index(name)]
        mask = ~np.isnan(obs)
        total += float(np.sum((col[mask] - obs[mask]) ** 2))
    return total


def calibrate(
    net: PetriNet,
    u0_template: Mapping[str, float],
    data: Dataset,
    spec: FitSpec,
    cfg: SolveConfig,
    seed: int = 0,
) -> Calibration:
    """Fit free rates and initial values to ``data``.

    A candidate whose simulation fails scores +inf and is counted in
    ``failures``.  When the evaluation budget runs out the best point so far
    is returned with ``budget_exhausted`` set.
    """
    bad = spec.violations(net)
    unknown = set(data.observations) - set(net.species_names)
    if unknown:
        bad.append(f"observed series are not species: {sorted(unknown)}")
    missing = set(net.species_names) - set(u0_template) - set(spec.free_u0)
    if missing:
        bad.append(f"no initial value for species {sorted(missing)}")
    if data.times.size and (data.times[0] < cfg.t0 or data.times[-1] > cfg.t1):
        bad.append("data times fall outside the solver horizon")
    if bad:
        raise OpetriError("invalid calibration setup: " + "; ".join(bad))

    rate_names = list(spec.free)
    u0_names = list(spec.free_u0)
    bounds = [spec.free[k] for k in rate_names] + [spec.free_u0[k] for k in u0_names]
    x0 = [b.guess for b in bounds]
    lower = [b.lower for b in bounds]
    upper = [b.upper for b in bounds]

    def unpack(x):
        rates = {**{k: float(v) for k, v in spec.fixed.items()}}
        rates.update({k: float(v) for k, v in zip(rate_names, x[: len(rate_names)])})
        u0 = {s: float(u0_template[s]) for s in net.species_names if s in u0_template}
        u0.update({k: float(v) for k, v in zip(u0_names, x[len(rate_names) :])})
        return rates, u0

    def loss(x):
        rates, u0 = unpack(x)
        try:
            with np.errstate(over="raise", invalid="raise"):
                traj = simulate(net.with_rates(rates), u0, cfg)
                return sse(traj, data)
        except (SolverError, FloatingPointError):
            return math.inf

    res = nelder_mead(
        loss, x0, lower, upper, max_evals=spec.max_evals, f_tol=spec.f_tol, x_tol=spec.x_tol, seed=seed
    )
    rates, u0 = unpack(res.x)
    return Calibration(
        {t: rates[t] for t in net.transition_names},
        u0,
        res.fun,
        res.evals,
        res.converged,
        res.budget_exhausted,
        res.failures,
        res.history,
    )


# -- outcomes and sensitivity ---------------------------------------------------------


def outcome(traj: Trajectory, spec: OutcomeSpec) -> float:
    """Trapezoidal integral of the summed selected species over the horizon."""
    try:
        idx = [traj.var_names.index(s) for s in spec.species]
    except ValueError:
        raise OpetriError(f"outcome species {list(spec.species)} not all in {list(traj.var_names)}") from None
    eps = 1e-9 * max(1.0, abs(spec.t1))
    if spec.t0 < traj.times[0] - eps or spec.t1 > traj.times[-1] + eps:
        raise OpetriError("outcome horizon extends beyond the trajectory")
    inside = (traj.times > spec.t0) & (traj.times < spec.t1)
    t = np.concatenate([[spec.t0], traj.times[inside], [spec.t1]])
    y = np.concatenate(
        [
            traj.at(spec.t0)[idx].sum(keepdims=True),
            traj.states[inside][:, idx].sum(axis=1),
            traj.at(spec.t1)[idx].sum(keepdims=True),
        ]
    )
    return float(_trapezoid(y, t))


def sensitivity(
    net: PetriNet,
    rates: Mapping[str, float] | None,
    u0,
    ospec: OutcomeSpec,
    cfg: SolveConfig,
    h: float = 1e-4,
) -> dict[str, float]:
    """d(outcome)/d(rate) for every transition by central differences.

    The perturbation is ``h * rate``, or ``h`` itself for a zero rate.
    """
    base = net.with_rates(rates) if rates else net
    out = {}
    for k, t in enumerate(base.transitions):
        delta = h * t.rate if t.rate > 0 else h
        vals = []
        for sign in (1, -1):
            r = base.rates
            r[k] = t.rate + sign * delta
            vals.append(outcome(simulate(base.with_rates(list(r)), u0, cfg), ospec))
        out[t.name] = (vals[0] - vals[1]) / (2 * delta)
    return out


def heat_color(intensity: float, positive: bool) -> str:
    """Diverging scale: white at 0, pure red (positive) or blue at 1."""
    fade = round(255 * (1 - min(1.0, max(0.0, intensity))))
    r, g, b = (255, fade, fade) if positive else (fade, fade, 255)
    return f"#{r:02x}{g:02x}{b:02x}"


def sensitivity_heatmap(net: PetriNet, sens: Mapping[str, float], log_decades: float = 3.0) -> str:
    """DOT rendering of ``net`` with transitions shaded by sensitivity.

    Intensity is ``|value| / max |value|``; when the nonzero magnitudes span
    ``log_decades`` or more, it is log-scaled onto [0.1, 1] instead so that
    small effects stay visible.
    """
    unknown = set(sens) - set(net.transition_names)
    if unknown:
        raise KeyError(f"sensitivities for unknown transitions: {sorted(unknown)}")
    mags = {k: abs(v) for k, v in sens.items()}
    top = max(mags.values(), default=0.0)
    nonzero = [m for m in mags.values() if m > 0]
    use_log = bool(nonzero) and math.log10(top / min(nonzero)) >= log_decades
    colors = {}
    for name, v in sens.items():
        m = mags[name]
        if m == 0 or top == 0:
            colors[name] = "#ffffff"
            continue
        if use_log:
            lo, hi = math.log10(min(nonzero)), math.log10(top)
            level = 0.1 + 0.9 * (math.log10(m) - lo) / (hi - lo)
        else:
            level = m / top
        colors[name] = heat_color(level, v > 0)
    scale = "log" if use_log else "linear"
    return to_dot(
        net,
        name="sensitivity",
        transition_colors=colors,
        comments=[
            f"legend: red = positive, blue = negative, white = zero; {scale} intensity scale",
            "max |sensitivity| = " + repr(top),
        ],
    )
