"""Critical points, entanglement periods, (t, gamma) sweeps and engine validation."""

from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dynamics import (
    CLOSED_FORMS,
    AtomicInput,
    FullSpaceOracle,
    GlobalState,
    XState,
    block_reduced_series,
    partial_trace_field,
    propagator_analytic,
    rabi_omega,
)
from .entanglement import concurrence, margin, negativity
from .hilbert import AtomBasisLabel, CouplingParams, block_for, build_block_hamiltonian

ENTANGLED_TOL = 1e-6
ZERO_TOL = 1e-9
VALIDATION_TOL = 1e-8
# absolute rounding level of the concurrence margin, used to bound zero-touch locations
SIGNAL_NOISE = 1e-15
THREADS_ENV = "STE_ENTANGLE_THREADS"

# Known inconsistencies between the closed-form literature statements and
# what the engines compute; surfaced in reports and run manifests.
DISCREPANCIES = {
    "theta-denominator": {
        "summary": "propagator factor Theta must be (cos(Omega t) - 1) / Omega**2 for dimensionless "
        "entries; the (cos(Omega t) - 1) / Omega form does not reproduce the exponential",
    },
    "trace-over-fock-n": {
        "summary": "reduced state is sum_m <m|U|n> rho_a(0) <n|U^dagger|m> with the field starting in |n>; "
        "a vacuum-projected form would drop the n dependence of A-E",
    },
    "period-coupling-factor": {
        "summary": "periods quoted as 2 pi / xi and pi / xi omit the overall coupling g = g_drv + g_stm; "
        "measured periods are 2 pi / (g xi) and pi / (g xi)",
    },
    "equal-coupling-period": {
        "summary": "at g_stm = g_drv the EE concurrence is sin^2(g xi t) with g = 2 g_drv, period pi / (g xi); "
        "the quoted sin^2(sqrt(2(n+1)) t) and its periods are inconsistent with each other",
        "reference_period": {"0": math.pi / 2, "1": math.sqrt(2) * math.pi / 4},
    },
}


class Engine(str, enum.Enum):
    CLOSED_FORM = "closed-form"
    BLOCK = "block"
    ORACLE = "oracle"


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    return min(4, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# engine dispatch
# ---------------------------------------------------------------------------


def reduced_series(
    initial: AtomicInput,
    params: CouplingParams,
    n: int,
    t,
    engine: Engine | str = Engine.CLOSED_FORM,
    cutoff: int | None = None,
) -> np.ndarray:
    """Reduced two-atom states ``(len(t), 4, 4)`` from the selected engine."""
    engine = Engine(engine)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if engine is Engine.CLOSED_FORM:
        try:
            label = AtomBasisLabel.parse(initial)
        except (TypeError, ValueError):
            raise ValueError("the closed-form engine needs a product initial state (ee, eg, ge or gg)") from None
        return CLOSED_FORMS[label](params, n, t).to_matrix()
    if engine is Engine.BLOCK:
        return block_reduced_series(params, initial, n, t)
    if cutoff is None:
        cutoff = n + 6
    if cutoff < n + 4:
        raise ValueError(f"cutoff {cutoff} too small for photon number {n}; need cutoff >= n + 4")
    return FullSpaceOracle(params, cutoff).reduced_series(initial, n, t)


def concurrence_series(initial, params, n, t, engine=Engine.CLOSED_FORM, cutoff=None) -> np.ndarray:
    return concurrence(reduced_series(initial, params, n, t, engine, cutoff))


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalPoint:
    case: str
    n: int
    gamma_crit: float
    g_stm_crit: float  # in units of g_drv


def critical_point(case: str, n: int) -> CriticalPoint:
    """Coupling asymmetry at which entanglement generation switches.

    EE: ``gamma0 = sqrt((n+1)/(n+2))``, entanglement only for ``gamma < gamma0``.
    EG: ``gamma0 = sqrt(n/(n+1))``, entanglement for every ``gamma != gamma0``.
    """
    if n < 0:
        raise ValueError(f"photon number must be non-negative, got {n}")
    label = AtomBasisLabel.parse(case)
    if label is AtomBasisLabel.EE:
        lo, hi = n + 1, n + 2
    elif label in (AtomBasisLabel.EG, AtomBasisLabel.GE):
        lo, hi = n, n + 1
    else:
        raise ValueError("critical points are defined for the ee and eg cases only")
    gamma = math.sqrt(lo / hi)
    # (sqrt(hi) - sqrt(lo))**2 written without the cancellation
    g_stm = 1.0 / (math.sqrt(hi) + math.sqrt(lo)) ** 2
    return CriticalPoint(label.name.lower(), n, gamma, g_stm)


def state_period(params: CouplingParams, initial: AtomBasisLabel | str, n: int) -> float | None:
    """Recurrence time ``2 pi / omega_min`` of the block holding ``initial (x) |n>``.

    ``None`` when the block is stationary.
    """
    freqs = _bohr_frequencies(params, initial, n)
    return None if freqs.size == 0 else 2 * math.pi / freqs[0]


def _bohr_frequencies(params, initial, n) -> np.ndarray:
    label = AtomBasisLabel.parse(initial)
    block = block_for(label, n)
    w, v = np.linalg.eigh(build_block_hamiltonian(params, block))
    weights = v[block.index(label, n)] ** 2
    e = w[weights > 1e-14]
    diffs = np.abs(np.subtract.outer(e, e)).ravel()
    return np.sort(diffs[diffs > 1e-12 * max(1.0, params.g)])


def max_concurrence_over_period(
    case: str,
    params: CouplingParams,
    n: int,
    engine: Engine | str = Engine.ORACLE,
    samples: int = 4001,
) -> float:
    """Largest concurrence on a dense grid spanning one recurrence of the state."""
    period = state_period(params, case, n)
    if period is None:
        return float(concurrence_series(case, params, n, [0.0], engine)[0])
    t = np.linspace(0.0, period, samples)
    return float(np.max(concurrence_series(case, params, n, t, engine)))


def verify_critical(
    case: str,
    n: int,
    engine: Engine | str = Engine.ORACLE,
    delta: float = 0.02,
    g_drv: float = 1.0,
) -> bool:
    """Check entanglement switches where ``critical_point`` says it does.

    EE: entangled just below ``gamma0``, not at or above it. EG: entangled
    on both sides of ``gamma0``, not at it.
    """
    crit = critical_point(case, n)
    label = AtomBasisLabel.parse(case)

    def peak(gamma):
        return max_concurrence_over_period(label, CouplingParams.from_gamma(gamma, g_drv), n, engine)

    at = peak(crit.gamma_crit) < ZERO_TOL
    below = peak(crit.gamma_crit - delta) > ENTANGLED_TOL
    above_gamma = min(crit.gamma_crit + delta, 1.0)
    if label is AtomBasisLabel.EE:
        above = peak(above_gamma) < ZERO_TOL
    else:
        above = above_gamma == crit.gamma_crit or peak(above_gamma) > ENTANGLED_TOL
    return at and below and above


# ---------------------------------------------------------------------------
# periods
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodEstimate:
    case: str
    n: int
    gamma: float
    period: float | None
    method: str
    reason: str | None = None
    notes: tuple[str, ...] = ()


def period(
    case: str,
    params: CouplingParams,
    n: int,
    method: str = "zero-crossing",
    engine: Engine | str = Engine.ORACLE,
) -> PeriodEstimate:
    """Period of the concurrence signal.

    ``analytic-xi`` returns ``2 pi / (g xi)`` for EE (``pi / (g xi)`` at
    ``gamma = 0``, where the signal is a pure ``sin^2``) and ``pi / (g xi)``
    for EG/GE. ``zero-crossing`` measures the spacing of repeating lobes of
    the concurrence computed by ``engine``. When there is nothing to measure
    the estimate carries ``period=None`` and a reason.
    """
    label = AtomBasisLabel.parse(case)
    gamma = params.gamma
    notes = ["period-coupling-factor"]
    if label is AtomBasisLabel.EE and gamma == 0.0:
        notes.append("equal-coupling-period")

    def estimate(value, reason=None):
        return PeriodEstimate(label.name.lower(), n, gamma, value, method, reason, tuple(notes))

    if method == "analytic-xi":
        if label is AtomBasisLabel.EE:
            if abs(gamma) >= critical_point(label, n).gamma_crit:
                return estimate(None, "no entanglement")
            omega = float(rabi_omega(params, n + 1))
            return estimate((math.pi if gamma == 0.0 else 2 * math.pi) / omega)
        if label in (AtomBasisLabel.EG, AtomBasisLabel.GE):
            omega = float(rabi_omega(params, n))
            if omega == 0.0:
                return estimate(None, "frozen dynamics")
            if abs(gamma - critical_point(label, n).gamma_crit) <= 1e-12:
                return estimate(None, "no entanglement")
            return estimate(math.pi / omega)
        raise ValueError("no closed-form period for the gg case; use method='zero-crossing'")
    if method != "zero-crossing":
        raise ValueError(f"unknown period method {method!r}")

    freqs = _bohr_frequencies(params, label, n)
    if freqs.size == 0:
        return estimate(None, "frozen dynamics")
    recurrence = 2 * math.pi / freqs[0]
    engine = Engine(engine)
    cutoff = n + 6
    if engine is Engine.ORACLE:
        oracle = FullSpaceOracle(params, cutoff)
        psi0 = oracle.product_state(label, n)

        def signal(t):
            return margin(oracle.reduce(oracle.evolve(psi0, t)))

    else:

        def signal(t):
            return margin(reduced_series(label, params, n, t, engine))

    value = measure_period(signal, 4 * recurrence, samples=1601)
    if value is None:
        return estimate(None, "no entanglement")
    return estimate(value)


def measure_period(signal: Callable, span: float, samples: int = 1601, rtol: float = 1e-7) -> float | None:
    """Repeat time of the positive lobes of ``signal`` over ``[0, span]``.

    ``signal`` maps a time array to the unclamped concurrence margin.
    Lobe starts are located to near machine precision: sign changes by
    Brent root finding, tangential zeros (the margin touching zero from
    above) by bounded minimization. The period is the smallest shift that
    maps the sequence of gaps between lobe starts onto itself.
    """
    t = np.linspace(0.0, span, samples)
    f = np.asarray(signal(t), dtype=float)
    if f.max() <= ZERO_TOL:
        return None

    def scalar(x):
        return float(np.asarray(signal(np.array([x])))[0])

    def root(a, b):
        fa, fb = scalar(a), scalar(b)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        return brentq(scalar, a, b, xtol=1e-15 * span, rtol=1e-15)

    dt = t[1] - t[0]

    def touch(a, b):
        """Location of a grazing zero and how well rounding noise lets us pin it down."""
        res = minimize_scalar(scalar, bounds=(a, b), method="bounded", options={"xatol": 1e-14 * span})
        if res.fun < -SIGNAL_NOISE:
            # a short zero stretch fell between samples; the lobe restarts at its right edge
            return root(res.x, b), 0.0
        x = float(res.x)
        curvature = (scalar(x - dt) + scalar(x + dt) - 2 * res.fun) / (2 * dt * dt)
        return x, math.sqrt(SIGNAL_NOISE / curvature) if curvature > 0 else dt

    starts = []
    positive = f > ZERO_TOL
    for i in range(samples - 1):
        if not positive[i] and positive[i + 1]:
            if f[i] == 0.0:
                starts.append((float(t[i]), 0.0))
            elif f[i] < 0.0 and (i == 0 or f[i - 1] < 0.0):
                starts.append((root(t[i], t[i + 1]), 0.0))
            else:
                # the margin only grazes zero here; find where it touches
                starts.append(touch(t[max(i - 1, 0)], t[i + 1]))
    for i in range(1, samples - 1):
        if positive[i - 1] and positive[i] and positive[i + 1] and f[i] <= f[i - 1] and f[i] <= f[i + 1]:
            res = minimize_scalar(scalar, bounds=(t[i - 1], t[i + 1]), method="bounded",
                                  options={"xatol": 1e-14 * span})
            if res.fun <= ZERO_TOL:
                starts.append(touch(t[i - 1], t[i + 1]))
    if len(starts) < 3:
        return None
    starts.sort()
    where = np.array([s[0] for s in starts])
    slack = np.array([s[1] for s in starts])
    gaps = np.diff(where)
    # a gap is uncertain by the slack of both of its ends
    gap_slack = slack[1:] + slack[:-1]
    for shift in range(1, gaps.size // 2 + 1):
        tol = rtol * span + 2 * (gap_slack[shift:] + gap_slack[:-shift])
        if np.all(np.abs(gaps[shift:] - gaps[:-shift]) <= tol):
            # least-squares slope through the repeats of the first lobe start
            repeats = where[::shift]
            if repeats.size == 2:
                return float(repeats[1] - repeats[0])
            return float(np.polyfit(np.arange(repeats.size), repeats, 1)[0])
    return None


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    case: str
    n: int
    g_drv: float
    gamma_grid: np.ndarray
    t_grid: np.ndarray
    concurrence: np.ndarray  # shape (len(gamma_grid), len(t_grid))
    negativity: np.ndarray
    engine: str

    def rows(self):
        """Long-format ``(gamma, t, concurrence, negativity)`` rows, gamma-major."""
        for i, gamma in enumerate(self.gamma_grid):
            for j, t in enumerate(self.t_grid):
                yield float(gamma), float(t), float(self.concurrence[i, j]), float(self.negativity[i, j])


def _case_tag(initial: AtomicInput) -> str:
    try:
        return AtomBasisLabel.parse(initial).name.lower()
    except (TypeError, ValueError):
        return "custom"


def sweep(
    initial: AtomicInput,
    n: int,
    gamma_grid: Sequence[float],
    t_grid: Sequence[float],
    engine: Engine | str = Engine.CLOSED_FORM,
    g_drv: float = 1.0,
    cutoff: int | None = None,
    threads: int | None = None,
) -> SweepResult:
    """Concurrence and negativity on a (gamma, t) grid at fixed ``n`` and ``g_drv``."""
    gammas = np.asarray(gamma_grid, dtype=float)
    times = np.asarray(t_grid, dtype=float)
    if gammas.size == 0 or times.size == 0:
        raise ValueError("sweep grids must be nonempty")
    for name, grid in (("gamma", gammas), ("t", times)):
        if np.any(np.diff(grid) <= 0):
            raise ValueError(f"{name} grid must be strictly ascending")
    engine = Engine(engine)

    def row(gamma):
        rho = reduced_series(initial, CouplingParams.from_gamma(float(gamma), g_drv), n, times, engine, cutoff)
        return concurrence(rho), negativity(rho)

    workers = threads if threads is not None else default_threads()
    if workers > 1 and gammas.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(row, gammas))
    else:
        results = [row(g) for g in gammas]
    conc = np.array([r[0] for r in results]).reshape(gammas.size, times.size)
    neg = np.array([r[1] for r in results]).reshape(gammas.size, times.size)
    return SweepResult(_case_tag(initial), n, g_drv, gammas, times, conc, neg, engine.value)


@dataclass(frozen=True)
class LumbarRegion:
    n: int
    cells: tuple[tuple[float, float], ...]
    note: str | None = None


def lumbar_region(
    n: int,
    gamma_grid: Sequence[float],
    t_grid: Sequence[float],
    engine: Engine | str = Engine.ORACLE,
    g_drv: float = 1.0,
) -> LumbarRegion:
    """(gamma, t) cells where GG-initialized atoms are entangled only because of STE.

    A cell qualifies when its concurrence exceeds ``ENTANGLED_TOL`` while the
    no-STE baseline (``gamma = 1``) at the same time stays below ``ZERO_TOL``.
    """
    if n < 0:
        raise ValueError(f"photon number must be non-negative, got {n}")
    times = np.asarray(t_grid, dtype=float)
    result = sweep(AtomBasisLabel.GG, n, gamma_grid, times, engine, g_drv, threads=1)
    baseline = concurrence_series(AtomBasisLabel.GG, CouplingParams(g_drv, 0.0), n, times, engine)
    mask = (result.concurrence > ENTANGLED_TOL) & (baseline[None, :] < ZERO_TOL)
    cells = tuple((float(result.gamma_grid[i]), float(times[j])) for i, j in zip(*np.nonzero(mask)))
    note = None
    if n < 2:
        note = "degenerate block: fewer than four states are reachable from |GG, n> for n < 2"
    return LumbarRegion(n, cells, note)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    cases: tuple[str, ...]
    n: tuple[int, ...]
    gamma: tuple[float, ...]
    t_min: float
    t_max: float
    t_points: int
    g_drv: float = 1.0
    version: int = 1

    @classmethod
    def standard(cls) -> "GridSpec":
        text = resources.files("ste_entangle").joinpath("data/standard_grid.json").read_text()
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_dict(cls, data: Mapping) -> "GridSpec":
        return cls(
            cases=tuple(data["cases"]),
            n=tuple(int(v) for v in data["n"]),
            gamma=tuple(float(v) for v in data["gamma"]),
            t_min=float(data["t_min"]),
            t_max=float(data["t_max"]),
            t_points=int(data["t_points"]),
            g_drv=float(data.get("g_drv", 1.0)),
            version=int(data.get("version", 1)),
        )

    def t_grid(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.t_points)

    def to_dict(self) -> dict:
        return asdict(self) | {"cases": list(self.cases), "n": list(self.n), "gamma": list(self.gamma)}


@dataclass
class ValidationReport:
    grid: dict
    tolerance: float
    max_deviation: dict  # A..E -> max |closed form - oracle|
    concurrence_deviation: float
    propagator_deviation: float
    outliers: list = field(default_factory=list)
    notes: tuple[str, ...] = ("theta-denominator", "trace-over-fock-n")

    @property
    def passed(self) -> bool:
        worst = max([*self.max_deviation.values(), self.concurrence_deviation, self.propagator_deviation])
        return worst < self.tolerance

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "concurrence_deviation": self.concurrence_deviation,
            "propagator_deviation": self.propagator_deviation,
            "outliers": self.outliers,
            "notes": {key: DISCREPANCIES[key]["summary"] for key in self.notes},
        }


def _propagated_states(params: CouplingParams, label: AtomBasisLabel, n: int, times) -> np.ndarray:
    block = block_for(label, n)
    col = block.index(label, n)
    out = np.empty((len(times), 4, 4), dtype=complex)
    for k, t in enumerate(times):
        amps = propagator_analytic(params, block, t)[:, col]
        out[k] = partial_trace_field([GlobalState(block, amps / np.linalg.norm(amps))])
    return out


def validate_analytic(
    grid: GridSpec | None = None,
    closed_forms: Mapping[AtomBasisLabel, Callable[..., XState]] | None = None,
    tol: float = VALIDATION_TOL,
    include_propagator: bool = True,
) -> ValidationReport:
    """Compare the closed forms and the closed-form propagator against the oracle."""
    grid = grid or GridSpec.standard()
    forms = dict(CLOSED_FORMS)
    if closed_forms:
        forms.update(closed_forms)
    times = grid.t_grid()
    worst = dict.fromkeys("ABCDE", 0.0)
    worst_conc = 0.0
    worst_prop = 0.0
    outliers = []
    for case in grid.cases:
        label = AtomBasisLabel.parse(case)
        for n in grid.n:
            for gamma in grid.gamma:
                params = CouplingParams.from_gamma(gamma, grid.g_drv)
                rho = FullSpaceOracle(params, n + 6).reduced_series(label, n, times)
                exact = XState.from_matrix(rho)
                approx = forms[label](params, n, times)
                where = {"case": case, "n": n, "gamma": gamma}
                for key, a, b in zip("ABCDE", approx.astuple(), exact.astuple()):
                    dev = np.abs(np.asarray(a) - np.asarray(b))
                    worst[key] = max(worst[key], float(dev.max()))
                    if dev.max() >= tol:
                        k = int(dev.argmax())
                        outliers.append(where | {"t": float(times[k]), "quantity": key, "deviation": float(dev[k])})
                dev = np.abs(concurrence(approx.to_matrix()) - concurrence(rho))
                worst_conc = max(worst_conc, float(dev.max()))
                if dev.max() >= tol:
                    k = int(dev.argmax())
                    outliers.append(where | {"t": float(times[k]), "quantity": "concurrence", "deviation": float(dev[k])})
                if include_propagator:
                    dev = np.abs(_propagated_states(params, label, n, times) - rho).max(axis=(1, 2))
                    worst_prop = max(worst_prop, float(dev.max()))
                    if dev.max() >= tol:
                        k = int(dev.argmax())
                        outliers.append(where | {"t": float(times[k]), "quantity": "propagator", "deviation": float(dev[k])})
    outliers.sort(key=lambda o: -o["deviation"])
    return ValidationReport(grid.to_dict(), tol, worst, worst_conc, worst_prop, outliers)
