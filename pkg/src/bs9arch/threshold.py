"""Threshold search: the crossover ``P_EC(p) = c p``.

A setting has a threshold ``p_th`` when ``P_EC(p) <= c p`` just below it.
The search brackets the sign change of ``g(p) = P_EC(p) - c p`` on a log
scale, resolving the sign at each point with a 95% binomial interval and
quadrupling the trial count while the interval straddles the line.  A
setting whose ``P_EC(0)`` is significantly positive has no threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sim.montecarlo import binomial_interval, estimate_pec
from .sim.settings import Setting

LEVEL = 0.95

# initial brackets; expanded by factors of 4 when they miss the crossover
DEFAULT_BRACKETS = {
    "blackbox": (2e-3, 5e-2),
    "steane": (1e-4, 5e-3),
    "native": (5e-6, 1e-3),
    "native+dd": (5e-6, 1e-3),
}
P_FLOOR = 1e-9


class NoThreshold:
    """Marker for a setting whose ``P_EC(p)`` exceeds ``c p`` down to ``p = 0``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NoThreshold"


NO_THRESHOLD = NoThreshold()


class BracketError(RuntimeError):
    """No sign change of ``P_EC(p) - c p`` was found."""


@dataclass(frozen=True)
class TracePoint:
    """One resolved evaluation of ``P_EC`` during the search.

    ``sign`` is +1 when the interval lies above ``c p``, -1 below, 0 if
    the budget ran out with the interval straddling the line.
    """

    p: float
    estimate: float
    ci: tuple[float, float]
    trials: int
    failures: int
    sign: int

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "estimate": self.estimate,
            "ci": list(self.ci),
            "trials": self.trials,
            "failures": self.failures,
            "sign": self.sign,
        }


@dataclass
class ThresholdResult:
    """Outcome of :func:`find_threshold`.

    ``p_th`` is the bracket midpoint or :data:`NO_THRESHOLD`;
    ``half_width`` is half the final bracket.  ``budget_limited`` is set
    when a point could not be resolved within the trial budget.
    """

    p_th: float | NoThreshold
    half_width: float
    c: int
    trace: list[TracePoint]
    bracket: tuple[float, float] | None = None
    budget_limited: bool = False
    p_ec0: TracePoint | None = None
    config: dict = field(default_factory=dict)

    @property
    def has_threshold(self) -> bool:
        return not isinstance(self.p_th, NoThreshold)

    def to_dict(self) -> dict:
        return {
            "p_th": self.p_th if self.has_threshold else "NoThreshold",
            "half_width": self.half_width,
            "c": self.c,
            "bracket": list(self.bracket) if self.bracket else None,
            "budget_limited": self.budget_limited,
            "ci_level": LEVEL,
            "p_ec0": self.p_ec0.to_dict() if self.p_ec0 else None,
            "trace": [t.to_dict() for t in self.trace],
            "config": self.config,
        }


def biased_gate_requirement(p_th: float, c: float) -> float:
    """Largest failure rate the worst native gates may have: ``c p_th``."""
    if p_th < 0 or c <= 0:
        raise ValueError("need p_th >= 0 and c > 0")
    if c * p_th > 1:
        raise ValueError(f"c * p_th = {c * p_th} exceeds 1")
    return c * p_th


class _Evaluator:
    """Resolves the sign of ``g(p)`` with adaptive trial escalation."""

    def __init__(self, setting, c, trials, budget, seed, n_cycles, workers):
        self.setting = setting
        self.c = c
        self.trials = trials
        self.budget = max(budget, trials)
        self.seed = seed
        self.n_cycles = n_cycles
        self.workers = workers
        self.count = 0
        self.trace: list[TracePoint] = []

    def _seed(self) -> int:
        # one independent stream per evaluated point, fixed by the call order
        self.count += 1
        return int(np.random.SeedSequence([self.seed, self.count]).generate_state(1)[0])

    def __call__(self, p: float, line: float | None = None) -> TracePoint:
        line = self.c * p if line is None else line
        prog = self.setting.program(p)
        seed = self._seed()
        n = self.trials
        while True:
            est = estimate_pec(prog, n, seed, n_cycles=self.n_cycles, workers=self.workers, p=p)
            lo, hi = binomial_interval(est.failures, n, LEVEL)
            sign = 1 if lo > line else -1 if hi < line else 0
            # the p = 0 probe only asks whether P_EC(0) is positive at all
            if sign or n * 4 > self.budget or line == 0:
                break
            n *= 4
        pt = TracePoint(p, est.failures / n, (lo, hi), n, est.failures, sign)
        self.trace.append(pt)
        return pt


def _p_max(setting: Setting) -> float:
    # the biased table multiplies p by up to 4
    return 0.25 if setting.biased else 0.5


def find_threshold(
    setting: Setting | str,
    noise_mode: str | None = None,
    trials_per_point: int = 10_000,
    tol: float | None = None,
    seed: int = 0,
    *,
    budget: int = 10_000_000,
    bracket: tuple[float, float] | None = None,
    n_cycles: int = 2,
    workers: int | None = None,
) -> ThresholdResult:
    """Bisect for the crossover ``P_EC(p_th) = c p_th``.

    Parameters
    ----------
    setting
        A :class:`~bs9arch.sim.settings.Setting` or a setting name.
    noise_mode
        ``"dpn"`` or ``"biased"``; overrides the setting's bias flag.
    trials_per_point
        Trials at the first attempt of every point; quadrupled while the
        95% interval straddles ``c p``, up to ``budget``.
    tol
        Stop when the bracket is narrower than ``tol``; defaults to 2% of
        the lower end.
    seed
        Fixes the whole trace.

    Returns
    -------
    ThresholdResult
        ``p_th`` is :data:`NO_THRESHOLD` when ``P_EC(0)`` is significantly
        positive and no point of a factor-2 grid over the bracket lies
        below the line.

    Raises
    ------
    BracketError
        If ``P_EC(0)`` is consistent with zero and no sign change is found
        between ``1e-9`` and the largest valid ``p``, or neither end of the
        bracket can be resolved within the budget.  A bracket with one
        unresolved end is bisected as far as the budget allows and flagged
        ``budget_limited``.
    """
    if isinstance(setting, str):
        setting = Setting(setting)
    if noise_mode is not None:
        if noise_mode not in ("dpn", "biased"):
            raise ValueError(f"noise_mode must be 'dpn' or 'biased', got {noise_mode!r}")
        setting = Setting(
            setting.name,
            noise_mode == "biased",
            setting.meas_ratio,
            setting.p_idle,
            setting.rounds_per_cycle,
            setting.schedule,
            setting.layout,
        )
    if tol is not None and tol <= 0:
        raise ValueError("tol must be positive")
    if trials_per_point < 1:
        raise ValueError("trials_per_point must be >= 1")
    c = setting.c
    lo, hi = bracket or DEFAULT_BRACKETS[setting.name]
    p_max = _p_max(setting)
    hi = min(hi, p_max)
    if not 0 < lo < hi:
        raise ValueError(f"bad bracket ({lo}, {hi})")
    ev = _Evaluator(setting, c, trials_per_point, budget, seed, n_cycles, workers)
    config = dict(
        setting.to_dict(),
        trials_per_point=trials_per_point,
        budget=budget,
        tol=tol,
        seed=seed,
        n_cycles=n_cycles,
    )

    zero = ev(0.0, line=0.0)
    if zero.sign > 0:
        # P_EC never drops below P_EC(0), so g > 0 for p < P_EC(0) / c; a
        # threshold needs a point above that where the line overtakes P_EC
        g_lo = None
        p = max(lo, zero.ci[0] / c)
        while p < hi:
            g = ev(p)
            if g.sign < 0:
                lo, g_lo = p, g
                break
            p *= 2
        g_hi = ev(hi)
        if g_lo is None:
            if g_hi.sign < 0:
                lo, g_lo = hi, g_hi
                hi = min(hi * 4, p_max)
                g_hi = ev(hi)
            else:
                return ThresholdResult(NO_THRESHOLD, math.inf, c, ev.trace, (lo, hi), False, zero, config)
    else:
        g_lo, g_hi = ev(lo), ev(hi)
    # expand only past resolved points; an unresolved end is as close to
    # the crossing as the budget can tell
    while g_lo.sign > 0 and lo > P_FLOOR:
        hi, g_hi = lo, g_lo
        lo = max(lo / 4, P_FLOOR)
        g_lo = ev(lo)
    while g_hi.sign < 0 and hi < p_max:
        lo, g_lo = hi, g_hi
        hi = min(hi * 4, p_max)
        g_hi = ev(hi)
    if g_lo.sign > 0 or g_hi.sign < 0 or (g_lo.sign == 0 and g_hi.sign == 0):
        raise BracketError(f"no sign change of P_EC(p) - {c}p in [{lo:.3g}, {hi:.3g}]")

    limited = g_lo.sign == 0 or g_hi.sign == 0
    while hi - lo > (tol if tol is not None else 0.02 * lo):
        mid = math.sqrt(lo * hi)
        g = ev(mid)
        if g.sign > 0:
            hi = mid
        elif g.sign < 0:
            lo = mid
        else:
            limited = True
            break
    return ThresholdResult((lo + hi) / 2, (hi - lo) / 2, c, ev.trace, (lo, hi), limited, zero, config)


__all__ = [
    "BracketError",
    "NO_THRESHOLD",
    "NoThreshold",
    "ThresholdResult",
    "TracePoint",
    "biased_gate_requirement",
    "find_threshold",
]
