"""Optimal local operations and parameter sweeps over the realistic protocol."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ConcentrationError, OptimizationError
from .measures import log_negativity
from .protocols import (
    Displacement,
    NoLocalOp,
    ProtocolParams,
    Squeezing,
    run_realistic,
    shared_state,
)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
COARSE_POINTS = 21
BRACKET_TOL = 1e-4

SWEEPABLE = ("lambda", "reflectance", "eta", "nu", "alpha", "beta", "squeezing")


@dataclass(frozen=True)
class SweepGrid:
    """Inclusive arithmetic grid ``start, start + step, ..., stop``."""

    name: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.name not in SWEEPABLE:
            raise ValueError(f"cannot sweep {self.name!r}; choose from {', '.join(SWEEPABLE)}")
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if len(self.samples) < 3:
            raise ValueError(f"grid {self.name} has fewer than 3 samples")

    @property
    def samples(self) -> list[float]:
        count = math.floor((self.stop - self.start) / self.step + 1e-9) + 1
        # rounding keeps 0.1 + 2*0.05 from printing as 0.20000000000000004
        return [round(self.start + i * self.step, 12) for i in range(max(count, 0))]

    @classmethod
    def parse(cls, text: str) -> "SweepGrid":
        """Parse ``name:start:stop:step``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"grid must look like name:start:stop:step, got {text!r}")
        name, *nums = parts
        return cls(name, *(float(x) for x in nums))


@dataclass(frozen=True)
class Optimum:
    value: float
    e_n: float
    p_succ: float
    iterations: int
    bracket: tuple[float, float]
    parameter: str = "alpha"

    @property
    def alpha_opt(self) -> float:
        return self.value


def golden_section_maximize(
    f: Callable[[float], float], lo: float, hi: float, tol: float = BRACKET_TOL
) -> tuple[float, float, int, tuple[float, float]]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x), iterations, final_bracket)``; stops once the bracket
    is narrower than ``tol``.  One new function evaluation per iteration.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    return float(x), float(fx), it, (float(a), float(b))


def _maximize_scalar(
    evaluate: Callable[[float], float], lo: float, hi: float, name: str, tol: float
) -> tuple[float, float, int, tuple[float, float]]:
    grid = np.linspace(lo, hi, COARSE_POINTS)
    values = np.array([evaluate(x) for x in grid])
    if not np.all(np.isfinite(values)) or np.ptp(values) < 1e-12:
        raise OptimizationError(f"E_N is flat in {name} over [{lo}, {hi}]; no maximum to locate")
    # first occurrence of the maximum, i.e. the smallest positive argument on ties
    i = int(np.argmax(values))
    if i == COARSE_POINTS - 1:
        raise OptimizationError(
            f"E_N still rising at {name} = {hi}; the maximum lies outside the search domain"
        )
    a, b = float(grid[max(i - 1, 0)]), float(grid[i + 1])
    x, fx, it, bracket = golden_section_maximize(evaluate, a, b, tol)
    if x - lo < tol:
        raise OptimizationError(f"E_N is maximal at {name} = {lo}: no interior maximum")
    return x, fx, it, bracket


def optimize_displacement(
    params: ProtocolParams, hi: float = 1.0, tol: float = BRACKET_TOL
) -> Optimum:
    """Real ``alpha`` in ``(0, hi]`` maximizing E_N with ``beta = -alpha``.

    A 21-point coarse grid picks the bracket, golden-section search refines it.
    Of the two mirror-image optima the one with ``alpha > 0`` is returned.
    """
    if params.lam <= 0:
        raise OptimizationError("nothing to optimize for a vacuum input (lambda = 0)")

    def e_n(alpha: float) -> float:
        if alpha == 0.0:
            return run_realistic(params.with_op(NoLocalOp())).log_negativity
        return run_realistic(params.displaced(alpha)).log_negativity

    x, fx, it, bracket = _maximize_scalar(e_n, 0.0, hi, "alpha", tol)
    p = run_realistic(params.displaced(x)).success_probability
    return Optimum(x, fx, p, it, bracket, "alpha")


def optimize_squeezing(params: ProtocolParams, hi: float = 1.0, tol: float = BRACKET_TOL) -> Optimum:
    """Local squeezing ``s`` in ``(0, hi]`` (same on both modes) maximizing E_N."""
    if params.lam <= 0:
        raise OptimizationError("nothing to optimize for a vacuum input (lambda = 0)")

    def e_n(s: float) -> float:
        return run_realistic(params.with_op(Squeezing(s) if s else NoLocalOp())).log_negativity

    x, fx, it, bracket = _maximize_scalar(e_n, 0.0, hi, "s", tol)
    p = run_realistic(params.with_op(Squeezing(x))).success_probability
    return Optimum(x, fx, p, it, bracket, "s")


def scaling_exponent(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log P`` against ``log lambda``."""
    if len(points) < 4:
        raise ValueError("need at least 4 points for a scaling fit")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("scaling fit needs strictly positive values")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


# ------------------------------------------------------------------- sweeps


def params_with(base: ProtocolParams, values: dict[str, float]) -> ProtocolParams:
    """Apply swept values (CLI names) to ``base``.

    Sweeping only ``alpha`` keeps ``beta = -alpha`` unless the base already
    fixes ``beta`` through a displacement.
    """
    kw = {}
    for key, field_name in (("lambda", "lam"), ("reflectance", "reflectance"), ("eta", "eta"), ("nu", "nu")):
        if key in values:
            kw[field_name] = values[key]
    op = base.local_op
    if "squeezing" in values:
        op = Squeezing(values["squeezing"])
    elif "alpha" in values or "beta" in values:
        alpha = values.get("alpha", op.alpha if isinstance(op, Displacement) else None)
        beta = values.get("beta", op.beta if isinstance(op, Displacement) else None)
        if alpha is None:
            alpha = -beta
        if beta is None:
            beta = -alpha
        op = Displacement(alpha, beta)
    return replace(base, local_op=op, **kw)


def _fmt_error(exc: Exception) -> str:
    tag = getattr(exc, "tag", type(exc).__name__)
    return f"{tag}: {exc}"


def _row(task) -> dict:
    base, names, values, optimize_alpha = task
    row: dict = dict(zip(names, values))
    try:
        params = params_with(base, row)
        if optimize_alpha:
            plain = params.with_op(NoLocalOp())
            row["E_N_input"] = log_negativity(shared_state(plain)).log_negativity
            sub = run_realistic(plain)
            row["E_N_subtraction"] = sub.log_negativity
            row["P_succ_subtraction"] = sub.success_probability
            opt = optimize_displacement(plain)
            row["E_N"] = opt.e_n
            row["P_succ"] = opt.p_succ
            row["alpha_opt"] = opt.value
        else:
            out = run_realistic(params)
            row["E_N"] = out.log_negativity
            row["P_succ"] = out.success_probability
        row["error"] = ""
    except (ConcentrationError, ValueError) as exc:
        row["error"] = _fmt_error(exc)
    return row


def sweep_columns(names: Sequence[str], optimize_alpha: bool) -> list[str]:
    if optimize_alpha:
        extra = ["E_N_input", "E_N_subtraction", "P_succ_subtraction", "E_N", "P_succ", "alpha_opt"]
    else:
        extra = ["E_N", "P_succ"]
    return [*names, *extra, "error"]


def sweep(
    params: ProtocolParams,
    grids: Sequence[SweepGrid] | SweepGrid,
    optimize_alpha: bool = False,
    workers: int = 1,
) -> list[dict]:
    """Evaluate the protocol on the Cartesian product of ``grids`` (first grid outermost).

    Rows come back in grid order.  A point that trips a guard keeps its row,
    with the failure in the ``error`` column and the numeric fields missing.
    With ``optimize_alpha`` each row also carries the input and
    subtraction-only E_N and the optimal displacement.
    """
    if isinstance(grids, SweepGrid):
        grids = [grids]
    names = [g.name for g in grids]
    if len(set(names)) != len(names):
        raise ValueError(f"parameter swept twice: {names}")
    tasks = [
        (params, names, values, optimize_alpha)
        for values in itertools.product(*(g.samples for g in grids))
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        rows = [_row(t) for t in tasks]
    if rows and all(r["error"] for r in rows):
        raise ConcentrationError(f"every sweep point failed; first error: {rows[0]['error']}")
    return rows
