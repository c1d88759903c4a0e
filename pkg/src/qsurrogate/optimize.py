"""Derivative-free COBYLA (unconstrained) and ADAM, both from scratch.

COBYLA keeps a simplex of ``n + 1`` interpolation points, whose values
define a linear model of the objective. Trial steps minimise that model
inside a ball of radius ``delta``; ``delta`` grows or shrinks with the
ratio of actual to predicted reduction but never drops below the
resolution ``rho``. When steps stop paying off and the simplex is well
shaped, ``rho`` is halved, down to ``rhoend``. Badly shaped simplices are
repaired by geometry steps that replace one vertex.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ObjectiveError


class Status(str, enum.Enum):
    CONVERGED = "converged"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass
class OptResult:
    best_point: np.ndarray
    best_value: float
    n_evaluations: int
    history: list[tuple[int, float]] = field(default_factory=list)
    status: Status = Status.CONVERGED
    final_point: np.ndarray | None = None

    def running_best(self) -> np.ndarray:
        return np.minimum.accumulate([v for _, v in self.history])


class _BudgetExhausted(Exception):
    pass


class _Evaluator:
    """Counts evaluations, tracks the best point and enforces the budget."""

    def __init__(self, fun, max_evals):
        self.fun = fun
        self.max_evals = max_evals
        self.n = 0
        self.history: list[tuple[int, float]] = []
        self.best_x = None
        self.best_f = math.inf

    def __call__(self, x: np.ndarray) -> float:
        if self.n >= self.max_evals:
            raise _BudgetExhausted
        f = float(self.fun(x.copy()))
        self.n += 1
        if not math.isfinite(f):
            raise ObjectiveError(f"objective returned {f} at {x.tolist()}", point=x.copy())
        self.history.append((self.n, f))
        if f < self.best_f:
            self.best_f, self.best_x = f, x.copy()
        return f


# simplex acceptability and geometry-step factors
_ALPHA = 0.25
_BETA = 2.1
_GAMMA = 0.5
_DELTA = 1.1
# trust-radius update thresholds and factors
_ETA1 = 0.1
_ETA2 = 0.7
_SHRINK = 0.5
_EXPAND = 2.0


def cobyla_minimize(objective: Callable[[np.ndarray], float], x0, rhobeg: float = 1.0,
                    rhoend: float = 1e-4, max_evals: int = 1000) -> OptResult:
    """Minimise ``objective`` from ``x0`` without derivatives.

    Stops with ``Status.CONVERGED`` once ``rho`` reaches ``rhoend`` and no
    further progress is possible, or ``Status.BUDGET_EXHAUSTED`` after
    ``max_evals`` objective calls. The best point seen is returned.
    """
    x0 = np.array(x0, dtype=np.float64).reshape(-1)
    n = x0.size
    if not (rhobeg > 0 and rhoend > 0 and rhoend < rhobeg):
        raise ValueError(f"need 0 < rhoend < rhobeg, got rhobeg={rhobeg}, rhoend={rhoend}")
    if max_evals < n + 2:
        raise ValueError(f"max_evals must be at least n + 2 = {n + 2}, got {max_evals}")

    ev = _Evaluator(objective, max_evals)
    rho = delta = float(rhobeg)
    # columns of sim are vertex displacements from the best vertex xb; simi = inv(sim)
    sim = np.eye(n) * rho
    simi = np.eye(n) / rho
    xb = x0.copy()
    status = Status.CONVERGED

    try:
        fb = ev(xb)
        fv = np.empty(n)
        for j in range(n):
            x = xb.copy()
            x[j] += rho
            f = ev(x)
            if f < fb:
                # the new point becomes the best vertex; the old best sits at -rho e_j
                fv[j], fb = fb, f
                xb = x
                sim[j, : j + 1] = -rho
                simi[j, : j + 1] = -simi[: j + 1, : j + 1].sum(axis=0)
            else:
                fv[j] = f

        while True:
            g = simi.T @ (fv - fb)
            gnorm = float(np.linalg.norm(g))
            bad_step = True
            dnorm = 0.0
            if gnorm > 0.0:
                d = -delta * g / gnorm
                dnorm = delta
                prerem = delta * gnorm
                f = ev(xb + d)
                actrem = fb - f
                ratio = actrem / prerem
                if ratio <= _ETA1:
                    delta = _SHRINK * dnorm
                elif ratio <= _ETA2:
                    delta = max(_SHRINK * delta, dnorm)
                else:
                    delta = max(_SHRINK * delta, _EXPAND * dnorm)
                if delta <= 1.5 * rho:
                    delta = rho

                # vertex to drop: large barycentric weight, far from the kept best
                sigbar = np.abs(simi @ d)
                if actrem > 0:
                    dist = np.sqrt(((sim - d[:, None]) ** 2).sum(axis=0))
                else:
                    dist = np.sqrt((sim ** 2).sum(axis=0))
                weight = sigbar * np.maximum(1.0, dist / (_DELTA * delta)) ** 2
                jdrop = int(np.argmax(weight))
                if actrem > 0 or weight[jdrop] > 1.0:
                    xb, fb = _replace_vertex(sim, simi, fv, xb, fb, jdrop, d, f)
                bad_step = ratio <= _ETA1
            else:
                delta = rho

            if not bad_step:
                continue
            vsig = 1.0 / np.sqrt(np.einsum("ji,ji->j", simi, simi))
            veta = np.sqrt(np.einsum("ij,ij->j", sim, sim))
            too_long = veta > _BETA * delta
            if np.any(too_long) or np.any(vsig < _ALPHA * delta):
                jdrop = int(np.argmax(veta)) if np.any(too_long) else int(np.argmin(vsig))
                d = _GAMMA * delta * vsig[jdrop] * simi[jdrop]
                if g @ d > 0:
                    d = -d
                f = ev(xb + d)
                xb, fb = _replace_vertex(sim, simi, fv, xb, fb, jdrop, d, f)
            elif max(delta, dnorm) <= rho:
                if rho <= rhoend:
                    break
                rho = _reduce_rho(rho, rhoend)
                delta = max(_SHRINK * delta, rho)
    except _BudgetExhausted:
        status = Status.BUDGET_EXHAUSTED

    return OptResult(best_point=ev.best_x, best_value=ev.best_f, n_evaluations=ev.n,
                     history=ev.history, status=status, final_point=xb)


def _reduce_rho(rho: float, rhoend: float) -> float:
    rho *= 0.5
    return rhoend if rho <= 1.5 * rhoend else rho


def _replace_vertex(sim, simi, fv, xb, fb, jdrop, d, f):
    """Put ``xb + d`` (value ``f``) in place of vertex ``jdrop``; swap with xb if better."""
    sim[:, jdrop] = d
    pivot = simi[jdrop] / (simi[jdrop] @ d)
    proj = simi @ d
    simi -= np.outer(proj, pivot)
    simi[jdrop] = pivot
    fv[jdrop] = f
    if f < fb:
        # re-centre on the new best vertex
        sim -= d[:, None]
        sim[:, jdrop] = -d
        simi[jdrop] = -simi.sum(axis=0)
        fv[jdrop] = fb
        return xb + d, f
    return xb, fb


def adam_minimize(gradient: Callable[[np.ndarray], np.ndarray],
                  objective: Callable[[np.ndarray], float], x0,
                  learning_rate: float = 0.01, beta1: float = 0.9, beta2: float = 0.999,
                  epsilon: float = 1e-8, n_steps: int = 1000) -> OptResult:
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise ValueError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
    x = np.array(x0, dtype=np.float64).reshape(-1)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    history = []
    best_x, best_f = x.copy(), math.inf
    n_eval = 0

    def record(step, point):
        nonlocal best_x, best_f, n_eval
        f = float(objective(point))
        n_eval += 1
        if not math.isfinite(f):
            raise ObjectiveError(f"objective returned {f} at step {step}", point=point.copy())
        history.append((step, f))
        if f < best_f:
            best_x, best_f = point.copy(), f

    record(0, x)
    for t in range(1, n_steps + 1):
        grad = np.asarray(gradient(x), dtype=np.float64)
        if not np.all(np.isfinite(grad)):
            raise ObjectiveError(f"non-finite gradient at step {t}", point=x.copy())
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        x = x - learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)
        record(t, x)
    return OptResult(best_point=best_x, best_value=best_f, n_evaluations=n_eval,
                     history=history, status=Status.BUDGET_EXHAUSTED, final_point=x)
