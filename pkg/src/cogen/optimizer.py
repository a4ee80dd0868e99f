"""Volume-maximizing co-generation of two collision-free solids.

Only the initially colliding ("hat") cells of each body are design
variables. With ``v_b`` the hat measure of body ``b`` and
``h = gamma * v1 - (1 - gamma) * v2``, each iteration takes a projected,
move-limited gradient step on the augmented Lagrangian

    phi = -(v1 + v2) + l1 g21 + l2 g12 + l3 h + c/2 (g21^2 + g12^2 + h^2)

followed by a backtracking check that ``phi`` did not increase. Multipliers
and the penalty are updated every ``outer_every`` iterations.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .collision import PartitionMasks, global_measure, local_field, partition
from .correlation import CorrelationMatrix
from .errors import ConfigurationError, DimensionError, NumericalError
from .geometry import DensityField, threshold

__all__ = [
    "OptimizerConfig",
    "OptimizationState",
    "IterationRecord",
    "CogenerationResult",
    "HatProblem",
    "lagrangian_and_gradient",
    "update_step",
    "multiplier_update",
    "cogenerate",
    "gamma_sweep",
    "repair_thresholded",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimizer settings; ``None`` entries are replaced by scale-aware defaults."""

    gamma: float = 0.5
    max_iters: int = 2000
    delta_tol: Optional[float] = None
    move_limit: float = 0.2
    step: Optional[float] = None
    penalty_init: Optional[float] = None
    penalty_growth: float = 2.0
    penalty_max: Optional[float] = None
    multiplier_init: tuple = (0.0, 0.0, 0.0)
    outer_every: int = 10
    tol_g: Optional[float] = None
    tol_h: float = 0.02
    backtracks: int = 20

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if not 0.0 < self.move_limit <= 1.0:
            raise ConfigurationError("move_limit must lie in (0, 1]")
        if self.penalty_growth <= 1.0:
            raise ConfigurationError("penalty_growth must be > 1")
        if self.penalty_init is not None and self.penalty_init <= 0:
            raise ConfigurationError("penalty_init must be positive")
        if self.step is not None and self.step <= 0:
            raise ConfigurationError("step must be positive")
        if self.outer_every < 1:
            raise ConfigurationError("outer_every must be >= 1")
        if len(self.multiplier_init) != 3:
            raise ConfigurationError("multiplier_init needs three values")

    @classmethod
    def from_dict(cls, overrides: dict, gamma: float) -> "OptimizerConfig":
        values = dict(overrides)
        if "multiplier_init" in values:
            values["multiplier_init"] = tuple(values["multiplier_init"])
        return cls(gamma=gamma, **values)


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    v1: float
    v2: float
    g21: float
    g12: float
    h: float
    delta: float
    stalled: bool = False


@dataclass
class HatProblem:
    """The design problem restricted to hat cells.

    ``A12`` is ``W12`` with rows/cols reduced to the hat cells of body 1 and
    body 2; ``A21`` likewise for ``W21``. Because tilde cells never collide
    with the other body's support, the reduction is exact.
    """

    A12: object
    A21: object
    m1: float
    m2: float
    gamma: float

    def __post_init__(self):
        self.A12 = self.A12.tocsr()
        self.A21 = self.A21.tocsr()
        self.A12T = self.A12.T.tocsr()
        self.A21T = self.A21.T.tocsr()

    @property
    def n1(self) -> int:
        return self.A12.shape[0]

    @property
    def n2(self) -> int:
        return self.A12.shape[1]

    def measures(self, x1, x2) -> dict:
        w12x2 = self.A12 @ x2
        w21x1 = self.A21 @ x1
        v1 = self.m1 * x1.sum()
        v2 = self.m2 * x2.sum()
        return {
            "v1": v1,
            "v2": v2,
            "g21": self.m2 * float(x1 @ w12x2),
            "g12": self.m1 * float(x2 @ w21x1),
            "h": self.gamma * v1 - (1.0 - self.gamma) * v2,
            "w12x2": w12x2,
            "w21x1": w21x1,
        }


@dataclass
class OptimizationState:
    rho1: DensityField
    rho2: DensityField
    masks1: PartitionMasks
    masks2: PartitionMasks
    multipliers: np.ndarray
    penalty: float
    iteration: int = 0
    history: list = field(default_factory=list)

    @property
    def x1(self) -> np.ndarray:
        return self.rho1.values[self.masks1.hat]

    @property
    def x2(self) -> np.ndarray:
        return self.rho2.values[self.masks2.hat]


@dataclass
class CogenerationResult:
    rho1: DensityField
    rho2: DensityField
    history: list
    masks1: PartitionMasks
    masks2: PartitionMasks
    converged: bool
    solid1: np.ndarray
    solid2: np.ndarray
    cleared: int
    config: OptimizerConfig
    final_g21: float = 0.0
    final_g12: float = 0.0
    thresholded_g21: float = 0.0
    thresholded_g12: float = 0.0
    noop: bool = False
    multipliers: tuple = (0.0, 0.0, 0.0)
    penalty: float = 0.0

    @property
    def v1(self) -> float:
        """Measure of the thresholded body 1."""
        return float(self.solid1.sum() * self.rho1.grid.cell_measure)

    @property
    def v2(self) -> float:
        return float(self.solid2.sum() * self.rho2.grid.cell_measure)


def _phi(problem: HatProblem, meas: dict, lam, c) -> float:
    g21, g12, h = meas["g21"], meas["g12"], meas["h"]
    return (-(meas["v1"] + meas["v2"]) + lam[0] * g21 + lam[1] * g12 + lam[2] * h
            + 0.5 * c * (g21 * g21 + g12 * g12 + h * h))


def lagrangian_and_gradient(problem: HatProblem, x1, x2, multipliers, penalty, meas: dict | None = None):
    """Value of the augmented Lagrangian and its gradients over the hat cells of each body.

    ``meas`` may carry ``problem.measures(x1, x2)`` when the caller already has it.
    """
    if meas is None:
        meas = problem.measures(x1, x2)
    lam = multipliers
    a1 = lam[0] + penalty * meas["g21"]
    a2 = lam[1] + penalty * meas["g12"]
    a3 = lam[2] + penalty * meas["h"]
    grad1 = (problem.m1 * (-1.0 + a3 * problem.gamma)
             + a1 * problem.m2 * meas["w12x2"]
             + a2 * problem.m1 * (problem.A21T @ x2))
    grad2 = (problem.m2 * (-1.0 - a3 * (1.0 - problem.gamma))
             + a1 * problem.m2 * (problem.A12T @ x1)
             + a2 * problem.m1 * meas["w21x1"])
    return _phi(problem, meas, lam, penalty), grad1, grad2, meas


def _project(x, g, eta, m):
    return np.clip(x - eta * g, np.maximum(0.0, x - m), np.minimum(1.0, x + m))


def _backtrack(problem, x1, x2, grad1, grad2, phi, meas, multipliers, penalty, step, move_limit, backtracks):
    eta = step
    for _ in range(backtracks + 1):
        y1 = _project(x1, grad1, eta, move_limit)
        y2 = _project(x2, grad2, eta, move_limit)
        trial = problem.measures(y1, y2)
        phi_new = _phi(problem, trial, multipliers, penalty)
        if phi_new <= phi:
            return y1, y2, phi_new, eta, False, trial
        eta *= 0.5
    return x1, x2, phi, eta, True, meas


def update_step(problem: HatProblem, x1, x2, grad1, grad2, phi, multipliers, penalty,
                step: float, move_limit: float, backtracks: int = 20):
    """Projected, move-limited gradient step with step halving.

    Returns ``(x1_new, x2_new, phi_new, step_used, stalled)``. When no
    trial step decreases the Lagrangian the densities are kept and
    ``stalled`` is set.
    """
    return _backtrack(problem, x1, x2, grad1, grad2, phi, None, multipliers, penalty,
                      step, move_limit, backtracks)[:5]


def multiplier_update(multipliers, penalty, g21, g12, h, growth, penalty_max, grow: bool = True):
    """First-order multiplier update, then geometric penalty growth capped at ``penalty_max``."""
    lam = np.asarray(multipliers, dtype=float) + penalty * np.array([g21, g12, h])
    if grow:
        penalty = min(growth * penalty, penalty_max)
    return lam, penalty


def _hat_problem(W12, W21, hat1, hat2, m1, m2, gamma) -> HatProblem:
    i1 = np.flatnonzero(hat1)
    i2 = np.flatnonzero(hat2)
    A12 = W12.matrix[i1][:, i2]
    A21 = W21.matrix[i2][:, i1]
    return HatProblem(A12, A21, m1, m2, gamma)


def resolve_defaults(config: OptimizerConfig, problem: HatProblem, domain1_measure: float) -> OptimizerConfig:
    m = max(problem.m1, problem.m2)
    colsum = 0.0
    for A in (problem.A12, problem.A21):
        if A.nnz:
            colsum = max(colsum, float(np.asarray(A.sum(axis=0)).max()), float(np.asarray(A.sum(axis=1)).max()))
    colsum = max(colsum, 1e-12)
    step = config.step if config.step is not None else 1.0 / (m * colsum)
    # a penalty near 1/cell_measure drives every density to zero before the
    # volume terms can act; scaling by the domain measure keeps the trade-off balanced
    c0 = config.penalty_init if config.penalty_init is not None else 1.0 / domain1_measure
    cmax = config.penalty_max if config.penalty_max is not None else 1e6 * c0
    dtol = config.delta_tol if config.delta_tol is not None else 1e-4 * domain1_measure
    tol_g = config.tol_g if config.tol_g is not None else 1e-6 * domain1_measure
    return replace(config, step=step, penalty_init=c0, penalty_max=cmax, delta_tol=dtol, tol_g=tol_g)


def repair_thresholded(solid1, solid2, W12: CorrelationMatrix, W21: CorrelationMatrix, f1, f2):
    """Clear thresholded cells, largest local measure first, until no collision remains.

    Returns the repaired masks and the number of cleared cells.
    """
    s1 = np.asarray(solid1, dtype=bool).copy()
    s2 = np.asarray(solid2, dtype=bool).copy()
    cleared = 0
    # conflict degree of each occupied cell against the other thresholded body
    while True:
        x1 = s1.astype(float)
        x2 = s2.astype(float)
        c1 = x1 * (W12.matrix @ x2 + W21.T @ x2)
        c2 = x2 * (W21.matrix @ x1 + W12.T @ x1)
        if not (c1.any() or c2.any()):
            return s1, s2, cleared
        score1 = np.where(c1 > 0, np.asarray(f1), -np.inf)
        score2 = np.where(c2 > 0, np.asarray(f2), -np.inf)
        i1, i2 = int(np.argmax(score1)), int(np.argmax(score2))
        if score1[i1] >= score2[i2]:
            s1[i1] = False
        else:
            s2[i2] = False
        cleared += 1


def cogenerate(rho1: DensityField, rho2: DensityField, W12: CorrelationMatrix, W21: CorrelationMatrix,
               config: OptimizerConfig = OptimizerConfig(), *,
               callback: Optional[Callable[[IterationRecord], None]] = None,
               cancel: Optional[Callable[[], bool]] = None,
               theta: float = 0.5) -> CogenerationResult:
    """Maximize the hat volumes of both bodies subject to zero collision and the volume ratio.

    ``rho1``/``rho2`` are the initial (rasterized) designs. Tilde cells are
    never modified. ``callback`` receives every iteration record and
    ``cancel`` is polled once per iteration.
    """
    if W12.shape != (rho1.grid.n, rho2.grid.n) or W21.shape != (rho2.grid.n, rho1.grid.n):
        raise DimensionError("correlation matrices do not match the fields")
    m1, m2 = rho1.grid.cell_measure, rho2.grid.cell_measure

    # a cell collides if it meets the other body either as a stationary cell or as a moving sample
    f1 = local_field(rho1, rho2, W12).values + rho1.values * (W21.T @ rho2.values)
    f2 = local_field(rho2, rho1, W21).values + rho2.values * (W12.T @ rho1.values)
    masks1 = partition(rho1, f1)
    masks2 = partition(rho2, f2)
    problem = _hat_problem(W12, W21, masks1.hat, masks2.hat, m1, m2, config.gamma)
    cfg = resolve_defaults(config, problem, rho1.grid.domain_measure)

    x1 = rho1.values[masks1.hat].copy()
    x2 = rho2.values[masks2.hat].copy()
    h_scale = max(m1 * x1.sum() + m2 * x2.sum(), 1e-300)
    lam = np.asarray(cfg.multiplier_init, dtype=float)
    c = cfg.penalty_init
    history = []
    converged = False
    noop = problem.n1 == 0 and problem.n2 == 0
    meas = None

    if noop:
        warnings.warn("initial designs never collide; returning them unchanged", RuntimeWarning)
    else:
        for it in range(cfg.max_iters):
            if cancel is not None and cancel():
                log.info("cancelled after %d iterations", it)
                break
            phi, g1, g2, meas = lagrangian_and_gradient(problem, x1, x2, lam, c, meas)
            if not (np.isfinite(phi) and np.all(np.isfinite(g1)) and np.all(np.isfinite(g2))):
                raise NumericalError(f"non-finite Lagrangian or gradient at iteration {it}")
            y1, y2, _, _, stalled, new = _backtrack(problem, x1, x2, g1, g2, phi, meas, lam, c,
                                                    cfg.step, cfg.move_limit, cfg.backtracks)
            delta = m1 * np.abs(y1 - x1).sum() + m2 * np.abs(y2 - x2).sum()
            x1, x2 = y1, y2
            meas = new
            rec = IterationRecord(it + 1, new["v1"], new["v2"], new["g21"], new["g12"], new["h"],
                                  float(delta), stalled)
            history.append(rec)
            if callback is not None:
                callback(rec)
            feasible = (new["g21"] + new["g12"] <= cfg.tol_g
                        and abs(new["h"]) <= cfg.tol_h * h_scale)
            if delta < cfg.delta_tol and feasible:
                converged = True
                break
            if (it + 1) % cfg.outer_every == 0:
                lam, c = multiplier_update(lam, c, new["g21"], new["g12"], new["h"],
                                           cfg.penalty_growth, cfg.penalty_max)

    out1 = rho1.values.copy()
    out2 = rho2.values.copy()
    out1[masks1.hat] = x1
    out2[masks2.hat] = x2
    final1 = DensityField(rho1.grid, out1)
    final2 = DensityField(rho2.grid, out2)
    solid1, solid2, cleared = repair_thresholded(threshold(final1, theta), threshold(final2, theta),
                                                 W12, W21, f1, f2)
    b1, b2 = DensityField.from_mask(rho1.grid, solid1), DensityField.from_mask(rho2.grid, solid2)
    return CogenerationResult(
        rho1=final1, rho2=final2, history=history, masks1=masks1, masks2=masks2,
        converged=converged or noop, solid1=solid1, solid2=solid2, cleared=cleared, config=cfg,
        final_g21=global_measure(final1, final2, W12), final_g12=global_measure(final2, final1, W21),
        thresholded_g21=global_measure(b1, b2, W12), thresholded_g12=global_measure(b2, b1, W21),
        noop=noop, multipliers=tuple(float(v) for v in lam), penalty=float(c),
    )


def gamma_sweep(rho1: DensityField, rho2: DensityField, W12: CorrelationMatrix, W21: CorrelationMatrix,
                gammas, config: OptimizerConfig = OptimizerConfig(), **kwargs) -> list:
    """Run :func:`cogenerate` for each gamma with the same matrices.

    Returns rows ``(gamma, v1, v2, v1 + v2)`` of thresholded measures plus
    the individual results as a second element.
    """
    rows, results = [], []
    for gamma in gammas:
        res = cogenerate(rho1, rho2, W12, W21, replace(config, gamma=float(gamma)), **kwargs)
        rows.append((float(gamma), res.v1, res.v2, res.v1 + res.v2))
        results.append(res)
    return rows, results
