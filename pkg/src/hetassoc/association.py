"""User association strategies.

Every solver maps a :class:`LinkTable` to an :class:`Association`; each user
is served by exactly one BS. All argmax steps break ties toward the lowest BS
index (``np.argmax`` returns the first maximum), so solvers are deterministic.

Units: rates in bits/s/Hz, powers in mW, so energy-efficiency ratios are in
(bits/s/Hz)/mW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import LinkTable

BRUTE_FORCE_LIMIT = 10**7


class InstanceTooLarge(ValueError):
    pass


class Strategy(str, Enum):
    MARA = "MARA"
    AUF = "AUF"
    AMSEE = "AMSEE"
    AMWEE = "AMWEE"
    EEAUF = "EEAUF"


@dataclass(frozen=True)
class Association:
    serving_bs: np.ndarray
    num_bs: int

    def __post_init__(self):
        sb = np.asarray(self.serving_bs, dtype=int)
        if sb.size and (sb.min() < 0 or sb.max() >= self.num_bs):
            raise ValueError("serving BS index out of range")
        object.__setattr__(self, "serving_bs", sb)

    @property
    def loads(self) -> np.ndarray:
        return np.bincount(self.serving_bs, minlength=self.num_bs)

    @property
    def K(self) -> int:
        return len(self.serving_bs)

    def pick(self, matrix: np.ndarray) -> np.ndarray:
        """Entry of `matrix` at each user's serving BS."""
        return np.asarray(matrix)[self.serving_bs, np.arange(self.K)]


@dataclass(frozen=True)
class SolverConfig:
    gamma_init: float = 0.0
    max_iter_amwee: int = 50
    max_iter_eeauf: int = 500
    stepsize: float = 0.01
    convergence_tol: float = 1e-6
    mu_init_rule: str = "log_K"

    def __post_init__(self):
        if not self.stepsize > 0:
            raise ValueError("stepsize must be positive")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")
        if self.max_iter_amwee < 1 or self.max_iter_eeauf < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.mu_init_rule not in ("log_K", "zeros"):
            raise ValueError(f"unknown mu_init_rule {self.mu_init_rule!r}")


@dataclass
class DinkelbachTrace:
    gamma_sequence: list[float] = field(default_factory=list)
    f_values: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def to_text(self) -> str:
        lines = ["# iteration\tgamma\tF"]
        for t, (g, f) in enumerate(zip(self.gamma_sequence, self.f_values)):
            lines.append(f"{t}\t{g!r}\t{f!r}")
        return "\n".join(lines) + "\n"


@dataclass
class DualTrace:
    mu: np.ndarray = None
    y_cont: np.ndarray = None
    residuals: list[np.ndarray] = field(default_factory=list)
    dual_values: list[float] = field(default_factory=list)
    mu_history: list[np.ndarray] = field(default_factory=list)
    y_history: list[np.ndarray] = field(default_factory=list)
    ergodic_residuals: list[float] = field(default_factory=list)
    last_association: Association | None = None
    best_iteration: int = 0
    iterations: int = 0
    converged: bool = False

    @property
    def max_residuals(self) -> np.ndarray:
        return np.array([np.abs(r).max() for r in self.residuals])

    @property
    def subgradient_bound(self) -> float:
        """Largest observed subgradient norm, an empirical stand-in for tau."""
        return max((float(np.linalg.norm(r)) for r in self.residuals), default=0.0)

    def to_text(self) -> str:
        lines = ["# iteration\tmax_residual\tdual_value"]
        for t, (r, d) in enumerate(zip(self.max_residuals, self.dual_values)):
            lines.append(f"{t}\t{float(r)!r}\t{d!r}")
        return "\n".join(lines) + "\n"


def _argmax_association(utility: np.ndarray) -> Association:
    return Association(np.argmax(utility, axis=0), utility.shape[0])


# -- objectives -------------------------------------------------------------

def evaluate_whole_ee(assoc: Association, links: LinkTable, p_c: float) -> float:
    """Sum rate over total consumed power (transmit plus K circuit powers)."""
    denom = float(assoc.pick(links.tx_power_mw).sum()) + assoc.K * p_c
    if denom <= 0:
        raise ZeroDivisionError("total power is zero")
    return float(assoc.pick(links.rate).sum()) / denom


def user_ee(links: LinkTable, p_c: float) -> np.ndarray:
    return links.rate / (links.tx_power_mw + p_c)


def evaluate_sum_ee(assoc: Association, links: LinkTable, p_c: float) -> float:
    return float(assoc.pick(user_ee(links, p_c)).sum())


def evaluate_sum_rate(assoc: Association, links: LinkTable) -> float:
    return float(assoc.pick(links.rate).sum())


def eeauf_utility_matrix(links: LinkTable, p_c: float) -> np.ndarray:
    if np.any(links.rate <= 0) or np.any(links.tx_power_mw + p_c <= 0):
        raise ValueError("log utility needs positive rates and powers")
    return np.log(links.rate) - np.log(links.tx_power_mw + p_c)


def auf_utility_matrix(links: LinkTable) -> np.ndarray:
    if np.any(links.rate <= 0):
        raise ValueError("log utility needs positive rates")
    return np.log(links.rate)


def _load_penalty(loads: np.ndarray) -> float:
    y = loads[loads > 0].astype(float)
    return float(np.sum(y * np.log(y)))


def fairness_objective(assoc: Association, utility: np.ndarray) -> float:
    """sum_k h[serving, k] - sum_n y_n log y_n with integral loads (0 log 0 = 0)."""
    return float(assoc.pick(utility).sum()) - _load_penalty(assoc.loads)


# -- separable strategies ---------------------------------------------------

def solve_mara(links: LinkTable) -> Association:
    return _argmax_association(links.rate)


def solve_amsee(links: LinkTable, p_c: float) -> Association:
    return _argmax_association(user_ee(links, p_c))


def dinkelbach_inner(links: LinkTable, gamma: float) -> Association:
    """Exact maximizer of sum_k (r - gamma p) at fixed gamma; separable per user."""
    return _argmax_association(links.rate - gamma * links.tx_power_mw)


def dinkelbach_value(links: LinkTable, gamma: float, p_c: float) -> tuple[float, Association]:
    """F(gamma) = max_x {sum rate - gamma * total power}, with its maximizer."""
    x = dinkelbach_inner(links, gamma)
    total_power = float(x.pick(links.tx_power_mw).sum()) + x.K * p_c
    return evaluate_sum_rate(x, links) - gamma * total_power, x


def solve_amwee(links: LinkTable, p_c: float,
                cfg: SolverConfig = SolverConfig()) -> tuple[Association, DinkelbachTrace]:
    gamma = cfg.gamma_init
    trace = DinkelbachTrace()
    x = None
    for _ in range(cfg.max_iter_amwee):
        f, x = dinkelbach_value(links, gamma, p_c)
        trace.gamma_sequence.append(gamma)
        trace.f_values.append(f)
        trace.iterations += 1
        new_gamma = evaluate_whole_ee(x, links, p_c)
        done = abs(new_gamma - gamma) <= cfg.convergence_tol
        gamma = new_gamma
        if done:
            trace.converged = True
            break
    # closing point: F at the final ratio, which the loop never evaluates itself
    f, _ = dinkelbach_value(links, gamma, p_c)
    trace.gamma_sequence.append(gamma)
    trace.f_values.append(f)
    return x, trace


# -- dual decomposition -----------------------------------------------------

def dual_value(utility: np.ndarray, mu: np.ndarray) -> float:
    """Dual function: user part max_n(h - mu) summed over users, plus the
    closed-form BS part sum_n exp(mu_n - 1)."""
    return float(np.max(utility - mu[:, None], axis=0).sum() + np.exp(mu - 1.0).sum())


def solve_dual(utility: np.ndarray, cfg: SolverConfig = SolverConfig(),
               record_history: bool = False) -> tuple[Association, DualTrace]:
    """Subgradient descent on the load-coupling multipliers.

    Per iteration: users pick argmax_n (h_nk - mu_n); each BS sets its supply
    y_n = exp(mu_n - 1); prices move with excess supply,
    mu_n <- mu_n - step * (y_n - demand_n).

    Every user step yields a feasible integral association, so the best one
    seen (by the fairness objective) is returned. Near the dual optimum the
    last iterate usually flips users back and forth between BSs.
    """
    N, K = utility.shape
    mu = np.full(N, math.log(K) if cfg.mu_init_rule == "log_K" else 0.0)
    trace = DualTrace()
    tol = cfg.convergence_tol * K
    best, best_value = None, -np.inf
    demand_total = np.zeros(N)
    for t in range(cfg.max_iter_eeauf):
        x = _argmax_association(utility - mu[:, None])
        y = np.exp(mu - 1.0)
        residual = y - x.loads
        demand_total += x.loads
        trace.residuals.append(residual)
        trace.ergodic_residuals.append(float(np.abs(y - demand_total / (t + 1)).max()))
        trace.dual_values.append(dual_value(utility, mu))
        if record_history:
            trace.mu_history.append(mu.copy())
            trace.y_history.append(y)
        trace.mu, trace.y_cont = mu, y
        trace.last_association = x
        trace.iterations += 1
        value = fairness_objective(x, utility)
        if value > best_value:
            best, best_value = x, value
            trace.best_iteration = t
        if np.abs(residual).max() <= tol:
            trace.converged = True
            break
        mu = mu - cfg.stepsize * residual
    return best, trace


def solve_eeauf(links: LinkTable, p_c: float, cfg: SolverConfig = SolverConfig(),
                record_history: bool = False) -> tuple[Association, DualTrace]:
    return solve_dual(eeauf_utility_matrix(links, p_c), cfg, record_history)


def solve_auf(links: LinkTable, cfg: SolverConfig = SolverConfig(),
              record_history: bool = False) -> tuple[Association, DualTrace]:
    return solve_dual(auf_utility_matrix(links), cfg, record_history)


# -- oracle -----------------------------------------------------------------

OBJECTIVES = ("whole_ee", "sum_ee", "sum_rate", "eeauf_utility", "auf_utility")


def evaluate_objective(name: str, assoc: Association, links: LinkTable, p_c: float) -> float:
    if name == "whole_ee":
        return evaluate_whole_ee(assoc, links, p_c)
    if name == "sum_ee":
        return evaluate_sum_ee(assoc, links, p_c)
    if name == "sum_rate":
        return evaluate_sum_rate(assoc, links)
    if name == "eeauf_utility":
        return fairness_objective(assoc, eeauf_utility_matrix(links, p_c))
    if name == "auf_utility":
        return fairness_objective(assoc, auf_utility_matrix(links))
    raise ValueError(f"unknown objective {name!r}")


def _batch_objective(name: str, choices: np.ndarray, links: LinkTable, p_c: float) -> np.ndarray:
    """Objective for a batch of assignments (rows of BS indices)."""
    cols = np.arange(links.K)
    if name == "whole_ee":
        return links.rate[choices, cols].sum(1) / (links.tx_power_mw[choices, cols].sum(1)
                                                   + links.K * p_c)
    if name == "sum_ee":
        return user_ee(links, p_c)[choices, cols].sum(1)
    if name == "sum_rate":
        return links.rate[choices, cols].sum(1)
    h = eeauf_utility_matrix(links, p_c) if name == "eeauf_utility" else auf_utility_matrix(links)
    loads = np.stack([(choices == n).sum(1) for n in range(links.N)], axis=1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        penalty = np.where(loads > 0, loads * np.log(loads), 0.0).sum(1)
    return h[choices, cols].sum(1) - penalty


def brute_force(links: LinkTable, objective: str, p_c: float = 100.0,
                chunk: int = 1 << 16) -> tuple[Association, float]:
    """Exhaustive search over all N**K assignments.

    Returns the lexicographically first maximizer and its objective, the
    latter re-evaluated with the same scalar evaluator the solvers use.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    N, K = links.N, links.K
    if N**K > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"{N}**{K} assignments exceeds {BRUTE_FORCE_LIMIT}")
    best_val, best = -np.inf, None
    # user 0 is the most significant digit, so index order is lexicographic
    place = N ** np.arange(K - 1, -1, -1, dtype=np.int64)
    for start in range(0, N**K, chunk):
        idx = np.arange(start, min(start + chunk, N**K), dtype=np.int64)
        block = (idx[:, None] // place) % N
        vals = _batch_objective(objective, block, links, p_c)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best = vals[i], block[i]
    assoc = Association(best, N)
    return assoc, evaluate_objective(objective, assoc, links, p_c)


def solve(strategy: Strategy | str, links: LinkTable, p_c: float,
          cfg: SolverConfig = SolverConfig()):
    """Uniform dispatch; returns (association, trace or None)."""
    s = Strategy(strategy)
    if s is Strategy.MARA:
        return solve_mara(links), None
    if s is Strategy.AMSEE:
        return solve_amsee(links, p_c), None
    if s is Strategy.AMWEE:
        return solve_amwee(links, p_c, cfg)
    if s is Strategy.EEAUF:
        return solve_eeauf(links, p_c, cfg)
    return solve_auf(links, cfg)
