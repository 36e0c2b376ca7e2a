"""Invariant checks on small random instances, against exhaustive search."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .association import (SolverConfig, brute_force, dinkelbach_value, evaluate_objective,
                          evaluate_whole_ee, solve_amsee, solve_amwee, solve_auf, solve_eeauf,
                          solve_mara)
from .channel import LinkTable, RadioParams, build_link_table
from .topology import DeploymentConfig, generate_topology

NUM_TOL = 1e-9


def random_instance(rng: np.random.Generator, num_bs: int, num_users: int,
                    params: RadioParams = RadioParams()) -> LinkTable:
    """Link table from a random single-macrocell drop with `num_bs - 1` pico BSs."""
    seed = int(rng.integers(2**63))
    topo = generate_topology(DeploymentConfig(pbs_per_macrocell=num_bs - 1,
                                              users_per_macrocell=num_users, seed=seed))
    return build_link_table(topo, params, seed ^ 0x5DEECE66D)


@dataclass
class CheckResult:
    name: str
    failures: list[str] = field(default_factory=list)
    checked: int = 0
    allowed_fraction: float = 0.0

    @property
    def ok(self) -> bool:
        return len(self.failures) <= self.allowed_fraction * self.checked

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        extra = f" ({len(self.failures)} misses, first: {self.failures[0]})" if self.failures else ""
        return f"{status}  {self.name}: {self.checked} checked{extra}"


def check_separable_optimality(links: LinkTable, p_c: float, cfg: SolverConfig,
                               results: dict[str, CheckResult], tag: str) -> None:
    for name, objective, solver in (
        ("mara_sum_rate", "sum_rate", lambda: solve_mara(links)),
        ("amsee_sum_ee", "sum_ee", lambda: solve_amsee(links, p_c)),
    ):
        res = results.setdefault(name, CheckResult(f"{name} equals brute force"))
        res.checked += 1
        got = evaluate_objective(objective, solver(), links, p_c)
        _, best = brute_force(links, objective, p_c)
        if got != best:
            res.failures.append(f"{tag}: {got!r} != {best!r}")

    res = results.setdefault("amwee_whole_ee", CheckResult("amwee whole-EE equals brute force"))
    res.checked += 1
    x, trace = solve_amwee(links, p_c, cfg)
    got = evaluate_whole_ee(x, links, p_c)
    _, best = brute_force(links, "whole_ee", p_c)
    if abs(got - best) > cfg.convergence_tol * abs(best):
        res.failures.append(f"{tag}: {got!r} vs {best!r}")
    check_dinkelbach_trace(links, p_c, cfg, x, trace, results, tag)


def check_dinkelbach_trace(links, p_c, cfg, x, trace, results, tag) -> None:
    res = results.setdefault("dinkelbach", CheckResult(
        "dinkelbach monotone gamma, F >= 0, fixed point, <= 15 iterations"))
    res.checked += 1
    g = trace.gamma_sequence
    if any(b < a - NUM_TOL for a, b in zip(g, g[1:])):
        res.failures.append(f"{tag}: gamma decreased")
    if min(trace.f_values) < -NUM_TOL:
        res.failures.append(f"{tag}: F(gamma) = {min(trace.f_values)!r} < 0")
    if abs(evaluate_whole_ee(x, links, p_c) - g[-1]) > cfg.convergence_tol:
        res.failures.append(f"{tag}: E(x) != final gamma")
    if trace.iterations > 15 or not trace.converged:
        res.failures.append(f"{tag}: {trace.iterations} iterations")
    # F is decreasing in gamma
    lo, hi = sorted(g[-1] * np.array([0.5, 1.5]))
    if dinkelbach_value(links, lo, p_c)[0] < dinkelbach_value(links, hi, p_c)[0]:
        res.failures.append(f"{tag}: F not decreasing between {lo} and {hi}")


def check_dual(links: LinkTable, p_c: float, cfg: SolverConfig,
               results: dict[str, CheckResult], tag: str) -> None:
    for name, objective, solver in (("eeauf", "eeauf_utility", lambda: solve_eeauf(links, p_c, cfg)),
                                    ("auf", "auf_utility", lambda: solve_auf(links, cfg))):
        # AUF has no per-instance guarantee: its dual iterates can miss the
        # integral optimum entirely (duality gap), so a small miss rate is tolerated
        res = results.setdefault(name, CheckResult(
            f"{name} objective within step*tau^2/2 of brute force",
            allowed_fraction=0.1 if name == "auf" else 0.0))
        res.checked += 1
        x, trace = solver()
        got = evaluate_objective(objective, x, links, p_c)
        _, best = brute_force(links, objective, p_c)
        band = cfg.stepsize * trace.subgradient_bound ** 2 / 2
        if got < best - band - NUM_TOL:
            res.failures.append(f"{tag}: {got!r} < {best!r} - {band!r}")
        # weak duality: every dual value bounds the integral optimum
        if min(trace.dual_values) < best - NUM_TOL:
            res.failures.append(f"{tag}: dual value below primal optimum")


def check_dominance(links: LinkTable, p_c: float, cfg: SolverConfig,
                    results: dict[str, CheckResult], tag: str) -> None:
    res = results.setdefault("dominance", CheckResult(
        "AMWEE/AMSEE/MARA dominate on their own objectives"))
    res.checked += 1
    solved = {
        "MARA": solve_mara(links), "AMSEE": solve_amsee(links, p_c),
        "AMWEE": solve_amwee(links, p_c, cfg)[0], "EEAUF": solve_eeauf(links, p_c, cfg)[0],
        "AUF": solve_auf(links, cfg)[0],
    }
    for owner, objective in (("AMWEE", "whole_ee"), ("AMSEE", "sum_ee"), ("MARA", "sum_rate")):
        mine = evaluate_objective(objective, solved[owner], links, p_c)
        for other, x in solved.items():
            theirs = evaluate_objective(objective, x, links, p_c)
            if theirs > mine + NUM_TOL * abs(mine):
                res.failures.append(f"{tag}: {other} beats {owner} on {objective}")


def run_validation(instances: int = 50, seed: int = 0, max_bs: int = 4, max_users: int = 7,
                   params: RadioParams = RadioParams(),
                   cfg: SolverConfig = SolverConfig()) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results: dict[str, CheckResult] = {}
    p_c = params.circuit_power_mw
    for i in range(instances):
        n = int(rng.integers(2, max_bs + 1))
        k = int(rng.integers(2, max_users + 1))
        links = random_instance(rng, n, k, params)
        tag = f"instance {i} (N={n}, K={k})"
        check_separable_optimality(links, p_c, cfg, results, tag)
        if n ** k <= 4**6:
            check_dual(links, p_c, cfg, results, tag)
        check_dominance(links, p_c, cfg, results, tag)
    return list(results.values())

