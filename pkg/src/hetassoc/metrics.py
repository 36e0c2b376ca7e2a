"""Per-trial performance indices and their Monte-Carlo aggregation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .association import Association, evaluate_whole_ee, user_ee
from .channel import LinkTable

DEFAULT_TARGET_RATE = 1.0  # bits/s/Hz; a configurable guess, not a published value


@dataclass(frozen=True)
class MetricsReport:
    avg_rate: float
    avg_effective_rate: float
    avg_user_ee: float
    whole_ee: float
    jain_index: float
    supported_ratio: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def violations(self, num_bs: int) -> list[str]:
        out = []
        if not 1.0 / num_bs - 1e-12 <= self.jain_index <= 1.0 + 1e-12:
            out.append(f"jain_index {self.jain_index} outside [1/{num_bs}, 1]")
        if not 0.0 <= self.supported_ratio <= 1.0:
            out.append(f"supported_ratio {self.supported_ratio} outside [0, 1]")
        for name in ("avg_rate", "avg_effective_rate", "avg_user_ee", "whole_ee"):
            if getattr(self, name) < 0:
                out.append(f"{name} is negative")
        return out


def jain_index(loads) -> float:
    y = np.asarray(loads, float)
    if np.any(y < 0):
        raise ValueError("loads must be non-negative")
    sq = float(np.sum(y * y))
    if sq == 0:
        raise ValueError("Jain's index is undefined for all-zero loads")
    return float(np.sum(y)) ** 2 / (len(y) * sq)


def supported_ratio(assoc: Association, links: LinkTable, target_rate: float) -> float:
    """Share of users whose achieved rate strictly exceeds `target_rate`."""
    if target_rate < 0:
        raise ValueError("target rate must be non-negative")
    return float(np.mean(assoc.pick(links.rate) > target_rate))


def summarize(assoc: Association, links: LinkTable, p_c: float,
              target_rate: float = DEFAULT_TARGET_RATE) -> MetricsReport:
    rates = assoc.pick(links.rate)
    loads = assoc.loads
    return MetricsReport(
        avg_rate=float(rates.mean()),
        avg_effective_rate=float((rates / loads[assoc.serving_bs]).mean()),
        avg_user_ee=float(assoc.pick(user_ee(links, p_c)).mean()),
        whole_ee=evaluate_whole_ee(assoc, links, p_c),
        jain_index=jain_index(loads),
        supported_ratio=supported_ratio(assoc, links, target_rate),
    )


def aggregate(reports: list[MetricsReport]) -> dict[str, tuple[float, float]]:
    """Mean and population standard deviation of each metric."""
    table = np.array([[getattr(r, n) for n in MetricsReport.field_names()] for r in reports])
    return {n: (float(table[:, i].mean()), float(table[:, i].std()))
            for i, n in enumerate(MetricsReport.field_names())}
