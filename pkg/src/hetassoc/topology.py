"""Two-tier network layouts: a hexagonal grid of macro sites with pico BSs and
users scattered inside each macrocell by rejection sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

ATTEMPTS_PER_POINT = 10_000

# lattice basis in units of the inter-site distance
_A1 = np.array([1.0, 0.0])
_A2 = np.array([0.5, math.sqrt(3.0) / 2.0])

# cluster translations for wrap-around, in (a1, a2) lattice coordinates
_WRAP_SHIFTS = {
    1: [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)],
    7: [(2, 1), (-1, 3), (-3, 2), (-2, -1), (1, -3), (3, -2)],
}


class PlacementError(RuntimeError):
    """Rejection sampling ran out of attempts; the layout is too dense."""


@dataclass(frozen=True)
class DeploymentConfig:
    num_macrocells: int = 1
    pbs_per_macrocell: int = 4
    users_per_macrocell: int = 30
    inter_site_distance: float = 1000.0
    min_pbs_pbs: float = 40.0
    min_pbs_mbs: float = 75.0
    min_user_mbs: float = 35.0
    min_user_pbs: float = 10.0
    seed: int = 0
    region_shape: str = "hex"
    wrap_around: bool = False

    def __post_init__(self):
        for name in ("inter_site_distance", "min_pbs_pbs", "min_pbs_mbs",
                     "min_user_mbs", "min_user_pbs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.num_macrocells < 1:
            raise ValueError("num_macrocells must be at least 1")
        if self.pbs_per_macrocell < 0 or self.users_per_macrocell < 0:
            raise ValueError("node counts must be non-negative")
        if self.region_shape not in ("hex", "disk"):
            raise ValueError(f"unknown region shape {self.region_shape!r}")
        if self.wrap_around and self.num_macrocells not in _WRAP_SHIFTS:
            raise ValueError("wrap-around needs 1 or 7 macrocells")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class Region:
    """Macrocell footprint: a flat-sided hexagon facing its six neighbours,
    or a disk of the same circumradius."""

    center: tuple[float, float]
    circumradius: float
    shape: str = "hex"

    @property
    def apothem(self) -> float:
        return self.circumradius * math.sqrt(3.0) / 2.0

    def contains(self, point) -> bool:
        return bool(self.contains_many(np.atleast_2d(np.asarray(point, float)))[0])

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        rel = np.asarray(points, float) - np.asarray(self.center)
        if self.shape == "disk":
            return np.hypot(rel[:, 0], rel[:, 1]) <= self.circumradius
        inside = np.ones(len(rel), dtype=bool)
        for deg in (0.0, 60.0, 120.0):
            u = np.array([math.cos(math.radians(deg)), math.sin(math.radians(deg))])
            inside &= np.abs(rel @ u) <= self.apothem
        return inside

    def bounding_box(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.circumradius
        return cx - r, cx + r, cy - r, cy + r


def _hex_centers(count: int) -> list[tuple[int, int]]:
    """Lattice coordinates of the first `count` cells, centre first, then ring by ring."""
    dirs = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
    cells = [(0, 0)]
    ring = 1
    while len(cells) < count:
        i, j = dirs[4][0] * ring, dirs[4][1] * ring
        for side in range(6):
            for _ in range(ring):
                cells.append((i, j))
                di, dj = dirs[side]
                i, j = i + di, j + dj
        ring += 1
    return cells[:count]


@dataclass(frozen=True)
class Topology:
    mbs_positions: np.ndarray
    pbs_positions: np.ndarray
    user_positions: np.ndarray
    pbs_cell: np.ndarray
    user_cell: np.ndarray
    inter_site_distance: float = 1000.0
    region_shape: str = "hex"
    wrap_shifts: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def num_macrocells(self) -> int:
        return len(self.mbs_positions)

    @property
    def owning_cell(self) -> dict[tuple[str, int], int]:
        owners = {("PBS", i): int(c) for i, c in enumerate(self.pbs_cell)}
        owners.update({("USER", i): int(c) for i, c in enumerate(self.user_cell)})
        return owners

    @property
    def bs_positions(self) -> np.ndarray:
        """All BSs, macros first."""
        return np.vstack([self.mbs_positions, self.pbs_positions])

    @property
    def bs_tier(self) -> np.ndarray:
        return np.array(["macro"] * len(self.mbs_positions)
                        + ["pico"] * len(self.pbs_positions))

    def distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Pairwise |a_i - b_j| in meters, taking the nearest wrap-around image."""
        a = np.asarray(a, float).reshape(-1, 2)
        b = np.asarray(b, float).reshape(-1, 2)
        diff = a[:, None, :] - b[None, :, :]
        d = np.hypot(diff[..., 0], diff[..., 1])
        for shift in self.wrap_shifts:
            moved = diff + shift
            d = np.minimum(d, np.hypot(moved[..., 0], moved[..., 1]))
        return d

    def to_text(self) -> str:
        lines = [
            f"# inter_site_distance\t{float(self.inter_site_distance)!r}",
            f"# region_shape\t{self.region_shape}",
            f"# wrap_around\t{int(len(self.wrap_shifts) > 0)}",
        ]
        for i, (x, y) in enumerate(self.mbs_positions):
            lines.append(f"MBS\t{i}\t{float(x)!r}\t{float(y)!r}\t{i}")
        for i, ((x, y), c) in enumerate(zip(self.pbs_positions, self.pbs_cell)):
            lines.append(f"PBS\t{i}\t{float(x)!r}\t{float(y)!r}\t{int(c)}")
        for i, ((x, y), c) in enumerate(zip(self.user_positions, self.user_cell)):
            lines.append(f"USER\t{i}\t{float(x)!r}\t{float(y)!r}\t{int(c)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Topology":
        meta = {}
        nodes: dict[str, list] = {"MBS": [], "PBS": [], "USER": []}
        for raw in text.splitlines():
            if not raw.strip():
                continue
            if raw.startswith("#"):
                key, value = raw[1:].strip().split("\t")
                meta[key] = value
                continue
            kind, idx, x, y, cell = raw.split("\t")
            nodes[kind].append((int(idx), float(x), float(y), int(cell)))
        for kind in nodes:
            nodes[kind].sort()

        def pos(kind):
            return np.array([(x, y) for _, x, y, _ in nodes[kind]], float).reshape(-1, 2)

        def cells(kind):
            return np.array([c for *_, c in nodes[kind]], dtype=int)

        isd = float(meta.get("inter_site_distance", 1000.0))
        n_cells = len(nodes["MBS"])
        shifts = _wrap_vectors(n_cells, isd) if meta.get("wrap_around") == "1" else np.zeros((0, 2))
        return cls(pos("MBS"), pos("PBS"), pos("USER"), cells("PBS"), cells("USER"),
                   inter_site_distance=isd, region_shape=meta.get("region_shape", "hex"),
                   wrap_shifts=shifts)


def _wrap_vectors(num_cells: int, isd: float) -> np.ndarray:
    return np.array([isd * (i * _A1 + j * _A2) for i, j in _WRAP_SHIFTS[num_cells]])


def macrocell_region(topology: Topology, cell_index: int) -> Region:
    if not 0 <= cell_index < topology.num_macrocells:
        raise IndexError(f"macrocell {cell_index} out of range "
                         f"(have {topology.num_macrocells})")
    cx, cy = topology.mbs_positions[cell_index]
    return Region((float(cx), float(cy)), topology.inter_site_distance / math.sqrt(3.0),
                  topology.region_shape)


def _scatter(rng: np.random.Generator, region: Region, count: int,
             constraints: Callable[[list], list[tuple[np.ndarray, float]]], topo: Topology,
             label: str) -> list[np.ndarray]:
    """Place `count` points one at a time.

    `constraints(placed)` returns (anchors, min distance) pairs; it receives the
    points accepted so far so same-kind spacing can be enforced.
    """
    x0, x1, y0, y1 = region.bounding_box()
    placed: list[np.ndarray] = []
    for _ in range(count):
        for _attempt in range(ATTEMPTS_PER_POINT):
            p = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
            if not region.contains(p):
                continue
            if all(len(anchors) == 0 or topo.distances(p, anchors).min() >= dmin
                   for anchors, dmin in constraints(placed)):
                placed.append(p)
                break
        else:
            raise PlacementError(
                f"could not place {label} #{len(placed)} in cell centred at "
                f"{region.center} after {ATTEMPTS_PER_POINT} attempts")
    return placed


def generate_topology(config: DeploymentConfig) -> Topology:
    isd = config.inter_site_distance
    centers = np.array([isd * (i * _A1 + j * _A2)
                        for i, j in _hex_centers(config.num_macrocells)])
    shifts = _wrap_vectors(config.num_macrocells, isd) if config.wrap_around else np.zeros((0, 2))
    empty = np.zeros((0, 2))
    skeleton = Topology(centers, empty, empty, np.zeros(0, int), np.zeros(0, int),
                        isd, config.region_shape, shifts)
    rng = np.random.default_rng(config.seed)

    pbs: list[np.ndarray] = []
    pbs_cell: list[int] = []
    for c in range(config.num_macrocells):
        region = macrocell_region(skeleton, c)
        earlier = list(pbs)
        new = _scatter(
            rng, region, config.pbs_per_macrocell,
            lambda placed: [(np.array(earlier + placed).reshape(-1, 2), config.min_pbs_pbs),
                            (centers, config.min_pbs_mbs)],
            skeleton, "PBS")
        pbs.extend(new)
        pbs_cell.extend([c] * len(new))
    pbs_arr = np.array(pbs).reshape(-1, 2)

    users: list[np.ndarray] = []
    user_cell: list[int] = []
    for c in range(config.num_macrocells):
        region = macrocell_region(skeleton, c)
        new = _scatter(
            rng, region, config.users_per_macrocell,
            lambda placed: [(centers, config.min_user_mbs), (pbs_arr, config.min_user_pbs)],
            skeleton, "user")
        users.extend(new)
        user_cell.extend([c] * len(new))

    return Topology(centers, pbs_arr, np.array(users).reshape(-1, 2),
                    np.array(pbs_cell, dtype=int), np.array(user_cell, dtype=int),
                    isd, config.region_shape, shifts)


def check_deployment(topology: Topology, config: DeploymentConfig) -> list[str]:
    """Exhaustively verify the distance and containment invariants; returns violations."""
    problems = []
    t = topology
    if len(t.pbs_positions) > 1:
        d = t.distances(t.pbs_positions, t.pbs_positions)
        np.fill_diagonal(d, np.inf)
        if d.min() < config.min_pbs_pbs:
            problems.append(f"PBS-PBS distance {d.min():.3f} < {config.min_pbs_pbs}")
    for label, pts, anchors, dmin in (
        ("PBS-MBS", t.pbs_positions, t.mbs_positions, config.min_pbs_mbs),
        ("user-MBS", t.user_positions, t.mbs_positions, config.min_user_mbs),
        ("user-PBS", t.user_positions, t.pbs_positions, config.min_user_pbs),
    ):
        if len(pts) and len(anchors):
            m = t.distances(pts, anchors).min()
            if m < dmin:
                problems.append(f"{label} distance {m:.3f} < {dmin}")
    for label, pts, owners in (("PBS", t.pbs_positions, t.pbs_cell),
                               ("user", t.user_positions, t.user_cell)):
        for i, (p, c) in enumerate(zip(pts, owners)):
            if not macrocell_region(t, int(c)).contains(p):
                problems.append(f"{label} {i} outside its macrocell {c}")
    return problems


def point_cells(topology: Topology, points: Iterable) -> list[list[int]]:
    """Indices of the macrocell regions containing each point."""
    pts = np.asarray(list(points), float).reshape(-1, 2)
    hits = [macrocell_region(topology, c).contains_many(pts)
            for c in range(topology.num_macrocells)]
    return [[c for c in range(topology.num_macrocells) if hits[c][i]] for i in range(len(pts))]
