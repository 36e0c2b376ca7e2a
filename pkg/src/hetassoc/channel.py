"""Link budget: pathloss with log-normal shadowing, open-loop uplink power,
CDMA-style SINR and the resulting spectral efficiency for every (BS, user) pair."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .topology import Topology


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, float) / 10.0)


@dataclass(frozen=True)
class RadioParams:
    processing_gain: float = 128.0
    target_snr_db: float = 10.0
    max_tx_power_dbm: float = 23.0
    circuit_power_mw: float = 100.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 10e6
    shadowing_std_db: float = 8.0
    macro_pl: tuple[float, float] = (128.1, 37.6)
    pico_pl: tuple[float, float] = (140.7, 36.7)
    power_control_uses_shadowing: bool = True

    def __post_init__(self):
        if self.processing_gain < 1:
            raise ValueError("processing gain must be >= 1")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth must be positive")
        if self.shadowing_std_db < 0:
            raise ValueError("shadowing deviation must be non-negative")
        if self.circuit_power_mw < 0:
            raise ValueError("circuit power must be non-negative")

    @property
    def noise_mw(self) -> float:
        """Thermal noise over the whole band; -104 dBm at the 10 MHz default."""
        return float(db_to_linear(self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)))

    @property
    def max_tx_power_mw(self) -> float:
        return float(db_to_linear(self.max_tx_power_dbm))

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def pathloss_db(tier: str, distance_km, params: RadioParams = RadioParams()):
    """Log-distance loss ``intercept + slope * log10(d)`` with d in kilometers."""
    d = np.asarray(distance_km, float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    try:
        intercept, slope = {"macro": params.macro_pl, "pico": params.pico_pl}[tier]
    except KeyError:
        raise ValueError(f"unknown tier {tier!r}") from None
    out = intercept + slope * np.log10(d)
    return float(out) if out.ndim == 0 else out


def open_loop_power(pathloss, noise_mw, params: RadioParams = RadioParams()):
    """Uplink power (mW) that meets the target SNR over `pathloss` dB, capped at the max."""
    noise = np.asarray(noise_mw, float)
    if np.any(noise <= 0):
        raise ValueError("noise power must be positive")
    wanted = db_to_linear(params.target_snr_db) * noise / db_to_linear(-np.asarray(pathloss, float))
    out = np.minimum(wanted, params.max_tx_power_mw)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LinkTable:
    """Per-link matrices, BS-major (rows are BSs, macros first; columns are users)."""

    pathloss_db: np.ndarray
    gain: np.ndarray
    tx_power_mw: np.ndarray
    sinr: np.ndarray
    rate: np.ndarray
    noise_mw: np.ndarray
    bs_tier: tuple[str, ...] = ()
    params_digest: str = ""

    def __post_init__(self):
        for name in ("pathloss_db", "gain", "tx_power_mw", "sinr", "rate", "noise_mw"):
            getattr(self, name).setflags(write=False)

    @property
    def N(self) -> int:
        return self.rate.shape[0]

    @property
    def K(self) -> int:
        return self.rate.shape[1]

    @classmethod
    def from_arrays(cls, rate, tx_power_mw, **extra) -> "LinkTable":
        """Table built straight from rate and power matrices, for solver tests
        and hand-made instances. Other matrices are filled with placeholders
        consistent with ``rate = log2(1 + sinr)``."""
        rate = np.array(rate, float, ndmin=2)
        power = np.array(tx_power_mw, float, ndmin=2)
        if rate.shape != power.shape:
            raise ValueError("rate and power matrices must have the same shape")
        sinr = np.exp2(rate) - 1.0
        return cls(
            pathloss_db=np.array(extra.get("pathloss_db", np.zeros_like(rate)), float),
            gain=np.array(extra.get("gain", np.ones_like(rate)), float),
            tx_power_mw=power,
            sinr=sinr,
            rate=rate,
            noise_mw=np.array(extra.get("noise_mw", np.ones(rate.shape[0])), float),
            bs_tier=tuple(extra.get("bs_tier", ())),
        )

    def to_text(self) -> str:
        lines = [f"# N\t{self.N}", f"# K\t{self.K}", f"# params\t{self.params_digest}"]
        for name in ("pathloss_db", "gain", "tx_power_mw", "sinr", "rate"):
            for n, row in enumerate(getattr(self, name)):
                lines.append("\t".join([name, str(n)] + [repr(float(v)) for v in row]))
        lines.append("\t".join(["noise_mw", "-"] + [repr(float(v)) for v in self.noise_mw]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LinkTable":
        meta, rows = {}, {}
        for raw in text.splitlines():
            if not raw.strip():
                continue
            if raw.startswith("#"):
                key, value = raw[1:].strip().split("\t")
                meta[key] = value
                continue
            name, idx, *vals = raw.split("\t")
            rows.setdefault(name, []).append([float(v) for v in vals])
        N, K = int(meta["N"]), int(meta["K"])

        def mat(name):
            return np.array(rows[name], float).reshape(N, K)

        return cls(mat("pathloss_db"), mat("gain"), mat("tx_power_mw"), mat("sinr"),
                   mat("rate"), np.array(rows["noise_mw"][0], float),
                   params_digest=meta.get("params", ""))


def sinr_matrix(tx_power_mw: np.ndarray, gain: np.ndarray, noise_mw: np.ndarray,
                processing_gain: float) -> np.ndarray:
    """kappa * p_nk g_nk / (sum_{j != k} p_nj g_nj + noise_n).

    Every user contributes its own open-loop power toward BS n to the
    interference there, whoever actually serves it.
    """
    received = tx_power_mw * gain
    others = received.sum(axis=1, keepdims=True) - received
    return processing_gain * received / (others + np.asarray(noise_mw)[:, None])


def build_link_table(topology: Topology, params: RadioParams = RadioParams(),
                     seed: int = 0) -> LinkTable:
    bs = topology.bs_positions
    users = topology.user_positions
    N, K = len(bs), len(users)
    if N == 0 or K == 0:
        raise ValueError("need at least one BS and one user")

    dist_km = topology.distances(bs, users) / 1000.0
    tiers = topology.bs_tier
    distance_loss = np.empty((N, K))
    for tier in ("macro", "pico"):
        rows = tiers == tier
        if rows.any():
            distance_loss[rows] = pathloss_db(tier, dist_km[rows], params)

    # drawn user-major so dropping the last user leaves the other draws intact
    rng = np.random.default_rng(seed)
    shadowing = rng.normal(0.0, 1.0, size=(K, N)).T * params.shadowing_std_db
    loss = distance_loss + shadowing

    noise = np.full(N, params.noise_mw)
    gain = db_to_linear(-loss)
    power_loss = loss if params.power_control_uses_shadowing else distance_loss
    power = open_loop_power(power_loss, noise[:, None], params)
    sinr = sinr_matrix(power, gain, noise, params.processing_gain)
    rate = np.log2(1.0 + sinr)
    return LinkTable(loss, gain, power, sinr, rate, noise, tuple(tiers), params.digest())
