"""Link-budget stack: pathloss, shadowing, fading, rain, SINR, rate.

All decibel quantities follow the uplink budget

    P_r = P_eirp + G_r - L - shadowing - rain - fading   [dBm]

with urban-macro pathloss, lognormal shadowing, Rayleigh flat fading
(exponential power gain, expressed as a dB loss), and ITU-R power-law rain
attenuation scaled by path length. Interference is summed in linear
milliwatts weighted by resource-block overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

import numpy as np

from .config import ScenarioConfig
from .topology import NetworkNode, NodeRole, Topology, distance_3d

SPEED_OF_LIGHT = 3e8  # m/s
THERMAL_NOISE_DBM_HZ = -174.0

_RAIN_TABLE_RESOURCE = "itu_rain_coefficients.txt"


class MissingLinkError(KeyError):
    """A channel realization was asked for a link it never sampled."""


@lru_cache(maxsize=1)
def _rain_table() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Load (freq_GHz, k_H, gamma_H) columns from the shipped data file."""
    text = (resources.files("iabsim.data") / _RAIN_TABLE_RESOURCE).read_text()
    rows = [line.split() for line in text.splitlines()
            if line.strip() and not line.startswith("#")]
    data = np.array(rows, dtype=float)
    return data[:, 0], data[:, 1], data[:, 2]


def rain_coefficients(fc_ghz: float) -> tuple[float, float]:
    """Power-law rain coefficients (k, gamma) at the carrier frequency.

    k is interpolated log-log in frequency, gamma linearly against log f,
    matching the convention of the source coefficient table.
    """
    freqs, ks, gammas = _rain_table()
    if not freqs[0] <= fc_ghz <= freqs[-1]:
        raise ValueError(f"carrier {fc_ghz} GHz outside rain table range "
                         f"[{freqs[0]}, {freqs[-1]}]")
    lf = math.log10(fc_ghz)
    logf = np.log10(freqs)
    k = 10.0 ** float(np.interp(lf, logf, np.log10(ks)))
    gamma = float(np.interp(lf, logf, gammas))
    return k, gamma


@dataclass(frozen=True)
class ChannelParams:
    fc_ghz: float = 28.0
    alpha: float = 4.0
    shadow_std_db: float = 4.0
    rx_gain_db: float = 25.0
    noise_figure_db: float = 5.0
    eff_ant_height_m: float = 1.0
    speed_of_light: float = SPEED_OF_LIGHT
    k_coeff: float = field(default=None)  # type: ignore[assignment]
    gamma_coeff: float = field(default=None)  # type: ignore[assignment]
    pathloss_literal: bool = False

    def __post_init__(self) -> None:
        if self.fc_ghz <= 0:
            raise ValueError(f"fc_ghz must be > 0, got {self.fc_ghz}")
        if self.alpha < 2:
            raise ValueError(f"alpha must be >= 2, got {self.alpha}")
        if self.shadow_std_db < 0:
            raise ValueError(f"shadow_std_db must be >= 0, got {self.shadow_std_db}")
        if self.k_coeff is None or self.gamma_coeff is None:
            k, gamma = rain_coefficients(self.fc_ghz)
            if self.k_coeff is None:
                object.__setattr__(self, "k_coeff", k)
            if self.gamma_coeff is None:
                object.__setattr__(self, "gamma_coeff", gamma)
        if self.k_coeff <= 0:
            raise ValueError(f"k_coeff must be > 0, got {self.k_coeff}")
        if not 0 < self.gamma_coeff < 2:
            raise ValueError(f"gamma_coeff must be in (0, 2), got {self.gamma_coeff}")

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> "ChannelParams":
        return cls(fc_ghz=config.fc_ghz, alpha=config.alpha,
                   shadow_std_db=config.shadow_std_db,
                   rx_gain_db=config.rx_gain_db,
                   noise_figure_db=config.nf_db,
                   eff_ant_height_m=config.eff_ant_height_m,
                   k_coeff=config.rain_k, gamma_coeff=config.rain_gamma,
                   pathloss_literal=config.pathloss_literal)


def breakpoint_distance(params: ChannelParams) -> float:
    """Breakpoint distance 4 * h'_bs * h'_ut * fc / c, in meters."""
    fc_hz = params.fc_ghz * 1e9
    h = params.eff_ant_height_m
    return 4.0 * h * h * fc_hz / params.speed_of_light


def pathloss_uma(d3d_m: float, h_bs_m: float, h_ue_m: float,
                 params: ChannelParams) -> float:
    """Urban-macro pathloss in dB.

    L = 32.4 + 10*alpha*log10(d3D) + 20*log10(fc_GHz)
        - 10*log10(d_bp^2 + (h_bs - h_ue)^2)

    Distances below 1 m are clamped to the 1 m reference distance.
    With ``pathloss_literal`` the last term drops its log10 (a
    dimensionally-broken variant kept for comparison only).
    """
    if d3d_m <= 0:
        raise ValueError(f"d3d_m must be > 0, got {d3d_m}")
    d = max(d3d_m, 1.0)
    d_bp = breakpoint_distance(params)
    bp_term = d_bp ** 2 + (h_bs_m - h_ue_m) ** 2
    loss = 32.4 + 10.0 * params.alpha * math.log10(d) \
        + 20.0 * math.log10(params.fc_ghz)
    if params.pathloss_literal:
        return loss - 10.0 * bp_term
    return loss - 10.0 * math.log10(bp_term)


def rain_attenuation(rain_rate_mm_h: float, path_km: float,
                     params: ChannelParams) -> float:
    """Total rain loss in dB: k * R^gamma [dB/km] times path length."""
    if rain_rate_mm_h < 0:
        raise ValueError(f"rain_rate_mm_h must be >= 0, got {rain_rate_mm_h}")
    if path_km < 0:
        raise ValueError(f"path_km must be >= 0, got {path_km}")
    if rain_rate_mm_h == 0.0:
        return 0.0
    return params.k_coeff * rain_rate_mm_h ** params.gamma_coeff * path_km


def sample_shadowing(rng: np.random.Generator, params: ChannelParams) -> float:
    """Lognormal shadowing sample: zero-mean normal in dB."""
    return float(rng.normal(0.0, params.shadow_std_db))


def sample_fading(rng: np.random.Generator) -> float:
    """Rayleigh flat-fading loss in dB.

    The power gain g is exponential with unit mean; the budget subtracts
    -10*log10(g), so deep fades are large positive losses and the sample can
    be negative (a fading gain).
    """
    g = float(rng.exponential(1.0))
    return -10.0 * math.log10(g)


@dataclass(frozen=True)
class LinkSample:
    """One sampled link: geometry-derived and random losses, all in dB."""
    tx_id: int
    rx_id: int
    d3d_m: float
    pathloss_db: float
    shadowing_db: float
    fading_db: float
    rain_db: float

    @property
    def long_term_loss_db(self) -> float:
        """Pathloss + shadowing; the association metric (no fading, no rain)."""
        return self.pathloss_db + self.shadowing_db


def received_power(eirp_dbm: float, link: LinkSample,
                   params: ChannelParams) -> float:
    """Received power in dBm for a given transmit EIRP over a sampled link."""
    return (eirp_dbm + params.rx_gain_db - link.pathloss_db
            - link.shadowing_db - link.rain_db - link.fading_db)


@dataclass(frozen=True)
class NoiseModel:
    bandwidth_hz: float
    noise_figure_db: float
    thermal_dbm_per_hz: float = THERMAL_NOISE_DBM_HZ

    @property
    def total_dbm(self) -> float:
        if self.bandwidth_hz <= 0:
            raise ValueError(f"bandwidth_hz must be > 0, got {self.bandwidth_hz}")
        return (self.thermal_dbm_per_hz
                + 10.0 * math.log10(self.bandwidth_hz)
                + self.noise_figure_db)

    @property
    def total_mw(self) -> float:
        return 10.0 ** (self.total_dbm / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-trial sampled losses for every (transmitter, receiver) pair."""
    links: dict[tuple[int, int], LinkSample]
    rain_rate_mm_h: float
    params: ChannelParams

    def link(self, tx_id: int, rx_id: int) -> LinkSample:
        try:
            return self.links[(tx_id, rx_id)]
        except KeyError:
            raise MissingLinkError(
                f"no sampled link for tx={tx_id} rx={rx_id}") from None


def sample_realization(topology: Topology, params: ChannelParams,
                       rain_rate_mm_h: float,
                       shadow_rng: np.random.Generator,
                       fading_rng: Optional[np.random.Generator]) -> ChannelRealization:
    """Sample every uplink-relevant link of a topology, in a fixed order.

    Links run from every transmitter (UE or IAB node) to every receiver
    (donor or IAB node), both cells included, so interference toward any
    victim receiver is always available. ``fading_rng=None`` disables fading.
    """
    links: dict[tuple[int, int], LinkSample] = {}
    txs = sorted(topology.transmitters, key=lambda n: n.id)
    rxs = sorted(topology.receivers, key=lambda n: n.id)
    for tx in txs:
        for rx in rxs:
            if tx.id == rx.id:
                continue
            d3d = distance_3d(tx, rx)
            pl = pathloss_uma(d3d, rx.height, tx.height, params)
            shadow = sample_shadowing(shadow_rng, params)
            fade = sample_fading(fading_rng) if fading_rng is not None else 0.0
            rain = rain_attenuation(rain_rate_mm_h, d3d / 1e3, params)
            links[(tx.id, rx.id)] = LinkSample(
                tx_id=tx.id, rx_id=rx.id, d3d_m=d3d, pathloss_db=pl,
                shadowing_db=shadow, fading_db=fade, rain_db=rain)
    return ChannelRealization(links=links, rain_rate_mm_h=rain_rate_mm_h,
                              params=params)


def interference_at(victim_rx: NetworkNode, victim_rbs: frozenset[int],
                    co_slot_transmitters: Iterable[tuple[NetworkNode, float, frozenset[int]]],
                    realization: ChannelRealization) -> float:
    """Aggregate interference at a receiver, in linear milliwatts.

    Each co-slot transmitter contributes its received power scaled by the
    fraction of the victim's resource blocks it overlaps. The victim's own
    transmitter must not be in the list; the receiver itself is skipped.
    """
    if not victim_rbs:
        return 0.0
    total_mw = 0.0
    n_victim = len(victim_rbs)
    for node, eirp_dbm, rbs in co_slot_transmitters:
        if node.id == victim_rx.id:
            continue
        overlap = len(victim_rbs & rbs) / n_victim
        if overlap == 0.0:
            continue
        link = realization.link(node.id, victim_rx.id)
        p_r = received_power(eirp_dbm, link, realization.params)
        total_mw += overlap * 10.0 ** (p_r / 10.0)
    return total_mw


def sinr(p_r_dbm: float, interference_mw: float, noise: NoiseModel) -> float:
    """Linear SINR: signal over interference plus thermal noise."""
    return 10.0 ** (p_r_dbm / 10.0) / (interference_mw + noise.total_mw)


def achievable_rate(gamma: float, bw_hz: float) -> float:
    """Shannon rate in bits/s for a linear SINR over a bandwidth."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return bw_hz * math.log2(1.0 + gamma)


def min_sinr(rate_bps: float, bw_hz: float) -> float:
    """Minimum linear SINR sustaining a target rate; inverse of the rate."""
    if bw_hz <= 0:
        raise ValueError(f"bw_hz must be > 0, got {bw_hz}")
    return 2.0 ** (rate_bps / bw_hz) - 1.0
