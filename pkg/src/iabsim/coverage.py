"""End-to-end two-hop uplink service coverage.

A UE is covered when its access link clears the minimum SINR for the target
rate and, if relay-served, the serving relay's backhaul link clears the
minimum SINR for the aggregate of its children's target rates. Coverage
probability is the covered fraction, averaged over Monte-Carlo trials that
re-draw geometry, shadowing, fading, and rain.

Two evaluation paths exist: a readable per-link path (`evaluate_trial`) and
a vectorized batch path on a `ScenarioInstance` used by the power optimizer;
both compute the same link budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .channel import (ChannelParams, ChannelRealization, NoiseModel,
                      interference_at, min_sinr, received_power,
                      sample_realization, sinr)
from .config import ScenarioConfig
from .rng import derive_rng
from .scheduler import (Association, RbAllocation, SlotPlan, allocate_rbs,
                        associate, plan_slots)
from .topology import NodeRole, Topology, build_topology


class UeStatus(Enum):
    COVERED = "covered"
    ACCESS_FAIL = "access_fail"
    BACKHAUL_FAIL = "backhaul_fail"


@dataclass(frozen=True)
class ServiceRequirement:
    min_rate_bps: float = 64e3

    def __post_init__(self) -> None:
        if self.min_rate_bps <= 0:
            raise ValueError(f"min_rate_bps must be > 0, got {self.min_rate_bps}")


@dataclass(frozen=True)
class PowerVector:
    """One candidate power assignment: EIRP in dBm per UE and per IAB node."""
    eirp_dbm: Mapping[int, float]

    def of(self, node_id: int) -> float:
        return self.eirp_dbm[node_id]

    def as_array(self, ids: tuple[int, ...]) -> np.ndarray:
        return np.array([self.eirp_dbm[i] for i in ids], dtype=float)

    @staticmethod
    def from_array(ids: tuple[int, ...], values: np.ndarray) -> "PowerVector":
        return PowerVector({i: float(v) for i, v in zip(ids, values)})

    def total_power_mw(self) -> float:
        return float(sum(10.0 ** (v / 10.0) for v in self.eirp_dbm.values()))


@dataclass(frozen=True)
class CoverageResult:
    per_ue: dict[int, UeStatus]
    coverage_probability: float


def eirp_ranges(topology: Topology,
                config: ScenarioConfig) -> dict[int, tuple[float, float]]:
    """Per-node feasible EIRP range in dBm, by role."""
    ranges: dict[int, tuple[float, float]] = {}
    for node in topology.transmitters:
        if node.role is NodeRole.UE:
            ranges[node.id] = config.ue_eirp_range_dbm
        else:
            ranges[node.id] = config.iab_eirp_range_dbm
    return ranges


def evaluate_trial(topology: Topology, assoc: Association,
                   alloc: RbAllocation, slot_plan: SlotPlan,
                   powers: PowerVector, realization: ChannelRealization,
                   req: ServiceRequirement) -> CoverageResult:
    """Per-UE coverage evaluation over one channel realization.

    Access links are checked first; for relay-served UEs the serving relay's
    backhaul must also sustain the aggregate of its children's target rates.
    A failed backhaul marks every child of that relay BACKHAUL_FAIL. Missing
    realization entries raise; nothing is silently defaulted.
    """
    params = realization.params
    nf = params.noise_figure_db

    access_pass: dict[int, bool] = {}
    for ue in topology.ues:
        bs_id = assoc.ue_to_bs[ue.id]
        rbs = alloc.rbs_of(ue.id)
        bw = alloc.bandwidth_hz(ue.id)
        link = realization.link(ue.id, bs_id)
        p_r = received_power(powers.of(ue.id), link, params)
        slot = slot_plan.slot_of(ue.id)
        co = [(topology.node(j), powers.of(j), alloc.rbs_of(j))
              for j in sorted(slot) if j != ue.id]
        i_mw = interference_at(topology.node(bs_id), rbs, co, realization)
        gamma = sinr(p_r, i_mw, NoiseModel(bw, nf))
        access_pass[ue.id] = gamma >= min_sinr(req.min_rate_bps, bw)

    backhaul_pass: dict[int, bool] = {}
    for iab in topology.iab_nodes:
        children = assoc.children_of(iab.id)
        if not children:
            backhaul_pass[iab.id] = True
            continue
        donor_id = assoc.iab_to_donor[iab.id]
        union = alloc.rbs_of(iab.id)
        bw = alloc.bandwidth_hz(iab.id)
        link = realization.link(iab.id, donor_id)
        p_r = received_power(powers.of(iab.id), link, params)
        slot = slot_plan.slot_of(iab.id)
        co = [(topology.node(j), powers.of(j), alloc.rbs_of(j))
              for j in sorted(slot) if j != iab.id]
        i_mw = interference_at(topology.node(donor_id), union, co, realization)
        gamma = sinr(p_r, i_mw, NoiseModel(bw, nf))
        aggregate = req.min_rate_bps * len(children)
        backhaul_pass[iab.id] = gamma >= min_sinr(aggregate, bw)

    per_ue: dict[int, UeStatus] = {}
    for ue in topology.ues:
        bs = topology.node(assoc.ue_to_bs[ue.id])
        if bs.role is NodeRole.IAB and not backhaul_pass[bs.id]:
            per_ue[ue.id] = UeStatus.BACKHAUL_FAIL
        elif not access_pass[ue.id]:
            per_ue[ue.id] = UeStatus.ACCESS_FAIL
        else:
            per_ue[ue.id] = UeStatus.COVERED

    if per_ue:
        covered = sum(1 for s in per_ue.values() if s is UeStatus.COVERED)
        probability = covered / len(per_ue)
    else:
        probability = 1.0  # vacuous: no UEs to fail
    return CoverageResult(per_ue=per_ue, coverage_probability=probability)


class ScenarioInstance:
    """A frozen per-trial scenario with precomputed link-budget arrays.

    Received power is linear in transmit power, so per-link unit-EIRP
    constants are precomputed once; evaluating a batch of K candidate power
    vectors then reduces to one matrix product. This is what makes the
    optimizer's N*K fitness evaluations cheap.
    """

    def __init__(self, config: ScenarioConfig, topology: Topology,
                 assoc: Association, alloc: RbAllocation, slot_plan: SlotPlan,
                 realization: ChannelRealization, req: ServiceRequirement):
        self.config = config
        self.topology = topology
        self.assoc = assoc
        self.alloc = alloc
        self.slot_plan = slot_plan
        self.realization = realization
        self.req = req
        self.params = realization.params
        self._build_arrays()

    def _build_arrays(self) -> None:
        topo, alloc, assoc = self.topology, self.alloc, self.assoc
        params = self.params
        self.gene_ids: tuple[int, ...] = tuple(
            sorted(n.id for n in topo.transmitters))
        gene_index = {nid: k for k, nid in enumerate(self.gene_ids)}
        ranges = eirp_ranges(topo, self.config)
        self.lower = np.array([ranges[i][0] for i in self.gene_ids])
        self.upper = np.array([ranges[i][1] for i in self.gene_ids])

        ue_ids = sorted(u.id for u in topo.ues)
        iab_ids = sorted(i.id for i in topo.iab_nodes)
        self.ue_ids = tuple(ue_ids)
        links: list[tuple[int, int]] = []          # (tx, rx) per victim link
        gamma_min: list[float] = []
        noise_mw: list[float] = []
        vacuous: list[bool] = []
        for ue in ue_ids:
            links.append((ue, assoc.ue_to_bs[ue]))
            bw = alloc.bandwidth_hz(ue)
            gamma_min.append(min_sinr(self.req.min_rate_bps, bw))
            noise_mw.append(NoiseModel(bw, params.noise_figure_db).total_mw)
            vacuous.append(False)
        for iab in iab_ids:
            links.append((iab, assoc.iab_to_donor[iab]))
            children = assoc.children_of(iab)
            if children:
                bw = alloc.bandwidth_hz(iab)
                gamma_min.append(min_sinr(self.req.min_rate_bps * len(children), bw))
                noise_mw.append(NoiseModel(bw, params.noise_figure_db).total_mw)
                vacuous.append(False)
            else:
                gamma_min.append(0.0)
                noise_mw.append(1.0)
                vacuous.append(True)

        n_v = len(links)
        n_j = len(self.gene_ids)
        self.n_ue = len(ue_ids)
        self.tx_index = np.array([gene_index[tx] for tx, _ in links], dtype=int)
        self.gamma_min = np.array(gamma_min)
        self.noise_mw = np.array(noise_mw)
        self.vacuous = np.array(vacuous, dtype=bool)
        self.donor_served = np.array(
            [topo.node(assoc.ue_to_bs[u]).role is NodeRole.DONOR for u in ue_ids],
            dtype=bool)
        # Victim-row index of each relay's backhaul link, and its children's rows.
        self.family_rows: list[tuple[int, np.ndarray]] = []
        ue_row = {u: r for r, u in enumerate(ue_ids)}
        for k, iab in enumerate(iab_ids):
            rows = np.array([ue_row[c] for c in assoc.children_of(iab)], dtype=int)
            self.family_rows.append((self.n_ue + k, rows))

        # Unit-EIRP received power (linear mW at 0 dBm) per (victim, tx) pair,
        # weighted by RB overlap; zero unless tx shares the victim's slot.
        sig_const = np.empty(n_v)
        interf = np.zeros((n_v, n_j))
        for v, (tx_id, rx_id) in enumerate(links):
            link = self.realization.link(tx_id, rx_id)
            sig_const[v] = received_power(0.0, link, params)
            rbs_v = alloc.rbs_of(tx_id)
            if not rbs_v:
                continue
            slot = self.slot_plan.slot_of(tx_id)
            for j_id in slot:
                if j_id == tx_id or j_id == rx_id:
                    continue
                overlap = len(rbs_v & alloc.rbs_of(j_id)) / len(rbs_v)
                if overlap == 0.0:
                    continue
                c = received_power(0.0, self.realization.link(j_id, rx_id), params)
                interf[v, gene_index[j_id]] = overlap * 10.0 ** (c / 10.0)
        self.sig_lin = 10.0 ** (sig_const / 10.0)
        self.interf_lin = interf

    # -- fast path -------------------------------------------------------

    def batch_link_sinr(self, eirp_dbm: np.ndarray,
                        offset_db: float = 0.0) -> np.ndarray:
        """Linear SINR of every victim link for a (K, J) batch of EIRPs.

        ``offset_db`` shifts every transmit power at evaluation time
        (used for operating-point sweeps); it may push powers outside the
        role ranges since it models a network-wide margin, not a policy.
        """
        e = np.atleast_2d(np.asarray(eirp_dbm, dtype=float)) + offset_db
        a = 10.0 ** (e / 10.0)
        signal = a[:, self.tx_index] * self.sig_lin[None, :]
        interference = a @ self.interf_lin.T
        return signal / (interference + self.noise_mw[None, :])

    def batch_coverage(self, eirp_dbm: np.ndarray,
                       offset_db: float = 0.0) -> np.ndarray:
        """Coverage probability for each row of a (K, J) EIRP batch."""
        e2d = np.atleast_2d(np.asarray(eirp_dbm, dtype=float))
        if self.n_ue == 0:
            return np.ones(e2d.shape[0])
        gamma = self.batch_link_sinr(e2d, offset_db)
        link_pass = (gamma >= self.gamma_min[None, :]) | self.vacuous[None, :]
        ue_pass = link_pass[:, :self.n_ue].copy()
        for row, child_rows in self.family_rows:
            if child_rows.size:
                ue_pass[:, child_rows] &= link_pass[:, row][:, None]
        return ue_pass.mean(axis=1)

    def coverage_of(self, powers: PowerVector) -> float:
        return float(self.batch_coverage(powers.as_array(self.gene_ids))[0])

    def access_sinr_db(self, eirp_dbm: np.ndarray,
                       offset_db: float = 0.0) -> np.ndarray:
        """Per-UE access-link SINR in dB for one EIRP vector."""
        gamma = self.batch_link_sinr(eirp_dbm, offset_db)[0, :self.n_ue]
        return 10.0 * np.log10(gamma)

    # -- readable path ---------------------------------------------------

    def evaluate(self, powers: PowerVector) -> CoverageResult:
        return evaluate_trial(self.topology, self.assoc, self.alloc,
                              self.slot_plan, powers, self.realization,
                              self.req)

    # -- convenience policies -------------------------------------------

    def max_power_vector(self) -> PowerVector:
        return PowerVector.from_array(self.gene_ids, self.upper)

    def random_power_vector(self, rng: np.random.Generator) -> PowerVector:
        values = rng.uniform(self.lower, self.upper)
        return PowerVector.from_array(self.gene_ids, values)


def build_instance(config: ScenarioConfig, seed: int,
                   trial_index: int) -> ScenarioInstance:
    """Assemble one trial: geometry, channel, association, allocation, slots.

    Every random draw comes from a stream keyed by (seed, trial, purpose);
    trials are independent and reproducible in any execution order.
    """
    topo_rng = derive_rng(seed, trial_index, "ue-positions")
    topology = build_topology(config, topo_rng)
    lo, hi = config.rain_range_mm_h
    if hi > lo:
        rain_rate = float(derive_rng(seed, trial_index, "rain").uniform(lo, hi))
    else:
        rain_rate = float(lo)
    params = ChannelParams.from_config(config)
    fading_rng = derive_rng(seed, trial_index, "fading") if config.fading_enabled else None
    realization = sample_realization(
        topology, params, rain_rate,
        shadow_rng=derive_rng(seed, trial_index, "shadowing"),
        fading_rng=fading_rng)
    long_term = {(ue.id, bs.id): realization.link(ue.id, bs.id).long_term_loss_db
                 for ue in topology.ues
                 for bs in topology.base_stations(ue.cell_id)}
    assoc = associate(topology, long_term)
    alloc = allocate_rbs(assoc, topology, config)
    slot_plan = plan_slots(assoc, topology, config.slot_mode)
    req = ServiceRequirement(config.min_rate_bps)
    return ScenarioInstance(config, topology, assoc, alloc, slot_plan,
                            realization, req)


PowersPolicy = Callable[[ScenarioInstance, np.random.Generator], PowerVector]


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    coverage: float
    result: CoverageResult
    powers: PowerVector
    topology: Topology
    assoc: Association


@dataclass(frozen=True)
class MonteCarloResult:
    mean_coverage: float
    per_trial: np.ndarray
    outcomes: tuple[TrialOutcome, ...]


def run_trial(config: ScenarioConfig, powers_policy: PowersPolicy,
              seed: int, trial_index: int) -> TrialOutcome:
    """One self-contained Monte-Carlo trial (safe to run concurrently)."""
    instance = build_instance(config, seed, trial_index)
    policy_rng = derive_rng(seed, trial_index, "policy")
    powers = powers_policy(instance, policy_rng)
    result = instance.evaluate(powers)
    return TrialOutcome(trial_index=trial_index,
                        coverage=result.coverage_probability,
                        result=result, powers=powers,
                        topology=instance.topology, assoc=instance.assoc)


def monte_carlo_coverage(config: ScenarioConfig,
                         powers_policy: Union[str, PowersPolicy],
                         trials: int, seed: int,
                         workers: int = 1) -> MonteCarloResult:
    """Mean service coverage over independent trials.

    Each trial redraws the UE pattern and the channel, re-associates,
    re-allocates, applies the power policy, and evaluates coverage. The
    policy is a callable (instance, rng) -> PowerVector or one of
    "max" | "random" | "ga".
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if isinstance(powers_policy, str):
        from .policies import make_policy
        powers_policy = make_policy(powers_policy, config)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(
                lambda t: run_trial(config, powers_policy, seed, t),
                range(trials)))
    else:
        outcomes = [run_trial(config, powers_policy, seed, t)
                    for t in range(trials)]
    per_trial = np.array([o.coverage for o in outcomes])
    return MonteCarloResult(mean_coverage=float(per_trial.mean()),
                            per_trial=per_trial, outcomes=tuple(outcomes))
