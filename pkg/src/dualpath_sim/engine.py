"""Deterministic simulation substrate: cost model, environment, timeseries.

Node ids follow a fixed convention: 0 is the requester, 1 is the provider,
ids 2..n-1 are the intermediate peers. The membership server (supernode)
sits outside the id space; it never relays and never fails. Requester and
provider are always up and carry no congestion delay of their own.

Random-stream splitting: every random draw derives from the master seed
through a ``SeedSequence`` keyed by (seed, scenario stream key, purpose).
The environment streams (one congestion profile, one failure matrix with a
row per repetition) are shared by both protocols, which is what makes a
comparison paired: at a given (tick, rep) both protocols see the same
congestion and the same set of dead nodes. Each protocol consumes its own
decision stream sequentially across a tick's repetitions.

Streams are reused across ticks (common random numbers): the congestion
profile is a fixed per-node uniform draw scaled by the tick's traffic
level, the failure matrix is one realization applied at every tick, and
the per-tick decision streams restart from the same substream seed. Sweep
curves therefore vary only through the scheduled parameters instead of
re-rolled sampling noise, which is what makes per-tick comparisons between
the protocols meaningful at finite repetition counts. Repetitions within a
tick remain independent transactions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Literal, Optional, Sequence

import numpy as np

from . import crowds as crowds_mod
from . import dualpath as dualpath_mod
from .config import ConfigError, CrowdsConfig, DualPathConfig, SimConfig
from .onion import PeerId

REQUESTER: PeerId = 0
PROVIDER: PeerId = 1
FIRST_RELAY: PeerId = 2

_TRAFFIC, _FAILURES, _CROWDS, _DUALPATH = range(4)

PROTOCOLS = ("crowds", "dualpath")


@dataclass
class NodeState:
    """Liveness and congestion of one node."""

    id: PeerId
    up: bool = True
    extra_delay_ms: float = 0.0


def hop_delay(payload_kb: float, sender: Optional[NodeState], cfg: SimConfig) -> float:
    """Transmission delay of one hop: linear in size plus sender congestion."""
    if payload_kb < 0:
        raise ValueError("payload_kb must be nonnegative")
    extra = sender.extra_delay_ms if sender is not None else 0.0
    return payload_kb * cfg.hop_ms_per_kb + extra


def crypto_cost(kind: Literal["seal", "open"], payload_kb: float, cfg: SimConfig) -> float:
    """Cost of sealing/opening one layer, proportional to the payload it
    carries. Routing headers are free, so header-only layers cost zero."""
    if payload_kb < 0:
        raise ValueError("payload_kb must be nonnegative")
    if kind == "seal":
        return payload_kb * cfg.encrypt_ms_per_kb
    if kind == "open":
        return payload_kb * cfg.decrypt_ms_per_kb
    raise ValueError(f"unknown crypto operation {kind!r}")


def sample_failures(rng: Random, nodes: Sequence[NodeState], drop_ratio: float) -> list[NodeState]:
    """Re-draw liveness: each intermediate node is independently down with
    probability ``drop_ratio``; requester and provider are exempt."""
    if not 0.0 <= drop_ratio <= 1.0:
        raise ValueError("drop_ratio must lie in [0, 1]")
    out = []
    for node in nodes:
        if node.id in (REQUESTER, PROVIDER):
            out.append(NodeState(node.id, True, node.extra_delay_ms))
        else:
            out.append(NodeState(node.id, rng.random() >= drop_ratio,
                                 node.extra_delay_ms))
    return out


@dataclass(frozen=True)
class TickParams:
    """Scheduled environment for one tick."""

    tick: int
    payload_kb: float
    traffic_mean_ms: float
    num_nodes: int
    drop_ratio: float


@dataclass(frozen=True)
class Schedule:
    """Per-tick parameter schedule, total over all ticks."""

    scenario_id: str
    stream_key: int
    params: tuple[TickParams, ...]


@dataclass(frozen=True)
class DelaySample:
    """One transaction's recorded delay."""

    protocol: str
    tick: int
    delay_ms: float
    failed: bool


@dataclass
class TickStats:
    """Per-tick aggregate over all repetitions."""

    tick: int
    mean_ms: float
    sem_ms: float
    failures: int
    samples: Optional[list[float]] = None


class NetworkView:
    """Liveness, congestion and cost model handle for one repetition."""

    def __init__(self, cfg: SimConfig, extras: Sequence[float], up=None):
        self.cfg = cfg
        self.extras = extras
        self.up = up
        self.fetch_kb = cfg.recovery_fetch_kb

    def is_up(self, peer: PeerId) -> bool:
        if peer in (REQUESTER, PROVIDER):
            return True
        return self.up is None or bool(self.up[peer])

    def extra_ms(self, peer: PeerId) -> float:
        return self.extras[peer]

    def hop_ms(self, payload_kb: float, sender: Optional[PeerId]) -> float:
        extra = self.extras[sender] if sender is not None else 0.0
        return payload_kb * self.cfg.hop_ms_per_kb + extra

    def seal_ms(self, payload_kb: float) -> float:
        return payload_kb * self.cfg.encrypt_ms_per_kb

    def open_ms(self, payload_kb: float) -> float:
        return payload_kb * self.cfg.decrypt_ms_per_kb


@dataclass
class ScenarioEnv:
    """Realized environment of one run, shared by both protocols.

    ``profile`` holds the per-node congestion quantile for ids 2..max_n-1;
    a tick's extra delays are ``profile * spread * traffic_mean``.
    ``up_matrix`` holds one liveness row per repetition, applied at every
    tick that has a nonzero drop ratio.
    """

    max_nodes: int
    profile: Optional[np.ndarray]
    ranked_all: list[PeerId]
    up_matrix: Optional[np.ndarray]


@dataclass
class TickEnv:
    """One tick's realized environment."""

    params: TickParams
    extras: list[float]
    up_rows: Optional[np.ndarray]
    eligible: list[PeerId]
    ranked: list[PeerId]
    crowds_first_pool: list[PeerId]
    crowds_rest_pool: list[PeerId]


def stream_seed(seed: int, stream_key: int, purpose: int) -> int:
    """Derive one deterministic substream seed."""
    ss = np.random.SeedSequence(entropy=(seed, stream_key, purpose))
    return int(ss.generate_state(2, dtype=np.uint64)[0])


def build_scenario_env(cfg: SimConfig, schedule: Schedule, reps: int) -> ScenarioEnv:
    """Realize the shared congestion profile and failure matrix."""
    max_nodes = max(tp.num_nodes for tp in schedule.params)
    needs_traffic = any(tp.traffic_mean_ms > 0.0 for tp in schedule.params)
    needs_failures = any(tp.drop_ratio > 0.0 for tp in schedule.params)

    profile = None
    ranked_all = list(range(FIRST_RELAY, max_nodes))
    if needs_traffic:
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
            entropy=(cfg.seed, schedule.stream_key, _TRAFFIC))))
        profile = gen.random(max_nodes - FIRST_RELAY)
        order = np.lexsort((np.arange(FIRST_RELAY, max_nodes), profile))
        ranked_all = [int(i) + FIRST_RELAY for i in order]

    up_matrix = None
    if needs_failures:
        drop = max(tp.drop_ratio for tp in schedule.params)
        if len({tp.drop_ratio for tp in schedule.params if tp.drop_ratio > 0.0}) > 1:
            raise ConfigError("schedule mixes different nonzero drop ratios")
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
            entropy=(cfg.seed, schedule.stream_key, _FAILURES))))
        up_matrix = gen.random((reps, max_nodes)) >= drop
        up_matrix[:, REQUESTER] = True
        up_matrix[:, PROVIDER] = True
    return ScenarioEnv(max_nodes, profile, ranked_all, up_matrix)


def build_tick_env(cfg: SimConfig, schedule: Schedule, index: int, reps: int,
                   scenario_env: Optional[ScenarioEnv] = None) -> TickEnv:
    """Scale the shared environment to one tick's scheduled parameters."""
    env = scenario_env or build_scenario_env(cfg, schedule, reps)
    tp = schedule.params[index]
    n = tp.num_nodes
    eligible = list(range(FIRST_RELAY, n))

    if tp.traffic_mean_ms > 0.0 and env.profile is not None:
        scale = cfg.traffic_spread * tp.traffic_mean_ms
        extras = [0.0, 0.0] + (env.profile[:n - FIRST_RELAY] * scale).tolist()
        ranked = (env.ranked_all if n == env.max_nodes
                  else [p for p in env.ranked_all if p < n])
    else:
        extras = [0.0] * n
        ranked = eligible

    up_rows = env.up_matrix if tp.drop_ratio > 0.0 else None
    return TickEnv(
        params=tp,
        extras=extras,
        up_rows=up_rows,
        eligible=eligible,
        ranked=ranked,
        crowds_first_pool=eligible,
        crowds_rest_pool=[REQUESTER] + eligible,
    )


def static_schedule(cfg: SimConfig, scenario_id: str = "static", stream_key: int = 0) -> Schedule:
    """A schedule that repeats the base configuration every tick."""
    params = tuple(
        TickParams(tick=t, payload_kb=cfg.payload_kb, traffic_mean_ms=0.0,
                   num_nodes=cfg.num_nodes, drop_ratio=cfg.effective_drop_ratio)
        for t in range(1, cfg.ticks + 1))
    return Schedule(scenario_id, stream_key, params)


def _validate(protocol: str, schedule: Schedule, cfg: SimConfig,
              crowds_cfg: CrowdsConfig, dualpath_cfg: DualPathConfig) -> None:
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}")
    cfg.validate()
    crowds_cfg.validate()
    dualpath_cfg.validate()
    if len(schedule.params) != cfg.ticks:
        raise ConfigError("schedule does not cover the configured ticks")
    min_nodes = min(tp.num_nodes for tp in schedule.params)
    if protocol == "dualpath":
        need = 2 * dualpath_cfg.path_length + 2
        if min_nodes < need:
            raise ConfigError(
                f"num_nodes {min_nodes} cannot host two disjoint paths of "
                f"length {dualpath_cfg.path_length} (need {need})")
    else:
        if min_nodes < 3:
            raise ConfigError("crowds needs at least one member besides the endpoints")
    for tp in schedule.params:
        if tp.payload_kb < 0 or tp.traffic_mean_ms < 0 or not 0 <= tp.drop_ratio <= 1:
            raise ConfigError(f"invalid schedule entry at tick {tp.tick}")


def run_timeseries(protocol: str, schedule: Schedule, cfg: SimConfig,
                   crowds_cfg: Optional[CrowdsConfig] = None,
                   dualpath_cfg: Optional[DualPathConfig] = None,
                   *, ledger=None, keep_samples: bool = False) -> list[TickStats]:
    """Run ``cfg.reps`` transactions per tick and return per-tick stats.

    Fully deterministic given (seed, schedule, configs). ``ledger``, when
    given, receives one cost term per line in the form
    ``tick rep protocol term_kind ms``.
    """
    crowds_cfg = crowds_cfg or CrowdsConfig.from_sim(cfg)
    dualpath_cfg = dualpath_cfg or DualPathConfig.from_sim(cfg)
    _validate(protocol, schedule, cfg, crowds_cfg, dualpath_cfg)

    reps = cfg.reps
    scenario_env = build_scenario_env(cfg, schedule, reps)
    purpose = _CROWDS if protocol == "crowds" else _DUALPATH
    substream = stream_seed(cfg.seed, schedule.stream_key, purpose)
    out: list[TickStats] = []
    for index, tp in enumerate(schedule.params):
        env = build_tick_env(cfg, schedule, index, reps, scenario_env)
        kb = tp.payload_kb
        hop_k = kb * cfg.hop_ms_per_kb
        seal_k = kb * cfg.encrypt_ms_per_kb
        open_k = kb * cfg.decrypt_ms_per_kb
        samples: Optional[list[float]] = [] if keep_samples else None
        term_sink = None
        if ledger is not None:
            def term_sink(rep, kind, ms, _tick=tp.tick, _proto=protocol):
                ledger.write(f"{_tick} {rep} {_proto} {kind} {ms:.6f}\n")

        rng = Random(substream)
        if protocol == "crowds":
            c_seal = seal_k if cfg.crowds_hop_crypto else 0.0
            c_open = open_k if cfg.crowds_hop_crypto else 0.0
            total, total_sq, failures = crowds_mod.simulate_tick(
                rng, reps, env.crowds_first_pool, env.crowds_rest_pool,
                env.up_rows, env.extras, crowds_cfg, hop_k, c_seal, c_open,
                REQUESTER, PROVIDER, samples, term_sink)
        else:
            fetch_ms = 2.0 * cfg.recovery_fetch_kb * cfg.hop_ms_per_kb
            timeout_ms = cfg.timeout_factor * dualpath_mod.static_transaction_ms(
                dualpath_cfg.path_length, dualpath_cfg.path_length,
                hop_k, seal_k, open_k)
            total, total_sq, failures = dualpath_mod.simulate_tick(
                rng, reps, dualpath_cfg, env.eligible, env.ranked,
                env.up_rows, env.extras, hop_k, seal_k, open_k,
                fetch_ms, timeout_ms, REQUESTER, PROVIDER, samples, term_sink)

        mean = total / reps
        if reps > 1:
            var = max(total_sq - reps * mean * mean, 0.0) / (reps - 1)
            sem = math.sqrt(var / reps)
        else:
            sem = 0.0
        out.append(TickStats(tp.tick, mean, sem, failures, samples))
    return out
