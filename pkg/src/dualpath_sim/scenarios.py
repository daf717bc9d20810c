"""The nine comparison experiments and their execution.

Performance scenarios (S1-S5) run with every node up; reliability
scenarios (R1-R4) drop intermediate nodes at the configured ratio every
repetition. Sweeps are linear over the tick axis: payload goes 1 to 100
KB, the mean congestion delay grows by ``traffic_rate`` per tick, and the
network grows from 10 to 1000 nodes. Scenarios whose mechanism is traffic
use traffic-aware path selection for the dual-path side; the rest use
uniform selection.

Both protocols in a scenario run on identical environment streams (same
seed, same schedule), so per-(tick, rep) failure and congestion
realizations are paired and the series differ only through protocol
behavior.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Optional

from .config import ConfigError, CrowdsConfig, DualPathConfig, SimConfig
from .engine import Schedule, TickParams, TickStats, run_timeseries
from .fitting import FitResult, fit_polynomial

PAYLOAD_SWEEP_MIN_KB = 1.0
PAYLOAD_SWEEP_MAX_KB = 100.0
NODE_SWEEP_MIN = 10
NODE_SWEEP_MAX = 1000


@dataclass(frozen=True)
class ScenarioSpec:
    """Declarative experiment definition."""

    id: str
    title: str
    sweep_payload: bool = False
    sweep_traffic: bool = False
    sweep_nodes: bool = False
    failures: bool = False
    selection_mode: str = "uniform"
    crowds_fit_degree: int = 1
    dualpath_fit_degree: int = 1


SCENARIOS: dict[str, ScenarioSpec] = {spec.id: spec for spec in (
    ScenarioSpec("S1", "static parameters"),
    ScenarioSpec("S2", "rising network traffic", sweep_traffic=True,
                 selection_mode="traffic-aware",
                 crowds_fit_degree=2, dualpath_fit_degree=1),
    ScenarioSpec("S3", "rising payload size", sweep_payload=True,
                 crowds_fit_degree=2, dualpath_fit_degree=2),
    ScenarioSpec("S4", "rising payload size and traffic", sweep_payload=True,
                 sweep_traffic=True, selection_mode="traffic-aware",
                 crowds_fit_degree=2, dualpath_fit_degree=2),
    ScenarioSpec("S5", "growing node count", sweep_nodes=True),
    ScenarioSpec("R1", "node failures", failures=True),
    ScenarioSpec("R2", "node failures and rising traffic", sweep_traffic=True,
                 failures=True, selection_mode="traffic-aware"),
    ScenarioSpec("R3", "node failures and rising payload size",
                 sweep_payload=True, failures=True,
                 crowds_fit_degree=2, dualpath_fit_degree=2),
    ScenarioSpec("R4", "node failures, rising payload size and traffic",
                 sweep_payload=True, sweep_traffic=True, failures=True,
                 selection_mode="traffic-aware",
                 crowds_fit_degree=2, dualpath_fit_degree=2),
)}

SCENARIO_ORDER = tuple(SCENARIOS)
_STREAM_KEYS = {sid: i + 1 for i, sid in enumerate(SCENARIO_ORDER)}


def _stream_key(scenario_id: str) -> int:
    return _STREAM_KEYS.get(scenario_id, zlib.crc32(scenario_id.encode()))


def _fraction(tick: int, ticks: int) -> float:
    return (tick - 1) / (ticks - 1) if ticks > 1 else 0.0


def build_schedule(spec: ScenarioSpec, cfg: SimConfig) -> Schedule:
    """Expand a scenario into concrete per-tick parameters."""
    params = []
    for tick in range(1, cfg.ticks + 1):
        u = _fraction(tick, cfg.ticks)
        payload = (PAYLOAD_SWEEP_MIN_KB + u * (PAYLOAD_SWEEP_MAX_KB - PAYLOAD_SWEEP_MIN_KB)
                   if spec.sweep_payload else cfg.payload_kb)
        traffic = cfg.traffic_rate * tick if spec.sweep_traffic else 0.0
        nodes = (NODE_SWEEP_MIN + math.ceil(u * (NODE_SWEEP_MAX - NODE_SWEEP_MIN))
                 if spec.sweep_nodes else cfg.num_nodes)
        drop = cfg.drop_ratio if spec.failures else 0.0
        params.append(TickParams(tick, payload, traffic, nodes, drop))
    return Schedule(spec.id, _stream_key(spec.id), tuple(params))


def improvement_ratio(crowds_delay: float, dualpath_delay: float) -> float:
    """The comparison metric: (crowds delay - dual-path delay) / 100."""
    return (crowds_delay - dualpath_delay) / 100.0


@dataclass(frozen=True)
class ScenarioSeries:
    """Everything one scenario run produced."""

    scenario_id: str
    title: str
    ticks: tuple[int, ...]
    crowds_ms: tuple[float, ...]
    crowds_sem: tuple[float, ...]
    crowds_failures: tuple[int, ...]
    dualpath_ms: tuple[float, ...]
    dualpath_sem: tuple[float, ...]
    dualpath_failures: tuple[int, ...]
    improvement: tuple[float, ...]
    crowds_fit: FitResult
    dualpath_fit: FitResult


def _series(stats: list[TickStats]):
    return (tuple(s.mean_ms for s in stats),
            tuple(s.sem_ms for s in stats),
            tuple(s.failures for s in stats))


def run_scenario(spec: ScenarioSpec, cfg: SimConfig, *,
                 crowds_overrides: Optional[dict] = None,
                 dualpath_overrides: Optional[dict] = None,
                 ledger=None, keep_samples: bool = False,
                 crowds_stats_out: Optional[list] = None,
                 dualpath_stats_out: Optional[list] = None) -> ScenarioSeries:
    """Run both protocols on identical schedules and summarize.

    Protocol configs derive from the shared ``decision_ratio`` and the
    scenario's selection mode; explicit overrides win over both.
    """
    ccfg = CrowdsConfig(forward_probability=cfg.decision_ratio)
    dcfg = DualPathConfig(change_probability=cfg.decision_ratio,
                          selection_mode=spec.selection_mode)
    for key, value in (crowds_overrides or {}).items():
        if not hasattr(ccfg, key):
            raise ConfigError(f"unknown crowds setting {key!r}")
        setattr(ccfg, key, value)
    for key, value in (dualpath_overrides or {}).items():
        if not hasattr(dcfg, key):
            raise ConfigError(f"unknown dual-path setting {key!r}")
        setattr(dcfg, key, value)

    schedule = build_schedule(spec, cfg)
    crowds_stats = run_timeseries("crowds", schedule, cfg, ccfg, dcfg,
                                  ledger=ledger, keep_samples=keep_samples)
    dualpath_stats = run_timeseries("dualpath", schedule, cfg, ccfg, dcfg,
                                    ledger=ledger, keep_samples=keep_samples)
    if crowds_stats_out is not None:
        crowds_stats_out.extend(crowds_stats)
    if dualpath_stats_out is not None:
        dualpath_stats_out.extend(dualpath_stats)

    crowds_ms, crowds_sem, crowds_fail = _series(crowds_stats)
    dual_ms, dual_sem, dual_fail = _series(dualpath_stats)
    ticks = tuple(s.tick for s in crowds_stats)
    improvement = tuple(improvement_ratio(c, d) for c, d in zip(crowds_ms, dual_ms))
    xs = [float(t) for t in ticks]
    return ScenarioSeries(
        scenario_id=spec.id,
        title=spec.title,
        ticks=ticks,
        crowds_ms=crowds_ms,
        crowds_sem=crowds_sem,
        crowds_failures=crowds_fail,
        dualpath_ms=dual_ms,
        dualpath_sem=dual_sem,
        dualpath_failures=dual_fail,
        improvement=improvement,
        crowds_fit=fit_polynomial(crowds_ms, spec.crowds_fit_degree, xs),
        dualpath_fit=fit_polynomial(dual_ms, spec.dualpath_fit_degree, xs),
    )


def resolve_scenarios(requested) -> list[ScenarioSpec]:
    """Map scenario id strings (or 'all') to specs, rejecting unknown ids."""
    names: list[str] = []
    for item in requested:
        names.extend(part.strip() for part in item.split(",") if part.strip())
    if not names or "all" in names:
        return [SCENARIOS[sid] for sid in SCENARIO_ORDER]
    specs = []
    for name in names:
        if name not in SCENARIOS:
            raise KeyError(name)
        specs.append(SCENARIOS[name])
    return specs
