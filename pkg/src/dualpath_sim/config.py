"""Configuration dataclasses and validation for the simulator."""

from __future__ import annotations

from dataclasses import dataclass


class ConfigError(ValueError):
    """A configuration value is outside its documented range."""


@dataclass
class SimConfig:
    """Global simulation parameters.

    The cost rates are per KB of carried payload: ``hop_ms_per_kb`` is the
    transmission delay between two nodes, ``encrypt_ms_per_kb`` and
    ``decrypt_ms_per_kb`` the cost of sealing/opening one payload-bearing
    layer. ``decision_ratio`` is the coin both protocols share: a Crowds
    node forwards with this probability, a dual-path requester re-draws its
    paths with it. ``drop_ratio`` only takes effect while
    ``failures_enabled`` is set; performance scenarios run with every node
    up. ``traffic_rate`` scales how fast the mean per-node congestion delay
    grows per tick in traffic scenarios, and ``traffic_spread`` stretches
    the uniform distribution it is drawn from (spread 2 keeps the
    population mean at rate * tick).
    """

    num_nodes: int = 200
    payload_kb: float = 1.0
    hop_ms_per_kb: float = 1.92
    encrypt_ms_per_kb: float = 0.8
    decrypt_ms_per_kb: float = 9.3
    drop_ratio: float = 0.4
    decision_ratio: float = 0.5
    reps: int = 5000
    ticks: int = 100
    seed: int = 42
    traffic_rate: float = 0.12
    traffic_spread: float = 2.0
    failures_enabled: bool = False
    crowds_hop_crypto: bool = True
    timeout_factor: float = 10.0
    recovery_fetch_kb: float = 1.0

    @property
    def effective_drop_ratio(self) -> float:
        return self.drop_ratio if self.failures_enabled else 0.0

    def validate(self) -> None:
        if self.num_nodes < 3:
            raise ConfigError("num_nodes must be at least 3")
        if self.payload_kb < 0:
            raise ConfigError("payload_kb must be nonnegative")
        for name in ("hop_ms_per_kb", "encrypt_ms_per_kb", "decrypt_ms_per_kb",
                     "traffic_rate", "traffic_spread", "recovery_fetch_kb"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if not 0.0 <= self.drop_ratio <= 1.0:
            raise ConfigError("drop_ratio must lie in [0, 1]")
        if not 0.0 <= self.decision_ratio <= 1.0:
            raise ConfigError("decision_ratio must lie in [0, 1]")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.ticks < 1:
            raise ConfigError("ticks must be at least 1")
        if self.timeout_factor <= 0:
            raise ConfigError("timeout_factor must be positive")


@dataclass
class CrowdsConfig:
    """Crowds routing knobs.

    ``forward_probability`` must stay below 1 or routes never terminate;
    ``max_hops`` caps route length as a safety net (at the default 64 the
    cap is statistically invisible for any realistic probability).
    """

    forward_probability: float = 0.5
    max_hops: int = 64

    def validate(self) -> None:
        if not 0.0 <= self.forward_probability < 1.0:
            raise ConfigError("forward_probability must lie in [0, 1)")
        if self.max_hops < 1:
            raise ConfigError("max_hops must be at least 1")

    @classmethod
    def from_sim(cls, cfg: SimConfig) -> "CrowdsConfig":
        return cls(forward_probability=cfg.decision_ratio)


SELECTION_MODES = ("uniform", "traffic-aware")


@dataclass
class DualPathConfig:
    """Dual-path selection knobs.

    ``selection_mode`` is either ``uniform`` (paths drawn uniformly at
    random) or ``traffic-aware`` (the least congested peers are picked and
    split randomly across the two paths). With ``disjoint_paths`` the
    request and response paths never share a peer.
    """

    path_length: int = 3
    change_probability: float = 0.5
    selection_mode: str = "uniform"
    disjoint_paths: bool = True

    def validate(self) -> None:
        if self.path_length < 0:
            raise ConfigError("path_length must be nonnegative")
        if not 0.0 <= self.change_probability <= 1.0:
            raise ConfigError("change_probability must lie in [0, 1]")
        if self.selection_mode not in SELECTION_MODES:
            raise ConfigError(f"selection_mode must be one of {SELECTION_MODES}")

    @classmethod
    def from_sim(cls, cfg: SimConfig) -> "DualPathConfig":
        return cls(change_probability=cfg.decision_ratio)
