"""Deterministic delay simulator comparing two anonymous P2P protocols.

Dual-path routing sends requests and responses over two requester-chosen
relay paths using layered sealing; crowds forwards requests through random
jondos with a coin flip per hop. The simulator reproduces their
performance and reliability comparison across payload size, congestion,
network size and node-failure sweeps.
"""

from .config import ConfigError, CrowdsConfig, DualPathConfig, SimConfig
from .crowds import Blender, CrowdsRoute, RoutingError, route_request, route_response
from .dualpath import (
    DualPath,
    SelectionError,
    TransactionOutcome,
    recover,
    select_paths,
    should_rotate,
    transact,
)
from .engine import (
    DelaySample,
    NetworkView,
    NodeState,
    Schedule,
    TickParams,
    TickStats,
    crypto_cost,
    hop_delay,
    run_timeseries,
    sample_failures,
)
from .fitting import FitResult, fit_polynomial
from .onion import (
    CipherError,
    CipherSuite,
    CodecError,
    Delivery,
    HopLimitError,
    Payload,
    PeerId,
    Relay,
    ResponseEnvelope,
    ResponseFinal,
    ResponsePathPacket,
    ResponseRelay,
    TaggedCipher,
    WrappedMessage,
    build_response_path,
    peel,
    start_response,
    step_response,
    wrap_request,
)
from .report import export_report
from .scenarios import (
    SCENARIO_ORDER,
    SCENARIOS,
    ScenarioSeries,
    ScenarioSpec,
    build_schedule,
    improvement_ratio,
    run_scenario,
)

__version__ = "0.1.0"
