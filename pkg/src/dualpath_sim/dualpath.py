"""Dual-path lifecycle: path selection, rotation, transactions, recovery.

A dual path is a pair of requester-chosen relay sequences, one for the
request onion and one for the response. The requester may re-draw both
paths before any transaction (rotation) and must re-draw them after a
failed one (recovery). Rotation is blind to liveness, mirroring a real
requester that only discovers dead relays by using them; recovery draws
from members known to be up because the requester just refreshed the
member list, which is also what the recovery penalty pays for.

Transaction cost accounting, in charge order:

  seal(payload)                      requester wraps the onion
  hop * (len(request)+1)             each sender adds its congestion delay
  open(payload)                      provider opens the payload layer
  seal(payload)                      provider seals for the first response peer
  per response relay: hop, open(payload), seal(payload)
  hop, open(payload)                 final leg to the requester

Relay layers of the request onion carry only routing headers, which cost
nothing; the payload is charged where a layer actually carries it. The
pure :func:`walk_transaction` prices a transaction from this schedule and
:func:`transact` executes the real codec while charging the same terms,
so the two can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Mapping, Optional, Sequence

from . import onion
from .config import DualPathConfig
from .onion import CipherSuite, Payload, PeerId


class SelectionError(Exception):
    """Not enough eligible members to build the configured paths."""


TrafficMap = Mapping[PeerId, float]


@dataclass(frozen=True)
class DualPath:
    """One request path and one response path with their relay budgets."""

    request_path: tuple[PeerId, ...]
    response_path: tuple[PeerId, ...]
    request_hop_limit: int
    response_hop_limit: int


@dataclass(frozen=True)
class TransactionOutcome:
    delay_ms: float
    hops_used: int
    failed: bool


@dataclass(frozen=True)
class RecoveryOutcome:
    path: "DualPath"
    penalty_ms: float


def should_rotate(rng: Random, change_probability: float) -> bool:
    """Decide, once per transaction, whether to re-draw both paths."""
    if not 0.0 <= change_probability <= 1.0:
        raise ValueError("change_probability must lie in [0, 1]")
    return rng.random() < change_probability


def _finish(rng: Random, request: list[PeerId], response: list[PeerId]) -> DualPath:
    # Hop limits differ per path: minimum viable budget plus random slack.
    return DualPath(
        request_path=tuple(request),
        response_path=tuple(response),
        request_hop_limit=len(request) + 1 + rng.randrange(2),
        response_hop_limit=len(response) + 1 + rng.randrange(2),
    )


def _split(rng: Random, chosen: Sequence[PeerId], length: int) -> tuple[list, list]:
    pool = list(chosen)
    rng.shuffle(pool)
    return pool[:length], pool[length:]


def _sample_distinct_up(rng: Random, pool: Sequence[PeerId], k: int, up) -> list[PeerId]:
    """Uniform sample without replacement from the up members of ``pool``.

    Rejection sampling avoids materializing the up subset; the exact scan
    fallback only runs when the pool is nearly dead.
    """
    if up is None:
        if len(pool) < k:
            raise SelectionError(f"need {k} distinct peers, have {len(pool)}")
        return rng.sample(pool, k)
    chosen: list[PeerId] = []
    seen: set[PeerId] = set()
    size = len(pool)
    budget = 64 * k + 64
    while len(chosen) < k and budget:
        budget -= 1
        candidate = pool[rng.randrange(size)]
        if candidate in seen or not up[candidate]:
            continue
        seen.add(candidate)
        chosen.append(candidate)
    if len(chosen) < k:
        rest = [m for m in pool if up[m] and m not in seen]
        if len(chosen) + len(rest) < k:
            raise SelectionError(
                f"need {k} distinct up peers, have {len(chosen) + len(rest)}")
        chosen.extend(rng.sample(rest, k - len(chosen)))
    return chosen


def select_uniform(rng: Random, eligible: Sequence[PeerId], cfg: DualPathConfig,
                   up=None) -> DualPath:
    """Uniform-random selection, without replacement across both paths
    when ``disjoint_paths`` is set."""
    length = cfg.path_length
    if cfg.disjoint_paths:
        chosen = _sample_distinct_up(rng, eligible, 2 * length, up)
        return _finish(rng, chosen[:length], chosen[length:])
    return _finish(rng, _sample_distinct_up(rng, eligible, length, up),
                   _sample_distinct_up(rng, eligible, length, up))


def select_traffic_aware(rng: Random, ranked: Sequence[PeerId], cfg: DualPathConfig,
                         up=None) -> DualPath:
    """Pick the lowest-traffic eligible peers and split them randomly.

    ``ranked`` must already be sorted by (traffic, peer id); the up filter
    keeps the first alive peers in that order.
    """
    length = cfg.path_length
    need = 2 * length
    if up is None:
        chosen = list(ranked[:need])
    else:
        chosen = []
        for m in ranked:
            if up[m]:
                chosen.append(m)
                if len(chosen) == need:
                    break
    if len(chosen) < need:
        raise SelectionError(f"need {need} up peers, have {len(chosen)}")
    request, response = _split(rng, chosen, length)
    return _finish(rng, request, response)


def rank_by_traffic(eligible: Sequence[PeerId], traffic: Optional[TrafficMap]) -> list[PeerId]:
    """Sort eligible peers by observed extra delay, peer id breaking ties."""
    if not traffic:
        return sorted(eligible)
    return sorted(eligible, key=lambda m: (traffic.get(m, 0.0), m))


def select_paths(rng: Random, members: Sequence[PeerId], requester: PeerId,
                 provider: PeerId, cfg: DualPathConfig,
                 traffic: Optional[TrafficMap] = None, up=None) -> DualPath:
    """Select a fresh dual path from the current member list.

    ``up``, when given, restricts the draw to live members (used during
    recovery); otherwise all eligible members are candidates.
    """
    cfg.validate()
    eligible = [m for m in members if m != requester and m != provider]
    if cfg.selection_mode == "traffic-aware":
        return select_traffic_aware(rng, rank_by_traffic(eligible, traffic), cfg, up)
    return select_uniform(rng, eligible, cfg, up)


# ---------------------------------------------------------------------------
# Cost walk (pure arithmetic over the charge schedule in the module docstring)
# ---------------------------------------------------------------------------

def walk_transaction(path: DualPath, requester: PeerId, provider: PeerId,
                     hop_k: float, seal_k: float, open_k: float,
                     extras: Sequence[float], up=None,
                     terms: Optional[list] = None):
    """Price one transaction; returns ``(delay_ms, hops_used, delivered)``.

    Stops at the first down relay, returning the cost accrued so far; the
    send to the dead peer itself is never charged.
    """
    delay = seal_k
    if terms is not None:
        terms.append(("seal", seal_k))
    hops = 0
    prev = requester
    for peer in path.request_path:
        if up is not None and not up[peer]:
            return delay, hops, False
        hop = hop_k + extras[prev]
        delay += hop
        hops += 1
        if terms is not None:
            terms.append(("hop", hop))
        prev = peer
    hop = hop_k + extras[prev]
    delay += hop + open_k + seal_k
    hops += 1
    if terms is not None:
        terms.append(("hop", hop))
        terms.append(("open", open_k))
        terms.append(("seal", seal_k))
    prev = provider
    for peer in path.response_path:
        if up is not None and not up[peer]:
            return delay, hops, False
        hop = hop_k + extras[prev]
        delay += hop + open_k + seal_k
        hops += 1
        if terms is not None:
            terms.append(("hop", hop))
            terms.append(("open", open_k))
            terms.append(("seal", seal_k))
        prev = peer
    hop = hop_k + extras[prev]
    delay += hop + open_k
    hops += 1
    if terms is not None:
        terms.append(("hop", hop))
        terms.append(("open", open_k))
    return delay, hops, True


def static_transaction_ms(request_len: int, response_len: int,
                          hop_k: float, seal_k: float, open_k: float) -> float:
    """Closed-form delay of a successful transaction with no congestion."""
    transmissions = request_len + response_len + 2
    payload_layers = response_len + 2
    return transmissions * hop_k + payload_layers * (seal_k + open_k)


# ---------------------------------------------------------------------------
# Codec-driven transaction (the executable counterpart of the cost walk)
# ---------------------------------------------------------------------------

def transact(requester: PeerId, provider: PeerId, dual_path: DualPath,
             payload: Payload, cipher: CipherSuite, network,
             terms: Optional[list] = None) -> TransactionOutcome:
    """Run one full request/response cycle through the real codec.

    ``network`` supplies liveness, congestion and the cost model (see
    ``engine.NetworkView``). The provider answers with a payload of the
    same size; delay accrues exactly as in :func:`walk_transaction`, so the
    two agree term by term on identical inputs.
    """
    kb = payload.size_kb
    hop_ms = network.hop_ms
    seal_k = network.seal_ms(kb)
    open_k = network.open_ms(kb)

    packet = onion.build_response_path(requester, dual_path.response_path, cipher)
    msg = onion.wrap_request(payload, dual_path.request_path, provider, packet,
                             cipher, dual_path.request_hop_limit)
    delay = seal_k
    if terms is not None:
        terms.append(("seal", seal_k))
    hops = 0
    prev = requester
    while True:
        receiver = msg.addressed_to
        if receiver != provider and not network.is_up(receiver):
            return TransactionOutcome(delay, hops, True)
        hop = hop_ms(kb, prev)
        delay += hop
        hops += 1
        if terms is not None:
            terms.append(("hop", hop))
        result = onion.peel(receiver, msg, cipher)
        if isinstance(result, onion.Relay):
            prev = receiver
            msg = result.message
            continue
        delivered, response_packet = result.payload, result.response
        break
    if delivered.data != payload.data:
        raise onion.CodecError("request payload corrupted in transit")
    delay += open_k
    if terms is not None:
        terms.append(("open", open_k))

    response_payload = payload
    env = onion.start_response(provider, response_payload, response_packet, cipher)
    delay += seal_k
    if terms is not None:
        terms.append(("seal", seal_k))
    prev = provider
    while True:
        receiver = env.addressed_to
        if receiver != requester and not network.is_up(receiver):
            return TransactionOutcome(delay, hops, True)
        hop = hop_ms(kb, prev)
        delay += hop
        hops += 1
        if terms is not None:
            terms.append(("hop", hop))
        result = onion.step_response(receiver, env, cipher)
        delay += open_k
        if terms is not None:
            terms.append(("open", open_k))
        if isinstance(result, onion.ResponseFinal):
            if result.payload.data != response_payload.data:
                raise onion.CodecError("response payload corrupted in transit")
            return TransactionOutcome(delay, hops, False)
        delay += seal_k
        if terms is not None:
            terms.append(("seal", seal_k))
        prev = receiver
        env = result.envelope


def recover(rng: Random, members: Sequence[PeerId], requester: PeerId,
            provider: PeerId, cfg: DualPathConfig,
            traffic: Optional[TrafficMap], network,
            payload_kb: float) -> RecoveryOutcome:
    """Re-establish a dual path after a failed transaction.

    The fresh path is drawn from currently-up members. The penalty is one
    membership-fetch round trip plus the crypto cost of re-wrapping the
    request onion for the new path.
    """
    path = select_paths(rng, members, requester, provider, cfg, traffic,
                        up=network.up)
    fetch = 2.0 * network.hop_ms(network.fetch_kb, None)
    penalty = fetch + network.seal_ms(payload_kb)
    return RecoveryOutcome(path, penalty)


# ---------------------------------------------------------------------------
# Engine tick loop
# ---------------------------------------------------------------------------

def simulate_tick(rng: Random, reps: int, dcfg: DualPathConfig,
                  eligible: Sequence[PeerId], ranked: Sequence[PeerId],
                  up_rows, extras: Sequence[float],
                  hop_k: float, seal_k: float, open_k: float,
                  fetch_ms: float, timeout_ms: float,
                  requester: PeerId, provider: PeerId,
                  samples: Optional[list] = None, term_sink=None):
    """Run ``reps`` dual-path transactions under one tick's environment.

    The requester keeps its current dual path across repetitions, rotating
    it with ``change_probability`` before each transaction and rebuilding it
    from up members after a failure. A failed repetition's delay is the
    partial cost of the failed attempt plus the recovery penalty plus the
    retried transaction; if no recovery is possible the repetition is
    recorded at the timeout cap. Returns ``(total, total_sq, failures)``.
    """
    traffic_aware = dcfg.selection_mode == "traffic-aware"
    change_p = dcfg.change_probability
    rnd = rng.random
    total = 0.0
    total_sq = 0.0
    failures = 0

    def fresh(up=None) -> DualPath:
        if traffic_aware:
            return select_traffic_aware(rng, ranked, dcfg, up)
        return select_uniform(rng, eligible, dcfg, up)

    path = fresh()
    for rep in range(reps):
        terms = [] if term_sink is not None else None
        if rnd() < change_p:
            path = fresh()
        up = up_rows[rep] if up_rows is not None else None
        delay, hops, delivered = walk_transaction(
            path, requester, provider, hop_k, seal_k, open_k, extras, up, terms)
        if not delivered:
            failures += 1
            try:
                new_path = fresh(up)
            except SelectionError:
                delay = timeout_ms
                if terms is not None:
                    terms = [("timeout", timeout_ms)]
                path = fresh()
            else:
                penalty = fetch_ms + seal_k
                if terms is not None:
                    terms.append(("fetch", fetch_ms))
                    terms.append(("seal", seal_k))
                retry, _, ok = walk_transaction(
                    new_path, requester, provider, hop_k, seal_k, open_k,
                    extras, up, terms)
                assert ok, "recovery path drawn from up members cannot fail"
                delay += penalty + retry
                path = new_path
        total += delay
        total_sq += delay * delay
        if samples is not None:
            samples.append(delay)
        if term_sink is not None:
            for kind, ms in terms:
                term_sink(rep, kind, ms)
    return total, total_sq, failures
