"""Crowds membership (blender) and probabilistic request routing.

The requester always forwards to one random jondo; every following node
flips the forwarding coin and either relays to another random member or
submits to the provider. Responses tunnel back along the reversed route.
Routing draws only from members that are currently up, so a route always
exists while at least one eligible member is alive.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random
from typing import Iterable, Optional, Sequence

from .config import CrowdsConfig
from .onion import PeerId


class RoutingError(Exception):
    """No eligible forwarding target is available."""


class Blender:
    """Centralized membership directory; join order is the iteration order."""

    def __init__(self, members: Iterable[PeerId] = ()):
        self._members: list[PeerId] = []
        self._known: set[PeerId] = set()
        for peer in members:
            self.register(peer)

    def register(self, peer: PeerId) -> list[PeerId]:
        """Add a member and return the full current member list."""
        if peer in self._known:
            raise ValueError(f"peer {peer} is already a member")
        self._known.add(peer)
        self._members.append(peer)
        return list(self._members)

    @property
    def members(self) -> tuple[PeerId, ...]:
        return tuple(self._members)

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, peer: PeerId) -> bool:
        return peer in self._known

    def __iter__(self):
        return iter(self._members)


@dataclass(frozen=True)
class CrowdsRoute:
    """Jondos visited by one request, requester and provider excluded."""

    hops: tuple[PeerId, ...]


def _pick_up(rng: Random, pool: Sequence[PeerId], up) -> PeerId:
    """Uniform draw from ``pool`` restricted to up members.

    Rejection sampling keeps the draw uniform over the up subset without
    materializing it; the fallback scan handles nearly-dead pools exactly.
    """
    if up is None:
        return pool[rng.randrange(len(pool))]
    for _ in range(64):
        candidate = pool[rng.randrange(len(pool))]
        if up[candidate]:
            return candidate
    alive = [m for m in pool if up[m]]
    if not alive:
        raise RoutingError("no up member available to forward to")
    return alive[rng.randrange(len(alive))]


def sample_route(rng: Random, first_pool: Sequence[PeerId], rest_pool: Sequence[PeerId],
                 forward_probability: float, max_hops: int, up=None) -> list[PeerId]:
    """Draw one route: a mandatory first jondo, then coin-driven forwards."""
    if not first_pool:
        raise RoutingError("no eligible member besides requester and provider")
    hops = [_pick_up(rng, first_pool, up)]
    while len(hops) < max_hops and rng.random() < forward_probability:
        hops.append(_pick_up(rng, rest_pool, up))
    return hops


def route_request(rng: Random, requester: PeerId, provider: PeerId,
                  members: Sequence[PeerId], cfg: CrowdsConfig,
                  up=None) -> CrowdsRoute:
    """Route one request through the crowd.

    The first hop never targets the requester itself; later forwards may
    revisit any member (including the current node or the requester), which
    is why a route can contain repeats. The provider is the destination and
    never relays. ``up``, when given, is indexable by peer id and marks
    which members are currently alive.
    """
    cfg.validate()
    first_pool = [m for m in members if m != requester and m != provider]
    rest_pool = [m for m in members if m != provider]
    hops = sample_route(rng, first_pool, rest_pool,
                        cfg.forward_probability, cfg.max_hops, up)
    return CrowdsRoute(tuple(hops))


def route_response(route: CrowdsRoute) -> tuple[PeerId, ...]:
    """Response hops: the request route reversed."""
    if not route.hops:
        raise ValueError("route is empty")
    return tuple(reversed(route.hops))


def simulate_tick(rng: Random, reps: int, first_pool: Sequence[PeerId],
                  rest_pool: Sequence[PeerId], up_rows, extras: Sequence[float],
                  cfg: CrowdsConfig, hop_k: float, seal_k: float, open_k: float,
                  requester: PeerId, provider: PeerId,
                  samples: Optional[list] = None, term_sink=None):
    """Run ``reps`` Crowds transactions under one tick's environment.

    ``hop_k``, ``seal_k`` and ``open_k`` are per-leg costs already scaled by
    the tick's payload size (the crypto costs are passed as zero when
    per-hop crypto is disabled). Each leg costs ``hop_k + seal_k + open_k``
    plus the sender's congestion delay; a route of H jondos makes H+1 legs
    each way. Returns ``(total, total_sq, failures)``.
    """
    p = cfg.forward_probability
    max_hops = cfg.max_hops
    leg = hop_k + seal_k + open_k
    total = 0.0
    total_sq = 0.0
    for rep in range(reps):
        up = up_rows[rep] if up_rows is not None else None
        hops = sample_route(rng, first_pool, rest_pool, p, max_hops, up)
        extra_sum = 0.0
        for h in hops:
            extra_sum += extras[h]
        legs = 2 * len(hops) + 2
        delay = legs * leg + 2.0 * extra_sum
        if term_sink is not None:
            _emit_terms(term_sink, rep, hops, extras, hop_k, seal_k, open_k,
                        requester, provider)
        total += delay
        total_sq += delay * delay
        if samples is not None:
            samples.append(delay)
    return total, total_sq, 0


def _emit_terms(term_sink, rep: int, hops, extras, hop_k: float, seal_k: float,
                open_k: float, requester: PeerId, provider: PeerId) -> None:
    # Request leg senders: requester then each jondo. Response leg senders:
    # provider then the jondos in reverse. Per-hop crypto is one seal at the
    # sender and one open at the receiver.
    senders = [requester] + list(hops) + [provider] + list(reversed(hops))
    for sender in senders:
        if seal_k:
            term_sink(rep, "seal", seal_k)
        term_sink(rep, "hop", hop_k + extras[sender])
        if open_k:
            term_sink(rep, "open", open_k)
