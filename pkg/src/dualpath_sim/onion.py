"""Layered request/response message codec for the dual-path cycle.

A request travels as an onion: one sealed layer per relay on the request
path plus an innermost layer for the provider. Each relay layer exposes
only the next hop; the innermost layer carries the payload together with a
recursive response-path packet the requester pre-built. A response-path
packet has two parts: the next peer in clear and an opaque tail sealed for
that peer. Peeling the tail at each response relay yields either another
(next peer, tail) pair or a terminator telling the holder it is the final
recipient. The provider and every response relay re-seal the response
payload for the next hop, so the payload is never in transit unsealed.

All functions are pure over immutable values and safe to call from any
number of threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

PeerId = int

_PEER = struct.Struct(">I")
_LEN = struct.Struct(">I")

_BODY_RELAY = 0x01
_BODY_DELIVERY = 0x02
_TAIL_LAYER = 0x01
_TAIL_FINAL = 0x00


class CodecError(Exception):
    """Malformed layer structure."""


class CipherError(CodecError):
    """A layer was opened by a peer it was not sealed for."""


class HopLimitError(CodecError):
    """Relay budget exhausted before delivery."""


@dataclass(frozen=True)
class Payload:
    """Message body; size is measured in KB of 1024 bytes."""

    data: bytes

    @property
    def size_kb(self) -> float:
        return len(self.data) / 1024.0

    @classmethod
    def of_kb(cls, kb: float) -> "Payload":
        n = round(kb * 1024)
        if n < 0:
            raise ValueError("payload size must be nonnegative")
        pattern = bytes(range(256))
        return cls((pattern * (n // 256 + 1))[:n])


class CipherSuite:
    """Recipient-bound reversible sealing.

    ``open(p, seal(p, x)) == x`` for every peer ``p``; opening at any other
    peer must raise :class:`CipherError`. Real public-key cryptography can
    plug in behind this interface; the simulator only needs the binding.
    """

    def seal(self, recipient: PeerId, plaintext: bytes) -> bytes:
        raise NotImplementedError

    def open(self, recipient: PeerId, ciphertext: bytes) -> bytes:
        raise NotImplementedError


class TaggedCipher(CipherSuite):
    """Stand-in cipher: prefix the recipient id, reverse the bytes.

    Enforces recipient binding (the tag check) without any cryptographic
    strength, which is all the delay model requires.
    """

    def seal(self, recipient: PeerId, plaintext: bytes) -> bytes:
        return _PEER.pack(recipient) + plaintext[::-1]

    def open(self, recipient: PeerId, ciphertext: bytes) -> bytes:
        if len(ciphertext) < _PEER.size:
            raise CipherError("ciphertext too short to carry a recipient tag")
        (tag,) = _PEER.unpack_from(ciphertext)
        if tag != recipient:
            raise CipherError(f"layer sealed for peer {tag}, opened at {recipient}")
        return ciphertext[_PEER.size:][::-1]


@dataclass(frozen=True)
class ResponsePathPacket:
    """One response-path layer: next hop in clear, remainder opaque."""

    next_peer: PeerId
    tail: bytes


@dataclass(frozen=True)
class WrappedMessage:
    """A request onion addressed to one peer, with a relay budget."""

    addressed_to: PeerId
    body: bytes
    hop_limit: int


@dataclass(frozen=True)
class ResponseEnvelope:
    """In-flight response: payload sealed for the addressee plus its tail."""

    addressed_to: PeerId
    sealed_payload: bytes
    tail: bytes


@dataclass(frozen=True)
class Relay:
    """Peel result at a relay: forward ``message`` to ``next_peer``."""

    next_peer: PeerId
    message: WrappedMessage


@dataclass(frozen=True)
class Delivery:
    """Peel result at the provider: payload plus the response-path packet."""

    payload: Payload
    response: ResponsePathPacket


@dataclass(frozen=True)
class ResponseRelay:
    """Step result at a response relay: forward the re-sealed envelope."""

    envelope: ResponseEnvelope


@dataclass(frozen=True)
class ResponseFinal:
    """Step result at the requester: the response payload arrived."""

    payload: Payload


def _check_distinct(peers, *, exclude: dict[str, PeerId]) -> None:
    if len(set(peers)) != len(peers):
        raise ValueError("path contains duplicate peers")
    for role, peer in exclude.items():
        if peer in peers:
            raise ValueError(f"path must not contain the {role} (peer {peer})")


def build_response_path(requester: PeerId, response_peers, cipher: CipherSuite) -> ResponsePathPacket:
    """Build the recursive packet that routes a response back to ``requester``.

    Opening the tail at response peer k reveals peer k+1; the innermost
    terminator, sealed for the requester, marks it as the final recipient.
    With no response peers the packet addresses the requester directly.
    """
    peers = list(response_peers)
    _check_distinct(peers, exclude={"requester": requester})
    chain = peers + [requester]
    tail = cipher.seal(chain[-1], bytes([_TAIL_FINAL]))
    for holder, nxt in zip(reversed(chain[:-1]), reversed(chain[1:])):
        tail = cipher.seal(holder, bytes([_TAIL_LAYER]) + _PEER.pack(nxt) + tail)
    return ResponsePathPacket(next_peer=chain[0], tail=tail)


def wrap_request(payload: Payload, request_peers, provider: PeerId,
                 response_packet: ResponsePathPacket, cipher: CipherSuite,
                 hop_limit: int) -> WrappedMessage:
    """Wrap ``payload`` in one layer per request peer plus the provider layer.

    The innermost layer, sealed for the provider, carries the payload and
    the response-path packet; every outer layer names only the next hop.
    ``hop_limit`` must cover every peel including delivery, i.e. be at
    least ``len(request_peers) + 1``.
    """
    peers = list(request_peers)
    _check_distinct(peers, exclude={"provider": provider})
    if hop_limit < len(peers) + 1:
        raise ValueError(
            f"hop_limit {hop_limit} cannot deliver through {len(peers)} relays")
    inner = (bytes([_BODY_DELIVERY]) + _LEN.pack(len(payload.data)) + payload.data
             + _PEER.pack(response_packet.next_peer) + response_packet.tail)
    body = cipher.seal(provider, inner)
    addressed_to = provider
    for peer in reversed(peers):
        body = cipher.seal(peer, bytes([_BODY_RELAY]) + _PEER.pack(addressed_to) + body)
        addressed_to = peer
    return WrappedMessage(addressed_to=addressed_to, body=body, hop_limit=hop_limit)


def peel(at: PeerId, msg: WrappedMessage, cipher: CipherSuite):
    """Open one onion layer at ``at``.

    Returns :class:`Relay` at an intermediate layer and :class:`Delivery`
    at the provider layer. A wrong peer fails inside the cipher; an
    exhausted hop limit drops the message before any decryption.
    """
    if msg.hop_limit <= 0:
        raise HopLimitError("hop limit exhausted, message dropped")
    plain = cipher.open(at, msg.body)
    if not plain:
        raise CodecError("empty layer")
    kind = plain[0]
    if kind == _BODY_RELAY:
        (next_peer,) = _PEER.unpack_from(plain, 1)
        inner = plain[1 + _PEER.size:]
        return Relay(next_peer, WrappedMessage(next_peer, inner, msg.hop_limit - 1))
    if kind == _BODY_DELIVERY:
        (size,) = _LEN.unpack_from(plain, 1)
        start = 1 + _LEN.size
        data = plain[start:start + size]
        if len(data) != size:
            raise CodecError("truncated delivery payload")
        (next_peer,) = _PEER.unpack_from(plain, start + size)
        tail = plain[start + size + _PEER.size:]
        return Delivery(Payload(data), ResponsePathPacket(next_peer, tail))
    raise CodecError(f"unknown layer marker {kind:#x}")


def start_response(provider: PeerId, response_payload: Payload,
                   response: ResponsePathPacket, cipher: CipherSuite) -> ResponseEnvelope:
    """Seal the response for the first response peer and attach the tail."""
    if not response.tail:
        raise ValueError("response packet has an empty tail")
    return ResponseEnvelope(
        addressed_to=response.next_peer,
        sealed_payload=cipher.seal(response.next_peer, response_payload.data),
        tail=response.tail,
    )


def step_response(at: PeerId, env: ResponseEnvelope, cipher: CipherSuite):
    """Process a response envelope at ``at``.

    The peer opens its payload layer and its tail layer; a tail layer names
    the next hop and the payload is re-sealed for it, while the terminator
    means ``at`` is the requester and the payload is final.
    """
    data = cipher.open(at, env.sealed_payload)
    tail_plain = cipher.open(at, env.tail)
    if not tail_plain:
        raise CodecError("empty response tail")
    kind = tail_plain[0]
    if kind == _TAIL_FINAL:
        return ResponseFinal(Payload(data))
    if kind == _TAIL_LAYER:
        (next_peer,) = _PEER.unpack_from(tail_plain, 1)
        rest = tail_plain[1 + _PEER.size:]
        return ResponseRelay(ResponseEnvelope(
            addressed_to=next_peer,
            sealed_payload=cipher.seal(next_peer, data),
            tail=rest,
        ))
    raise CodecError(f"unknown tail marker {kind:#x}")


def describe_layers(msg: WrappedMessage, cipher: CipherSuite) -> str:
    """Render the onion's layer structure as indented text (diagnostics)."""
    lines: list[str] = []
    current = WrappedMessage(msg.addressed_to, msg.body, max(msg.hop_limit, 1 << 30))
    depth = 0
    while True:
        result = peel(current.addressed_to, current, cipher)
        pad = "  " * depth
        if isinstance(result, Relay):
            lines.append(f"{pad}relay at {current.addressed_to} -> {result.next_peer}")
            current = result.message
            depth += 1
        else:
            lines.append(
                f"{pad}delivery at {current.addressed_to}: payload {len(result.payload.data)}B,"
                f" response starts at {result.response.next_peer}")
            break
    return "\n".join(lines)
