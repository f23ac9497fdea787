"""Fiat-Shamir Schnorr proof of knowledge of the ElGamal randomness.

Relation: the prover knows ``k`` with ``C1 = k*G`` for a ciphertext
``(C1, C2)``. The challenge hashes the whole statement (``C1, C2, Q`` and a
context naming the product, the action and the step nonce), so a proof only
verifies for the exact ciphertext, public key and hop it was made for.

Wire formats::

    statement = C1 || C2 || Q || len(context):u32 || context
    proof     = T || e || s            (point, scalar, scalar)
    context   = lp(product_id) || lp(action) || step_nonce:u64
                where lp(x) = len(x):u32 || x

Challenges are drawn from ``[1, q-1]``; with ``e != 0`` a response made with
a wrong witness can never satisfy ``s*G = T + e*C1``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .elgamal import Ciphertext
from .errors import InvalidPoint, InvalidScalar, MalformedProof, WitnessMismatch
from .group import Group, Point

SHIP = b"SHIP"
RECEIVE = b"RECEIVE"
ACTIONS = (SHIP, RECEIVE)

CHALLENGE_DOMAIN = b"tracechain/nizk/challenge/v1"
NONCE_DOMAIN = b"tracechain/nizk/nonce/v1"
SIMULATOR_DOMAIN = b"tracechain/nizk/simulator/v1"


def make_context(product_id: bytes, action: bytes, step_nonce: int) -> bytes:
    if action not in ACTIONS:
        raise ValueError(f"unknown action tag {action!r}")
    if isinstance(product_id, str):
        product_id = product_id.encode()
    return (struct.pack(">I", len(product_id)) + product_id
            + struct.pack(">I", len(action)) + action
            + struct.pack(">Q", step_nonce))


def parse_context(context: bytes) -> tuple[bytes, bytes, int]:
    """Inverse of ``make_context``; raises ValueError on malformed input."""
    try:
        (n,) = struct.unpack_from(">I", context, 0)
        product_id = context[4:4 + n]
        off = 4 + n
        (m,) = struct.unpack_from(">I", context, off)
        action = context[off + 4:off + 4 + m]
        off += 4 + m
        (nonce,) = struct.unpack_from(">Q", context, off)
    except struct.error:
        raise ValueError("truncated context") from None
    if len(product_id) != n or off + 8 != len(context):
        raise ValueError("context length mismatch")
    if action not in ACTIONS:
        raise ValueError(f"unknown action tag {action!r}")
    return product_id, action, nonce


@dataclass(frozen=True)
class Statement:
    ciphertext: Ciphertext
    manufacturer_q: Point
    context: bytes

    def __post_init__(self):
        if not self.context:
            raise ValueError("context must be nonempty")
        parse_context(self.context)
        if self.manufacturer_q.group.name != self.ciphertext.group.name:
            raise TypeError("statement mixes groups")

    @property
    def group(self) -> Group:
        return self.ciphertext.group

    def to_bytes(self) -> bytes:
        return (self.ciphertext.to_bytes() + bytes(self.manufacturer_q)
                + struct.pack(">I", len(self.context)) + self.context)


@dataclass(frozen=True)
class Proof:
    commitment: Point
    challenge: int
    response: int

    def to_bytes(self) -> bytes:
        group = self.commitment.group
        return (bytes(self.commitment) + group.scalar_to_bytes(self.challenge)
                + group.scalar_to_bytes(self.response))

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "Proof":
        n, m = group.point_size, group.scalar_size
        if len(data) != n + 2 * m:
            raise MalformedProof(f"proof must be {n + 2 * m} bytes, got {len(data)}")
        try:
            t = group.point_from_bytes(data[:n])
            e = group.scalar_from_bytes(data[n:n + m])
            s = group.scalar_from_bytes(data[n + m:])
        except (InvalidPoint, InvalidScalar) as exc:
            raise MalformedProof(str(exc)) from None
        return cls(t, e, s)


def challenge(stmt: Statement, commitment: Point) -> int:
    return stmt.group.hash_to_scalar(CHALLENGE_DOMAIN, stmt.to_bytes(), commitment)


def prove(k: int, stmt: Statement, nonce_seed: bytes) -> Proof:
    group = stmt.group
    group.check_scalar(k, "witness")
    if group.base_mul(k) != stmt.ciphertext.c1:
        raise WitnessMismatch("k*G does not match the ciphertext's first component")
    r = group.hash_to_scalar(NONCE_DOMAIN, nonce_seed, group.scalar_to_bytes(k), stmt.to_bytes())
    t = group.base_mul(r)
    e = challenge(stmt, t)
    return Proof(t, e, (r + e * k) % group.order)


def verify(proof: Proof, stmt: Statement) -> bool:
    """Check a proof against a statement.

    Raises MalformedProof for elements outside the statement's group or
    unreduced scalars; any well-formed but wrong proof returns False.
    """
    group = stmt.group
    if not isinstance(proof.commitment, Point) or proof.commitment.group.name != group.name:
        raise MalformedProof("commitment is not an element of the statement group")
    for value in (proof.challenge, proof.response):
        if not isinstance(value, int) or not 0 <= value < group.order:
            raise MalformedProof("scalar out of range")
    if proof.challenge == 0:
        return False
    if proof.challenge != challenge(stmt, proof.commitment):
        return False
    lhs = group.base_mul(proof.response)
    return lhs == proof.commitment + proof.challenge * stmt.ciphertext.c1


def verify_bytes(data: bytes, stmt: Statement) -> bool:
    return verify(Proof.from_bytes(stmt.group, data), stmt)


def simulate(stmt: Statement, seed: bytes) -> Proof:
    """Honest-verifier simulator: a transcript that satisfies the verification
    equation, built without the witness by choosing ``e`` and ``s`` first.

    The result is not a valid Fiat-Shamir proof; ``verify`` rejects it unless
    the hash happens to agree.
    """
    group = stmt.group
    e = group.hash_to_scalar(SIMULATOR_DOMAIN, b"e", seed, stmt.to_bytes())
    s = group.hash_to_scalar(SIMULATOR_DOMAIN, b"s", seed, stmt.to_bytes())
    t = group.base_mul(s) - e * stmt.ciphertext.c1
    return Proof(t, e, s)


def transcript_holds(proof: Proof, stmt: Statement) -> bool:
    """Verification equation only, ignoring how the challenge was chosen."""
    group = stmt.group
    return group.base_mul(proof.response) == proof.commitment + proof.challenge * stmt.ciphertext.c1
