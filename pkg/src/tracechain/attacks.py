"""Executable versions of the three attacks on traceability.

=============  ===========================================  ==========
kind           what the attacker does                       expected
=============  ===========================================  ==========
foreign-key    owner encrypts the recipient under its own   blocked
               key Q' and builds the verifier and proof
               around Q'
impersonate    a third party without the token tries to     blocked
               ship the product and to receive a shipment
               meant for someone else
collude        owner and recipient agree on a substitute    succeeds
               address and hand the product over under it
=============  ===========================================  ==========

Collusion is a known limitation of the scheme: the proof only shows that
the recipient knows the token, not whose address was encrypted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from . import nizk
from .elgamal import encrypt, keygen
from .errors import HopFailed, UnknownAttackKind
from .group import Address
from .protocol import (Party, SupplyChain, deploy_verifier, execute_hop, owner_proof,
                       receive, recipient_proof, share_token, ship)

EXPECTED = {
    "foreign-key": "blocked",
    "impersonate": "blocked",
    "collude": "succeeded",
}


@dataclass(frozen=True)
class AttackOutcome:
    kind: str
    product_id: str
    verdict: str
    transactions: tuple[int, ...] = ()
    detail: str = ""
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def expected(self) -> str:
        return EXPECTED[self.kind]

    @property
    def matches_expectation(self) -> bool:
        return self.verdict == self.expected

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "product_id": self.product_id,
            "verdict": self.verdict,
            "expected": self.expected,
            "matches_expectation": self.matches_expectation,
            "transactions": list(self.transactions),
            "detail": self.detail,
            "notes": list(self.notes),
        }


def forge_proof(stmt: nizk.Statement, guessed_k: int, seed: bytes) -> nizk.Proof:
    """A Schnorr transcript built with a guessed witness, bypassing the
    witness check in ``nizk.prove``."""
    group = stmt.group
    r = group.hash_to_scalar(b"tracechain/forge", seed)
    t = group.base_mul(r)
    e = nizk.challenge(stmt, t)
    return nizk.Proof(t, e, (r + e * guessed_k) % group.order)


def foreign_key(chain: SupplyChain, product_id: str, owner: Party, recipient: Party) -> AttackOutcome:
    rec = chain.record(product_id)
    step = rec.step_nonce
    seed = chain.derive_seed("attack", "foreign-key", product_id, step)
    foreign = keygen(chain.group, seed + b"/key")
    proof_for_owner = owner_proof(chain, owner, product_id, seed + b"/ship")
    k = share_token(chain, owner, recipient, product_id, seed)
    enc = encrypt(foreign.public, chain.group.encode_address(recipient.address), k)

    txs = [deploy_verifier(chain, owner, product_id, enc, manufacturer_q=foreign.public)]
    txs.append(ship(chain, owner, product_id, enc, txs[0].created, proof_for_owner))
    if txs[-1].succeeded:
        proof = recipient_proof(chain, recipient, product_id, k, seed + b"/receive",
                                manufacturer_q=foreign.public)
        txs.append(receive(chain, recipient, product_id, proof))
    owner_changed = chain.record(product_id).step_nonce != step
    blocked = not owner_changed and not txs[-1].succeeded
    return AttackOutcome(
        "foreign-key", product_id, "blocked" if blocked else "succeeded",
        tuple(t.index for t in txs),
        f"last step {txs[-1].operation} -> {txs[-1].status}"
        + (f" ({txs[-1].revert_reason})" if txs[-1].revert_reason else ""),
        ("the shipment stays pending with a verifier bound to the foreign key",),
    )


def impersonate(chain: SupplyChain, product_id: str, owner: Party, recipient: Party,
                impersonator: Party, guesses: int = 3) -> AttackOutcome:
    group = chain.group
    step = chain.record(product_id).step_nonce
    seed = chain.derive_seed("attack", "impersonate", product_id, step)
    q = chain.manufacturer_key(product_id)
    attempts = []

    # 1. ship the product away while posing as its owner
    rec = chain.record(product_id)
    fake_k = group.hash_to_scalar(b"guess", seed, b"ship")
    fake_enc = encrypt(q, group.encode_address(impersonator.address), fake_k)
    vc = deploy_verifier(chain, impersonator, product_id, fake_enc)
    ship_stmt = nizk.Statement(rec.current_owner_enc, q,
                               nizk.make_context(product_id, nizk.SHIP, step))
    for i in range(guesses):
        guess = group.hash_to_scalar(b"guess", seed, b"owner", i)
        proof = forge_proof(ship_stmt, guess, seed + b"/ship/" + bytes([i]))
        attempts.append(ship(chain, impersonator, product_id, fake_enc, vc.created,
                             proof.to_bytes()))

    # 2. receive a legitimate shipment addressed to someone else
    k = share_token(chain, owner, recipient, product_id, seed)
    enc = encrypt(q, group.encode_address(recipient.address), k)
    legit_vc = deploy_verifier(chain, owner, product_id, enc)
    legit_ship = ship(chain, owner, product_id, enc, legit_vc.created,
                      owner_proof(chain, owner, product_id, seed + b"/owner"))
    if not legit_ship.succeeded:
        raise HopFailed("ship", legit_ship.revert_reason, [legit_vc, legit_ship])
    recv_stmt = nizk.Statement(enc, q, nizk.make_context(product_id, nizk.RECEIVE, step))
    for i in range(guesses):
        guess = group.hash_to_scalar(b"guess", seed, b"receive", i)
        proof = forge_proof(recv_stmt, guess, seed + b"/recv/" + bytes([i]))
        attempts.append(receive(chain, impersonator, product_id, proof.to_bytes()))
    # replay the most recent receive proof seen on the public log
    previous = [tx for tx in chain.ledger.read_log(contract=chain.pmc_id, product=product_id)
                if tx.operation == "receive" and tx.succeeded]
    if previous:
        attempts.append(receive(chain, impersonator, product_id, dict(previous[-1].args)["proof"]))

    # the rightful recipient completes the hop afterwards
    honest = receive(chain, recipient, product_id,
                     recipient_proof(chain, recipient, product_id, k, seed + b"/honest"))
    blocked = all(not t.succeeded for t in attempts) and honest.succeeded
    reasons = sorted({t.revert_reason for t in attempts if t.revert_reason})
    return AttackOutcome(
        "impersonate", product_id, "blocked" if blocked else "succeeded",
        tuple(t.index for t in [vc, *attempts, legit_vc, legit_ship, honest]),
        f"{sum(not t.succeeded for t in attempts)}/{len(attempts)} impersonation calls reverted "
        f"({', '.join(reasons)}); rightful receive -> {honest.status}",
    )


def collude(chain: SupplyChain, product_id: str, owner: Party, recipient: Party,
            substitute: Address) -> AttackOutcome:
    try:
        hop = execute_hop(chain, owner, recipient, product_id, recipient_address=substitute)
    except HopFailed as exc:
        return AttackOutcome("collude", product_id, "blocked",
                             tuple(t.index for t in exc.transactions), str(exc))
    return AttackOutcome(
        "collude", product_id, "succeeded", tuple(t.index for t in hop.transactions),
        f"ownership recorded as Enc({substitute}) instead of the recipient's address",
        ("known limitation: the proof does not bind the encrypted address to the recipient",),
    )


def attack(kind: str, chain: SupplyChain, product_id: str, owner: Party, recipient: Party,
           impersonator: Optional[Party] = None,
           substitute: Optional[Address] = None) -> AttackOutcome:
    if kind == "foreign-key":
        return foreign_key(chain, product_id, owner, recipient)
    if kind == "impersonate":
        if impersonator is None:
            raise ValueError("impersonate needs an impersonator")
        return impersonate(chain, product_id, owner, recipient, impersonator)
    if kind == "collude":
        if substitute is None:
            raise ValueError("collude needs a substitute address")
        return collude(chain, product_id, owner, recipient, substitute)
    raise UnknownAttackKind(kind)
