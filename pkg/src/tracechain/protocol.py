"""Party-side logic: setup, the ship/receive hop and manufacturer tracking.

A hop from an owner to a recipient runs eight steps:

1. owner and recipient share a fresh token ``k`` off-ledger
2. owner encrypts the recipient's address under the manufacturer's key
3. owner deploys a verifier bound to that ciphertext
4. owner records the ciphertext and verifier in PMC, proving it owns the product
5. recipient proves knowledge of ``k``
6-8. recipient submits the proof; PMC has the verifier check it and moves
   ownership to the new ciphertext

Only the manufacturer transacts from its identity address. Every other
party sends each transaction from a fresh one-shot account, so its identity
address never appears on the ledger.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from . import nizk
from .contracts import ManufacturerManager, ProductRecord, ProductsManager, Verifier
from .elgamal import Ciphertext, KeyPair, decrypt, encrypt, keygen
from .errors import DecodeFailure, HopFailed, NotManufacturerKey, ProofError
from .group import Address, Group, Point
from .ledger import Account, GasSchedule, Ledger, Transaction


class Role(str, Enum):
    MANUFACTURER = "manufacturer"
    DISTRIBUTOR = "distributor"
    RETAILER = "retailer"
    CONSUMER = "consumer"


@dataclass
class Party:
    name: str
    role: Role
    account: Account
    keypair: Optional[KeyPair] = None
    # (product_id, history index) -> token opening that history entry
    known_tokens: dict[tuple[str, int], int] = field(default_factory=dict)
    fee_accounts: list[Account] = field(default_factory=list)

    @property
    def address(self) -> Address:
        return self.account.address

    def token(self, product_id: str, index: int) -> Optional[int]:
        return self.known_tokens.get((product_id, index))


@dataclass(frozen=True)
class HopResult:
    deploy: Transaction
    ship: Transaction
    receive: Transaction

    @property
    def transactions(self) -> tuple[Transaction, ...]:
        return (self.deploy, self.ship, self.receive)


@dataclass(frozen=True)
class TrackingEntry:
    hop: int
    tx_index: Optional[int]
    address: Optional[Address]


@dataclass(frozen=True)
class TrackingReport:
    product_id: str
    entries: tuple[TrackingEntry, ...]
    complete: bool

    @property
    def addresses(self) -> list[Optional[Address]]:
        return [e.address for e in self.entries]

    def to_dict(self, names: Optional[dict[Address, str]] = None) -> dict[str, Any]:
        names = names or {}
        return {
            "product_id": self.product_id,
            "complete": self.complete,
            "owners": [
                {"hop": e.hop, "tx_index": e.tx_index,
                 "address": str(e.address) if e.address else None,
                 "party": names.get(e.address) if e.address else None}
                for e in self.entries
            ],
        }

    def to_text(self, names: Optional[dict[Address, str]] = None) -> str:
        names = names or {}
        lines = [f"product {self.product_id} ({'complete' if self.complete else 'INCOMPLETE'})"]
        for e in self.entries:
            addr = str(e.address) if e.address else "<undecodable>"
            lines.append(f"  {e.hop:>3}  tx {e.tx_index if e.tx_index is not None else '-':>4}  "
                         f"{addr}  {names.get(e.address, '')}".rstrip())
        return "\n".join(lines)


class SupplyChain:
    """One ledger with MMC and PMC deployed, plus the parties using it."""

    def __init__(self, group: Group, schedule: Optional[GasSchedule] = None,
                 seed: bytes = b"tracechain"):
        self.group = group
        self.seed = seed
        self.ledger = Ledger(group, schedule)
        self.parties: dict[str, Party] = {}
        self.senders: dict[Address, str] = {}
        self.admin = self.ledger.create_account(seed + b"/admin")
        self.senders[self.admin.address] = "admin"
        tx = self.ledger.deploy(self.admin, ManufacturerManager)
        self.mmc_id = tx.created
        tx = self.ledger.deploy(self.admin, ProductsManager,
                                {"mmc": bytes.fromhex(self.mmc_id[2:])})
        self.pmc_id = tx.created

    @property
    def mmc(self) -> ManufacturerManager:
        return self.ledger.contract(self.mmc_id)

    @property
    def pmc(self) -> ProductsManager:
        return self.ledger.contract(self.pmc_id)

    def derive_seed(self, *parts) -> bytes:
        h = hashlib.sha256(self.seed)
        for part in parts:
            part = part if isinstance(part, bytes) else str(part).encode()
            h.update(len(part).to_bytes(4, "big") + part)
        return h.digest()

    def add_party(self, name: str, role: Role | str) -> Party:
        if name in self.parties:
            raise ValueError(f"duplicate party {name!r}")
        role = Role(role)
        account = self.ledger.create_account(self.seed + b"/party/" + name.encode())
        keypair = None
        if role is Role.MANUFACTURER:
            keypair = keygen(self.group, self.seed + b"/key/" + name.encode())
        party = Party(name, role, account, keypair)
        self.parties[name] = party
        if role is Role.MANUFACTURER:
            self.senders[account.address] = name
        return party

    def sender_for(self, party: Party) -> Account:
        if party.role is Role.MANUFACTURER:
            return party.account
        n = len(party.fee_accounts)
        account = self.ledger.create_account(
            self.seed + b"/fee/" + party.name.encode() + b"/" + str(n).encode())
        party.fee_accounts.append(account)
        self.senders[account.address] = party.name
        return account

    def submit(self, party: Party, target: str, operation: str, args: dict[str, bytes]) -> Transaction:
        return self.ledger.submit(self.sender_for(party), target, operation, args)

    def record(self, product_id: str) -> ProductRecord:
        return self.pmc.get_record(product_id)

    def manufacturer_key(self, product_id: str) -> Point:
        info = self.mmc.manufacturer(self.record(product_id).manufacturer)
        return info.public_q

    # -- administration and registration ------------------------------------
    def register_manufacturer(self, party: Party, metadata: bytes = b"") -> Transaction:
        return self.ledger.submit(self.admin, self.mmc_id, "register_manufacturer", {
            "address": bytes(party.address),
            "public_q": bytes(party.keypair.public),
            "metadata": metadata,
        })

    def associate_product(self, party: Party, product_id: str) -> Transaction:
        return self.ledger.submit(self.admin, self.mmc_id, "associate_product", {
            "manufacturer": bytes(party.address),
            "product_id": product_id.encode(),
        })

    def register_product(self, manufacturer: Party, product_id: str) -> Transaction:
        """Manufacturer becomes first owner; its address is also self-encrypted
        as history entry 0 so the tracked chain starts with it."""
        k = self.group.hash_to_scalar(b"tracechain/initial-token", self.derive_seed("init", product_id))
        point = self.group.encode_address(manufacturer.address)
        enc = encrypt(manufacturer.keypair.public, point, k)
        tx = self.ledger.submit(manufacturer.account, self.pmc_id, "register_product", {
            "product_id": product_id.encode(),
            "owner_enc": enc.to_bytes(),
        })
        if tx.succeeded:
            manufacturer.known_tokens[(product_id, 0)] = k
        return tx

    def address_book(self) -> dict[Address, str]:
        return {p.address: name for name, p in self.parties.items()}


# -- the hop -----------------------------------------------------------------

def share_token(chain: SupplyChain, owner: Party, recipient: Party, product_id: str,
                rng_seed: bytes) -> int:
    """Step 1: a fresh token in [1, q-1], held by exactly the two endpoints."""
    index = chain.record(product_id).step_nonce + 1
    k = chain.group.hash_to_scalar(b"tracechain/token", rng_seed, product_id)
    owner.known_tokens[(product_id, index)] = k
    recipient.known_tokens[(product_id, index)] = k
    return k


def owner_proof(chain: SupplyChain, owner: Party, product_id: str, nonce_seed: bytes) -> bytes:
    """Proof for the SHIP step, empty while the manufacturer still holds the product."""
    rec = chain.record(product_id)
    if owner.address == rec.manufacturer and rec.step_nonce == 0:
        return b""
    k = owner.token(product_id, rec.step_nonce)
    if k is None:
        raise HopFailed("ship", "owner holds no token for the current owner record")
    stmt = nizk.Statement(rec.current_owner_enc, chain.manufacturer_key(product_id),
                          nizk.make_context(product_id, nizk.SHIP, rec.step_nonce))
    try:
        return nizk.prove(k, stmt, nonce_seed).to_bytes()
    except ProofError as exc:
        raise HopFailed("ship", str(exc)) from None


def deploy_verifier(chain: SupplyChain, owner: Party, product_id: str,
                    recipient_enc: Ciphertext, manufacturer_q: Optional[Point] = None) -> Transaction:
    """Step 3. ``manufacturer_q`` defaults to the registered key."""
    rec = chain.record(product_id)
    q = manufacturer_q or chain.manufacturer_key(product_id)
    sender = chain.sender_for(owner)
    return chain.ledger.deploy(sender, Verifier, {
        "ciphertext": recipient_enc.to_bytes(),
        "manufacturer_q": bytes(q),
        "context": nizk.make_context(product_id, nizk.RECEIVE, rec.step_nonce),
    })


def ship(chain: SupplyChain, owner: Party, product_id: str, recipient_enc: Ciphertext,
         vc_id: str, proof: bytes) -> Transaction:
    """Step 4."""
    return chain.submit(owner, chain.pmc_id, "ship", {
        "product_id": product_id.encode(),
        "recipient_enc": recipient_enc.to_bytes(),
        "vc": bytes.fromhex(vc_id[2:]),
        "owner_proof": proof,
    })


def recipient_proof(chain: SupplyChain, recipient: Party, product_id: str, k: int,
                    nonce_seed: bytes, manufacturer_q: Optional[Point] = None) -> bytes:
    """Step 5, against the pending ciphertext."""
    rec = chain.record(product_id)
    stmt = nizk.Statement(rec.pending_recipient_enc,
                          manufacturer_q or chain.manufacturer_key(product_id),
                          nizk.make_context(product_id, nizk.RECEIVE, rec.step_nonce))
    return nizk.prove(k, stmt, nonce_seed).to_bytes()


def receive(chain: SupplyChain, recipient: Party, product_id: str, proof: bytes) -> Transaction:
    """Steps 6-8."""
    return chain.submit(recipient, chain.pmc_id, "receive", {
        "product_id": product_id.encode(),
        "proof": proof,
    })


def execute_hop(chain: SupplyChain, owner: Party, recipient: Party, product_id: str,
                recipient_address: Optional[Address] = None) -> HopResult:
    """Run one ownership transfer end to end.

    Party-side preconditions (token possession, encodability) are checked
    before anything is submitted, so a failure either leaves PMC untouched
    or is reported with the transactions already sent.
    ``recipient_address`` replaces the address that gets encrypted; honest
    parties leave it unset.
    """
    rec = chain.record(product_id)
    if rec.shipment_pending:
        raise HopFailed("ship", "ShipmentPending")
    step = rec.step_nonce
    seed = chain.derive_seed("hop", product_id, step)
    proof_for_owner = owner_proof(chain, owner, product_id, seed + b"/ship")

    k = share_token(chain, owner, recipient, product_id, seed)
    q = chain.manufacturer_key(product_id)
    target = recipient_address or recipient.address
    enc = encrypt(q, chain.group.encode_address(target), k)

    deploy_tx = deploy_verifier(chain, owner, product_id, enc)
    if not deploy_tx.succeeded:
        raise HopFailed("deploy", deploy_tx.revert_reason, [deploy_tx])
    ship_tx = ship(chain, owner, product_id, enc, deploy_tx.created, proof_for_owner)
    if not ship_tx.succeeded:
        raise HopFailed("ship", ship_tx.revert_reason, [deploy_tx, ship_tx])

    proof = recipient_proof(chain, recipient, product_id,
                            recipient.token(product_id, step + 1), seed + b"/receive")
    receive_tx = receive(chain, recipient, product_id, proof)
    if not receive_tx.succeeded:
        raise HopFailed("receive", receive_tx.revert_reason, [deploy_tx, ship_tx, receive_tx])
    return HopResult(deploy_tx, ship_tx, receive_tx)


# -- tracking ----------------------------------------------------------------

def _history_tx_indices(chain: SupplyChain, product_id: str) -> list[int]:
    """Ledger indices of the transactions that appended each history entry."""
    out = []
    for tx in chain.ledger.read_log(contract=chain.pmc_id, product=product_id):
        if tx.succeeded and tx.operation in ("register_product", "receive"):
            out.append(tx.index)
    return out


def track_product(chain: SupplyChain, manufacturer: Party | KeyPair, product_id: str) -> TrackingReport:
    """Decrypt the product's owner history with the manufacturer's key.

    Raises NotManufacturerKey when the key does not match the registered one
    or nothing decodes.
    """
    keypair = manufacturer.keypair if isinstance(manufacturer, Party) else manufacturer
    if keypair is None:
        raise NotManufacturerKey("party holds no private key")
    rec = chain.record(product_id)
    tx_indices = _history_tx_indices(chain, product_id)
    entries = []
    for hop, ct in enumerate(rec.history):
        try:
            address = chain.group.decode_point(decrypt(keypair.private, ct))
        except DecodeFailure:
            address = None
        tx_index = tx_indices[hop] if hop < len(tx_indices) else None
        entries.append(TrackingEntry(hop, tx_index, address))
    decoded = sum(e.address is not None for e in entries)
    if keypair.public != chain.manufacturer_key(product_id) or decoded == 0:
        raise NotManufacturerKey(
            f"{len(entries) - decoded} of {len(entries)} history entries failed to decode")
    return TrackingReport(product_id, tuple(entries), decoded == len(entries))
