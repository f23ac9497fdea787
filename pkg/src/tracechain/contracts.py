"""Manufacturer registry, product ownership and per-shipment verifier contracts.

* ``ManufacturerManager`` (MMC): administrator-maintained registry of
  manufacturer addresses, public keys and product associations.
* ``ProductsManager`` (PMC): per-product ownership state. Stores the
  manufacturer's plain address and, for every owner, only an ElGamal
  ciphertext of the owner's address under the manufacturer's key.
* ``Verifier`` (VC): deployed by the current owner for one shipment; holds
  the receive statement and checks the recipient's proof when PMC asks.

All call arguments arrive as bytes. Revert reasons are stable strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Optional

from . import nizk
from .elgamal import Ciphertext
from .errors import InvalidPoint, MalformedProof, Revert
from .group import ADDRESS_LEN, Address, Point
from .ledger import WORD, Contract

# bytes charged at deployment on top of the constructor arguments
MMC_CODE_SIZE = 2_400
PMC_CODE_SIZE = 5_200
VC_CODE_SIZE = 6_000


@dataclass(frozen=True)
class ManufacturerInfo:
    address: Address
    public_q: Point
    metadata: tuple[tuple[str, str], ...] = ()
    products: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ProductRecord:
    product_id: str
    manufacturer: Address
    current_owner_enc: Ciphertext
    history: tuple[Ciphertext, ...]
    step_nonce: int = 0
    pending_recipient_enc: Optional[Ciphertext] = None
    vc_ref: Optional[str] = None

    @property
    def shipment_pending(self) -> bool:
        return self.pending_recipient_enc is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "manufacturer": str(self.manufacturer),
            "current_owner": self.current_owner_enc.to_bytes().hex(),
            "pending_recipient": (self.pending_recipient_enc.to_bytes().hex()
                                  if self.pending_recipient_enc else None),
            "verifier": self.vc_ref,
            "step_nonce": self.step_nonce,
            "history": [ct.to_bytes().hex() for ct in self.history],
        }


def _address(raw: bytes) -> Address:
    if len(raw) != ADDRESS_LEN:
        raise Revert("MalformedAddress")
    return Address(raw)


def _product_id(raw: bytes) -> str:
    try:
        pid = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise Revert("MalformedProductId") from None
    if not pid:
        raise Revert("MalformedProductId")
    return pid


class ManufacturerManager(Contract):
    kind = "MMC"
    code_size = MMC_CODE_SIZE
    INTERNAL = ("lookup",)

    def setup(self, deployer: Address) -> None:
        self._store("admin", deployer)

    @property
    def administrator(self) -> Address:
        return self._storage["admin"]

    def _require_admin(self, sender: Address) -> None:
        if sender != self._load("admin"):
            raise Revert("NotAdministrator")

    def op_register_manufacturer(self, sender: Address, address: bytes, public_q: bytes,
                                 metadata: bytes = b"") -> None:
        self._require_admin(sender)
        address = _address(address)
        try:
            q = self.ledger.group.point_from_bytes(public_q)
        except InvalidPoint:
            raise Revert("MalformedKey") from None
        if q.is_identity:
            raise Revert("MalformedKey")
        try:
            meta = json.loads(metadata) if metadata else {}
        except ValueError:
            raise Revert("MalformedMetadata") from None
        if not isinstance(meta, dict):
            raise Revert("MalformedMetadata")
        if self._load(("mfr", address)) is not None:
            raise Revert("AlreadyRegistered")
        info = ManufacturerInfo(address, q, tuple(sorted((str(k), str(v)) for k, v in meta.items())))
        self._store(("mfr", address), info, ADDRESS_LEN + len(public_q) + len(metadata))

    def op_associate_product(self, sender: Address, manufacturer: bytes, product_id: bytes) -> None:
        self._require_admin(sender)
        manufacturer = _address(manufacturer)
        pid = _product_id(product_id)
        self.ledger.touch_product(pid)
        info = self._load(("mfr", manufacturer))
        if info is None:
            raise Revert("UnknownManufacturer")
        if self._load(("product", pid)) is not None:
            raise Revert("AlreadyAssociated")
        self._store(("product", pid), manufacturer)
        self._store(("mfr", manufacturer), replace(info, products=info.products | {pid}), WORD)

    def lookup(self, manufacturer: bytes, product_id: bytes) -> Optional[dict]:
        """Internal call from PMC: registered key and association of a product."""
        info = self._load(("mfr", Address(manufacturer)), 2 * WORD)
        if info is None:
            return None
        owner = self._load(("product", product_id.decode()))
        return {"public_q": bytes(info.public_q).hex(), "associated": owner == info.address}

    # public views
    def manufacturer(self, address: Address) -> Optional[ManufacturerInfo]:
        return self._storage.get(("mfr", address))

    def manufacturer_of(self, product_id: str) -> Optional[Address]:
        return self._storage.get(("product", product_id))

    def is_associated(self, address: Address, product_id: str) -> bool:
        return self._storage.get(("product", product_id)) == address

    def public_state(self) -> dict[str, Any]:
        manufacturers = {}
        for key, info in self._storage.items():
            if isinstance(key, tuple) and key[0] == "mfr":
                manufacturers[str(info.address)] = {
                    "public_key": bytes(info.public_q).hex(),
                    "metadata": dict(info.metadata),
                    "products": sorted(info.products),
                }
        return {"kind": self.kind, "administrator": str(self.administrator),
                "manufacturers": dict(sorted(manufacturers.items()))}


def _meter_verification(ledger) -> None:
    ledger.meter("hash")
    ledger.meter("group_mul", 2)
    ledger.meter("group_add")
    ledger.meter("proof_verify")


class Verifier(Contract):
    """Holds one receive statement, fixed at deployment."""

    kind = "VC"
    code_size = VC_CODE_SIZE
    INTERNAL = ("verify",)

    def setup(self, deployer: Address, ciphertext: bytes, manufacturer_q: bytes,
              context: bytes) -> None:
        group = self.ledger.group
        try:
            ct = Ciphertext.from_bytes(group, ciphertext)
            q = group.point_from_bytes(manufacturer_q)
            stmt = nizk.Statement(ct, q, context)
        except (InvalidPoint, ValueError, TypeError):
            raise Revert("MalformedStatement") from None
        self.ledger.touch_product(nizk.parse_context(context)[0].decode(errors="replace"))
        self._store("statement", stmt, len(stmt.to_bytes()))

    @property
    def statement(self) -> nizk.Statement:
        return self._storage["statement"]

    def verify(self, ciphertext: bytes, manufacturer_q: bytes, context: bytes,
               proof: bytes) -> bool:
        """Called by PMC with the pending ciphertext and the registered key."""
        stmt = self._load("statement", len(self.statement.to_bytes()))
        if (ciphertext != stmt.ciphertext.to_bytes() or manufacturer_q != bytes(stmt.manufacturer_q)
                or context != stmt.context):
            return False
        _meter_verification(self.ledger)
        try:
            return nizk.verify_bytes(proof, stmt)
        except MalformedProof:
            return False

    def public_state(self) -> dict[str, Any]:
        stmt = self.statement
        return {"kind": self.kind,
                "ciphertext": stmt.ciphertext.to_bytes().hex(),
                "manufacturer_q": bytes(stmt.manufacturer_q).hex(),
                "context": stmt.context.hex()}


class ProductsManager(Contract):
    kind = "PMC"
    code_size = PMC_CODE_SIZE

    def setup(self, deployer: Address, mmc: bytes) -> None:
        self._store("mmc", "0x" + mmc.hex())

    @property
    def mmc_id(self) -> str:
        return self._storage["mmc"]

    def _ciphertext(self, raw: bytes) -> Ciphertext:
        try:
            return Ciphertext.from_bytes(self.ledger.group, raw)
        except InvalidPoint:
            raise Revert("MalformedCiphertext") from None

    def _record(self, pid: str) -> ProductRecord:
        rec = self._load(("product", pid), 8 * WORD)
        if rec is None:
            raise Revert("UnknownProduct")
        return rec

    def _registered_key(self, rec: ProductRecord) -> Point:
        found = self.ledger.invoke(self._load("mmc"), "lookup",
                                   manufacturer=bytes(rec.manufacturer),
                                   product_id=rec.product_id.encode())
        if found is None:
            raise Revert("UnknownManufacturer")
        return self.ledger.group.point_from_bytes(bytes.fromhex(found["public_q"]))

    def _put(self, rec: ProductRecord, nbytes: int) -> None:
        self._store(("product", rec.product_id), rec, nbytes)

    def op_register_product(self, sender: Address, product_id: bytes, owner_enc: bytes) -> None:
        pid = _product_id(product_id)
        self.ledger.touch_product(pid)
        ct = self._ciphertext(owner_enc)
        found = self.ledger.invoke(self._load("mmc"), "lookup",
                                   manufacturer=bytes(sender), product_id=product_id)
        if found is None:
            raise Revert("NotManufacturer")
        if not found["associated"]:
            raise Revert("NotAssociated")
        if self._load(("product", pid)) is not None:
            raise Revert("ProductExists")
        rec = ProductRecord(pid, sender, ct, (ct,))
        # manufacturer word + owner + history entry + nonce
        self._put(rec, WORD + 2 * len(owner_enc) + WORD)

    def op_ship(self, sender: Address, product_id: bytes, recipient_enc: bytes, vc: bytes,
                owner_proof: bytes = b"") -> None:
        pid = _product_id(product_id)
        self.ledger.touch_product(pid)
        rec = self._record(pid)
        if rec.shipment_pending:
            raise Revert("ShipmentPending")
        recipient = self._ciphertext(recipient_enc)
        vc_id = "0x" + vc.hex()
        if not (self.ledger.has_contract(vc_id)
                and isinstance(self.ledger.contract(vc_id), Verifier)):
            raise Revert("UnknownVerifier")
        q = self._registered_key(rec)
        if sender == rec.manufacturer and rec.step_nonce == 0:
            # the manufacturer is identified by its plain address while it
            # still holds the product; no proof is checked
            pass
        else:
            stmt = nizk.Statement(rec.current_owner_enc, q,
                                  nizk.make_context(pid, nizk.SHIP, rec.step_nonce))
            _meter_verification(self.ledger)
            try:
                ok = nizk.verify_bytes(owner_proof, stmt)
            except MalformedProof:
                raise Revert("MalformedProof") from None
            if not ok:
                raise Revert("InvalidOwnerProof")
        self._put(replace(rec, pending_recipient_enc=recipient, vc_ref=vc_id),
                  len(recipient_enc) + WORD)

    def op_receive(self, sender: Address, product_id: bytes, proof: bytes = b"") -> None:
        pid = _product_id(product_id)
        self.ledger.touch_product(pid)
        rec = self._record(pid)
        if not rec.shipment_pending:
            raise Revert("NoShipmentPending")
        q = self._registered_key(rec)
        try:
            nizk.Proof.from_bytes(self.ledger.group, proof)
        except MalformedProof:
            raise Revert("MalformedProof") from None
        context = nizk.make_context(pid, nizk.RECEIVE, rec.step_nonce)
        ok = self.ledger.invoke(rec.vc_ref, "verify",
                                ciphertext=rec.pending_recipient_enc.to_bytes(),
                                manufacturer_q=bytes(q), context=context, proof=proof)
        if not ok:
            raise Revert("InvalidProof")
        new_owner = rec.pending_recipient_enc
        self._put(replace(rec, current_owner_enc=new_owner,
                          history=rec.history + (new_owner,),
                          pending_recipient_enc=None, vc_ref=None,
                          step_nonce=rec.step_nonce + 1),
                  2 * len(new_owner.to_bytes()) + 2 * WORD)

    # public views
    def get_record(self, product_id: str) -> ProductRecord:
        rec = self._storage.get(("product", product_id))
        if rec is None:
            raise Revert("UnknownProduct")
        return rec

    def products(self) -> list[str]:
        return sorted(k[1] for k in self._storage if isinstance(k, tuple) and k[0] == "product")

    def public_state(self) -> dict[str, Any]:
        return {"kind": self.kind, "mmc": self.mmc_id,
                "products": {pid: self.get_record(pid).to_dict() for pid in self.products()}}
