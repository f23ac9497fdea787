"""Single-chain public ledger simulation with gas metering.

There are no blocks and no consensus. Every submission is executed
atomically, receives the next index and logical timestamp, and is appended
to a log that anyone can read. Reverted calls are logged too (with their
gas) but leave contract storage as it was before the call.

Contracts subclass ``Contract`` and keep their state in ``_storage``, a dict
of immutable values, so a shallow copy is a full snapshot.
"""

from __future__ import annotations

import hashlib
import inspect
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping, Optional

from .elgamal import keygen
from .errors import (DuplicateSeed, Revert, UnknownContract, UnknownCostClass,
                     UnknownSender)
from .group import Address, Group

COST_CLASSES = (
    "base_tx",
    "storage_write_word",
    "storage_read_word",
    "group_mul",
    "group_add",
    "hash",
    "proof_verify",
    "contract_deploy_byte",
)

# Loosely EVM-shaped (2020 prices): proof_verify mirrors a 4-pair ecPairing,
# group_mul/add the ecMul/ecAdd precompiles, deploy bytes the code deposit.
DEFAULT_COSTS = {
    "base_tx": 21_000,
    "storage_write_word": 20_000,
    "storage_read_word": 800,
    "group_mul": 40_000,
    "group_add": 500,
    "hash": 36,
    "proof_verify": 181_000,
    "contract_deploy_byte": 200,
}

DEFAULT_USD_PER_GAS = 1.1622e-6

WORD = 32


def words(nbytes: int) -> int:
    return math.ceil(nbytes / WORD)


@dataclass(frozen=True)
class GasSchedule:
    costs: Mapping[str, int] = field(default_factory=lambda: MappingProxyType(dict(DEFAULT_COSTS)))
    usd_per_gas: float = DEFAULT_USD_PER_GAS

    def __post_init__(self):
        unknown = set(self.costs) - set(COST_CLASSES)
        if unknown:
            raise UnknownCostClass(", ".join(sorted(unknown)))
        missing = set(COST_CLASSES) - set(self.costs)
        if missing:
            raise ValueError(f"schedule lacks cost classes: {sorted(missing)}")
        if any(int(v) != v or v < 0 for v in self.costs.values()):
            raise ValueError("gas costs must be non-negative integers")
        if self.usd_per_gas < 0:
            raise ValueError("usd_per_gas must be non-negative")
        object.__setattr__(self, "costs", MappingProxyType(dict(self.costs)))

    @classmethod
    def with_overrides(cls, overrides: Optional[Mapping[str, int]] = None,
                       usd_per_gas: Optional[float] = None) -> "GasSchedule":
        costs = dict(DEFAULT_COSTS)
        for name, value in (overrides or {}).items():
            if name not in COST_CLASSES:
                raise UnknownCostClass(name)
            costs[name] = value
        return cls(costs, DEFAULT_USD_PER_GAS if usd_per_gas is None else usd_per_gas)

    def cost(self, cost_class: str) -> int:
        try:
            return self.costs[cost_class]
        except KeyError:
            raise UnknownCostClass(cost_class) from None

    def usd(self, gas: int) -> float:
        return gas * self.usd_per_gas


@dataclass(frozen=True)
class Account:
    address: Address
    signing_seed: bytes


@dataclass(frozen=True)
class Transaction:
    index: int
    timestamp: int
    sender: Address
    target: Optional[str]
    operation: str
    args: tuple[tuple[str, bytes], ...]
    status: str
    revert_reason: Optional[str]
    gas_used: int
    gas_breakdown: tuple[tuple[str, int], ...]
    products: tuple[str, ...] = ()
    created: Optional[str] = None
    internal_calls: tuple[tuple[str, str, str], ...] = ()

    @property
    def succeeded(self) -> bool:
        return self.status == "success"

    @property
    def calldata(self) -> bytes:
        """Length-prefixed operation name followed by each argument."""
        out = bytearray()
        for part in (self.operation.encode(), *(v for _, v in self.args)):
            out += len(part).to_bytes(4, "big") + part
        return bytes(out)

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "timestamp": self.timestamp,
            "sender": str(self.sender),
            "target": self.target,
            "operation": self.operation,
            "args": {k: v.hex() for k, v in self.args},
            "calldata": self.calldata.hex(),
            "status": self.status,
            "revert_reason": self.revert_reason,
            "gas_used": self.gas_used,
            "gas_breakdown": dict(self.gas_breakdown),
            "products": list(self.products),
            "created": self.created,
            "internal_calls": [list(c) for c in self.internal_calls],
        }


class Contract:
    """Base class for ledger contracts.

    Subclasses define ``kind``, ``code_size`` (bytes charged at deployment),
    external operations as ``op_<name>(sender, **args)`` methods and the
    names of methods other contracts may call in ``INTERNAL``.
    """

    kind = "contract"
    code_size = 0
    INTERNAL: tuple[str, ...] = ()

    def __init__(self, ledger: "Ledger", contract_id: str, deployer: Address, **args: bytes):
        self.ledger = ledger
        self.contract_id = contract_id
        self._storage: dict[Any, Any] = {}
        self.setup(deployer, **args)

    def setup(self, deployer: Address, **args: bytes) -> None:
        pass

    def snapshot(self) -> dict:
        return dict(self._storage)

    def restore(self, snap: dict) -> None:
        self._storage = dict(snap)

    def dispatch(self, sender: Address, operation: str, args: Mapping[str, bytes]):
        method = getattr(self, "op_" + operation, None)
        if method is None:
            raise Revert("UnknownOperation", operation)
        try:
            inspect.signature(method).bind(sender, **args)
        except TypeError as exc:
            raise Revert("BadArguments", str(exc)) from None
        return method(sender, **args)

    # metered storage access
    def _load(self, key, nbytes: int = WORD):
        self.ledger.meter("storage_read_word", words(nbytes))
        return self._storage.get(key)

    def _store(self, key, value, nbytes: int = WORD) -> None:
        self.ledger.meter("storage_write_word", words(nbytes))
        self._storage[key] = value

    def public_state(self) -> dict[str, Any]:
        return {"kind": self.kind}


@dataclass
class _Frame:
    sender: Address
    gas: dict[str, int] = field(default_factory=dict)
    products: list[str] = field(default_factory=list)
    calls: list[tuple[str, str, str]] = field(default_factory=list)


class Ledger:
    def __init__(self, group: Group, schedule: Optional[GasSchedule] = None):
        self.group = group
        self.schedule = schedule or GasSchedule()
        self._accounts: dict[Address, Account] = {}
        self._seeds: set[bytes] = set()
        self._nonces: dict[Address, int] = {}
        self._spent: dict[Address, int] = {}
        self._contracts: dict[str, Contract] = {}
        self._log: list[Transaction] = []
        self._frame: Optional[_Frame] = None

    # -- accounts -----------------------------------------------------------
    def _derive_address(self, seed: bytes) -> Address:
        public = bytes(keygen(self.group, seed).public)
        capacity = min(self.group.address_capacity_bits, 160)
        attempt = 0
        while True:
            digest = hashlib.sha3_256(public + attempt.to_bytes(4, "big")).digest()
            value = int.from_bytes(digest[-20:], "big") % (1 << capacity)
            address = Address(value.to_bytes(20, "big"))
            if address not in self._accounts and self.group.can_encode(address):
                return address
            attempt += 1
            if attempt > 1 << 16:
                raise DuplicateSeed("address space of this group is exhausted")

    def create_account(self, seed: bytes) -> Account:
        if isinstance(seed, str):
            seed = seed.encode()
        if seed in self._seeds:
            raise DuplicateSeed(seed.decode(errors="replace"))
        account = Account(self._derive_address(seed), seed)
        self._seeds.add(seed)
        self._accounts[account.address] = account
        self._nonces[account.address] = 0
        self._spent[account.address] = 0
        return account

    def account(self, address: Address) -> Account:
        try:
            return self._accounts[address]
        except KeyError:
            raise UnknownSender(str(address)) from None

    def gas_spent(self, address: Address) -> int:
        return self._spent[address]

    # -- contracts ----------------------------------------------------------
    def contract(self, contract_id: str) -> Contract:
        try:
            return self._contracts[contract_id]
        except KeyError:
            raise UnknownContract(contract_id) from None

    def has_contract(self, contract_id: str) -> bool:
        return contract_id in self._contracts

    def _contract_id(self, sender: Address) -> str:
        nonce = self._nonces[sender]
        digest = hashlib.sha3_256(b"contract" + sender + nonce.to_bytes(8, "big")).digest()
        return "0x" + digest[-20:].hex()

    # -- execution ----------------------------------------------------------
    def meter(self, cost_class: str, count: int = 1) -> int:
        """Charge ``count`` units of ``cost_class`` to the running transaction."""
        units = self.schedule.cost(cost_class) * count
        if self._frame is None:
            raise RuntimeError("meter() called outside a transaction")
        self._frame.gas[cost_class] = self._frame.gas.get(cost_class, 0) + units
        return units

    def touch_product(self, product_id: str) -> None:
        if self._frame is not None and product_id not in self._frame.products:
            self._frame.products.append(product_id)

    def invoke(self, contract_id: str, method: str, **kwargs):
        """Contract-to-contract call inside the running transaction."""
        if self._frame is None:
            raise RuntimeError("invoke() called outside a transaction")
        target = self._contracts.get(contract_id)
        if target is None or method not in target.INTERNAL:
            raise Revert("UnknownContract", contract_id)
        result = getattr(target, method)(**kwargs)
        self._frame.calls.append((contract_id, method, json.dumps(result)))
        return result

    def _run(self, sender: Address, target: Optional[str], operation: str,
             args: Mapping[str, bytes], body: Callable[[], Optional[str]]) -> Transaction:
        if sender not in self._accounts:
            raise UnknownSender(str(sender))
        if self._frame is not None:
            raise RuntimeError("nested submission")
        for name, value in args.items():
            if not isinstance(value, (bytes, bytearray)):
                raise TypeError(f"argument {name!r} must be bytes")
        snapshot = {cid: c.snapshot() for cid, c in self._contracts.items()}
        self._frame = frame = _Frame(sender)
        created = None
        try:
            self.meter("base_tx")
            created = body()
            status, reason = "success", None
        except Revert as exc:
            self._rollback(snapshot)
            status, reason, created = "revert", exc.reason, None
        except BaseException:
            self._rollback(snapshot)
            raise
        finally:
            self._frame = None
        gas = sum(frame.gas.values())
        tx = Transaction(
            index=len(self._log),
            timestamp=len(self._log),
            sender=sender,
            target=target,
            operation=operation,
            args=tuple((k, bytes(v)) for k, v in args.items()),
            status=status,
            revert_reason=reason,
            gas_used=gas,
            gas_breakdown=tuple((c, frame.gas[c]) for c in COST_CLASSES if c in frame.gas),
            products=tuple(frame.products),
            created=created,
            internal_calls=tuple(frame.calls),
        )
        self._log.append(tx)
        self._nonces[sender] += 1
        self._spent[sender] += gas
        return tx

    def _rollback(self, snapshot: dict[str, dict]) -> None:
        for cid in set(self._contracts) - set(snapshot):
            del self._contracts[cid]
        for cid, snap in snapshot.items():
            self._contracts[cid].restore(snap)

    def submit(self, sender: Account | Address, target: str, operation: str,
               args: Optional[Mapping[str, bytes]] = None) -> Transaction:
        sender = getattr(sender, "address", sender)
        if sender not in self._accounts:
            raise UnknownSender(str(sender))
        contract = self.contract(target)
        args = dict(args or {})

        def body():
            contract.dispatch(sender, operation, args)
            return None

        return self._run(sender, target, operation, args, body)

    def deploy(self, sender: Account | Address, contract_cls: type[Contract],
               args: Optional[Mapping[str, bytes]] = None) -> Transaction:
        sender = getattr(sender, "address", sender)
        if sender not in self._accounts:
            raise UnknownSender(str(sender))
        args = dict(args or {})
        contract_id = self._contract_id(sender)

        def body():
            size = contract_cls.code_size + sum(len(v) for v in args.values())
            self.meter("contract_deploy_byte", size)
            self._contracts[contract_id] = contract_cls(self, contract_id, sender, **args)
            return contract_id

        return self._run(sender, None, "deploy:" + contract_cls.kind, args, body)

    # -- public reads -------------------------------------------------------
    def read_log(self, contract: Optional[str] = None,
                 product: Optional[str] = None) -> tuple[Transaction, ...]:
        def keep(tx: Transaction) -> bool:
            if contract is not None and contract not in (tx.target, tx.created):
                return False
            if product is not None and product not in tx.products:
                return False
            return True

        return tuple(tx for tx in self._log if keep(tx))

    def __len__(self) -> int:
        return len(self._log)

    def contract_ids(self) -> Iterable[str]:
        return tuple(self._contracts)

    def dump(self) -> dict[str, Any]:
        return {
            "group": self.group.name,
            "gas_schedule": dict(self.schedule.costs),
            "usd_per_gas": self.schedule.usd_per_gas,
            "transactions": [tx.to_dict() for tx in self._log],
            "state": {cid: c.public_state() for cid, c in self._contracts.items()},
        }

    def dump_json(self) -> str:
        return json.dumps(self.dump(), indent=2, sort_keys=True) + "\n"
