"""Scenario files: loading, validation and execution.

A scenario is a JSON document::

    {
      "group": "production",            # or "toy"
      "seed": 1,
      "usd_per_gas": 1.1622e-6,         # optional
      "gas_schedule": {"group_mul": 6000},   # optional overrides
      "parties":  [{"name": "M", "role": "manufacturer"}, ...],
      "products": [{"id": "P-001", "manufacturer": "M"}],
      "hops":     [{"product": "P-001", "from": "M", "to": "D"}, ...],
      "attacks":  [{"kind": "collude", "product": "P-001",
                    "owner": "R", "recipient": "C", "substitute": "0x..."}]
    }

Hops run in order, then attacks in order. Each hop or attack must start
from the party that owns the product at that point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .attacks import EXPECTED, AttackOutcome, attack
from .errors import (HopFailed, ParseError, ScenarioFailure, TracechainError,
                     UnknownAttackKind, ValidationError)
from .fees import FeeTable, fee_summary
from .group import Address, get_group
from .ledger import COST_CLASSES, GasSchedule
from .protocol import Role, SupplyChain, TrackingReport, execute_hop, track_product

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["parties", "products", "hops"],
    "additionalProperties": False,
    "properties": {
        "group": {"enum": ["production", "toy"]},
        "seed": {"type": "integer", "minimum": 0},
        "usd_per_gas": {"type": "number", "minimum": 0},
        "gas_schedule": {
            "type": "object",
            "propertyNames": {"enum": list(COST_CLASSES)},
            "additionalProperties": {"type": "integer", "minimum": 0},
        },
        "parties": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "required": ["name", "role"], "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "role": {"enum": [r.value for r in Role]},
                },
            },
        },
        "products": {
            "type": "array",
            "items": {
                "type": "object", "required": ["id", "manufacturer"], "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "manufacturer": {"type": "string"},
                },
            },
        },
        "hops": {
            "type": "array",
            "items": {
                "type": "object", "required": ["product", "from", "to"],
                "additionalProperties": False,
                "properties": {
                    "product": {"type": "string"},
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                },
            },
        },
        "attacks": {
            "type": "array",
            "items": {
                "type": "object", "required": ["kind", "product", "owner", "recipient"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"type": "string"},
                    "product": {"type": "string"},
                    "owner": {"type": "string"},
                    "recipient": {"type": "string"},
                    "impersonator": {"type": "string"},
                    "substitute": {"type": "string"},
                },
            },
        },
    },
}


@dataclass
class Scenario:
    parties: list[dict[str, str]]
    products: list[dict[str, str]]
    hops: list[dict[str, str]]
    attacks: list[dict[str, str]] = field(default_factory=list)
    group: str = "production"
    seed: int = 0
    usd_per_gas: Optional[float] = None
    gas_schedule: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ValidationError(f"{where}: {exc.message}") from None
        scenario = cls(**data)
        scenario.check()
        return scenario

    def to_dict(self) -> dict[str, Any]:
        out = {"group": self.group, "seed": self.seed, "parties": self.parties,
               "products": self.products, "hops": self.hops, "attacks": self.attacks}
        if self.usd_per_gas is not None:
            out["usd_per_gas"] = self.usd_per_gas
        if self.gas_schedule:
            out["gas_schedule"] = self.gas_schedule
        return out

    def check(self) -> None:
        """Cross-reference checks the schema cannot express."""
        roles = {}
        for p in self.parties:
            if p["name"] in roles:
                raise ValidationError(f"duplicate party {p['name']!r}")
            roles[p["name"]] = p["role"]
        owner = {}
        for prod in self.products:
            mfr = prod["manufacturer"]
            if roles.get(mfr) != Role.MANUFACTURER.value:
                raise ValidationError(f"product {prod['id']!r}: {mfr!r} is not a declared manufacturer")
            if prod["id"] in owner:
                raise ValidationError(f"duplicate product {prod['id']!r}")
            owner[prod["id"]] = mfr

        def need_party(name, where):
            if name not in roles:
                raise ValidationError(f"{where}: unknown party {name!r}")

        for i, hop in enumerate(self.hops):
            where = f"hops/{i}"
            if hop["product"] not in owner:
                raise ValidationError(f"{where}: unknown product {hop['product']!r}")
            need_party(hop["from"], where)
            need_party(hop["to"], where)
            if hop["from"] != owner[hop["product"]]:
                raise ValidationError(
                    f"{where}: {hop['from']!r} does not own {hop['product']!r} "
                    f"(owner is {owner[hop['product']]!r})")
            if hop["to"] == hop["from"]:
                raise ValidationError(f"{where}: a party cannot ship to itself")
            owner[hop["product"]] = hop["to"]
        for i, atk in enumerate(self.attacks):
            where = f"attacks/{i}"
            if atk["kind"] not in EXPECTED:
                raise UnknownAttackKind(f"{where}: {atk['kind']!r}")
            if atk["product"] not in owner:
                raise ValidationError(f"{where}: unknown product {atk['product']!r}")
            need_party(atk["owner"], where)
            need_party(atk["recipient"], where)
            if atk["owner"] != owner[atk["product"]]:
                raise ValidationError(f"{where}: {atk['owner']!r} does not own {atk['product']!r}")
            if atk["kind"] == "impersonate":
                need_party(atk.get("impersonator", ""), where)
            if atk["kind"] == "collude":
                sub = atk.get("substitute", "")
                if sub not in roles:
                    try:
                        Address.from_hex(sub)
                    except ValueError:
                        raise ValidationError(
                            f"{where}: substitute must be a party or a 20-byte hex address") from None
            if atk["kind"] in ("impersonate", "collude"):
                owner[atk["product"]] = atk["recipient"]


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return Scenario.from_dict(data)


def default_scenario() -> Scenario:
    text = resources.files("tracechain").joinpath("data/default_scenario.json").read_text()
    return Scenario.from_dict(json.loads(text))


@dataclass
class RunResult:
    scenario: Scenario
    chain: SupplyChain
    reports: dict[str, TrackingReport]
    attacks: list[AttackOutcome]
    fees: FeeTable

    def tracking_json(self) -> dict[str, Any]:
        names = self.chain.address_book()
        return {
            "group": self.chain.group.name,
            "products": [r.to_dict(names) for r in self.reports.values()],
            "attacks": [a.to_dict() for a in self.attacks],
        }

    def write(self, outdir: str | Path, figures: bool = True) -> dict[str, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {
            "tracking_report": outdir / "tracking_report.json",
            "fee_table": outdir / "fee_table.json",
            "fee_table_text": outdir / "fee_table.txt",
            "ledger_dump": outdir / "ledger_dump.json",
        }
        paths["tracking_report"].write_text(_dumps(self.tracking_json()))
        paths["fee_table"].write_text(_dumps(self.fees.to_dict()))
        paths["fee_table_text"].write_text(self.fees.to_text())
        paths["ledger_dump"].write_text(self.chain.ledger.dump_json())
        if figures:
            from .plotting import fee_chart

            paths["fee_chart"] = fee_chart(self.fees, outdir / "fee_chart.png")
        return paths


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_scenario(scenario: Scenario, group: Optional[str] = None,
                 usd_per_gas: Optional[float] = None, seed: Optional[int] = None) -> RunResult:
    grp = get_group(group or scenario.group)
    usd = usd_per_gas if usd_per_gas is not None else scenario.usd_per_gas
    schedule = GasSchedule.with_overrides(scenario.gas_schedule, usd)
    seed = scenario.seed if seed is None else seed
    chain = SupplyChain(grp, schedule, seed=f"tracechain/scenario/{seed}".encode())

    def step(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except HopFailed as exc:
            raise ScenarioFailure(name, f"{exc.step}: {exc.reason}") from None
        except TracechainError as exc:
            raise ScenarioFailure(name, f"{type(exc).__name__}: {exc}") from None

    def require(name, tx):
        if not tx.succeeded:
            raise ScenarioFailure(name, f"{tx.operation} reverted: {tx.revert_reason}")

    for p in scenario.parties:
        chain.add_party(p["name"], p["role"])
    parties = chain.parties
    for p in scenario.parties:
        if p["role"] == Role.MANUFACTURER.value:
            require(f"register manufacturer {p['name']}",
                    chain.register_manufacturer(parties[p["name"]],
                                                json.dumps({"name": p["name"]}).encode()))
    for prod in scenario.products:
        mfr = parties[prod["manufacturer"]]
        require(f"associate {prod['id']}", chain.associate_product(mfr, prod["id"]))
        require(f"register {prod['id']}", step(f"register {prod['id']}", chain.register_product,
                                               mfr, prod["id"]))
    for i, hop in enumerate(scenario.hops):
        name = f"hop {i} {hop['product']} {hop['from']}->{hop['to']}"
        step(name, execute_hop, chain, parties[hop["from"]], parties[hop["to"]], hop["product"])

    outcomes = []
    for i, atk in enumerate(scenario.attacks):
        substitute = None
        if atk["kind"] == "collude":
            sub = atk["substitute"]
            substitute = parties[sub].address if sub in parties else Address.from_hex(sub)
        outcomes.append(step(
            f"attack {i} {atk['kind']}", attack, atk["kind"], chain, atk["product"],
            parties[atk["owner"]], parties[atk["recipient"]],
            impersonator=parties.get(atk.get("impersonator", "")), substitute=substitute))

    reports = {}
    for prod in scenario.products:
        reports[prod["id"]] = step(f"track {prod['id']}", track_product, chain,
                                   parties[prod["manufacturer"]], prod["id"])
    fees = fee_summary(chain.ledger.read_log(), chain.senders, schedule.usd_per_gas,
                       roles={p["name"]: p["role"] for p in scenario.parties})
    return RunResult(scenario, chain, reports, outcomes, fees)
