"""Per-party fee accounting over a transaction log."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional

from .group import Address
from .ledger import DEFAULT_USD_PER_GAS, Transaction


@dataclass(frozen=True)
class FeeRow:
    party: str
    role: str
    operation: str
    count: int
    gas: int
    usd: float


@dataclass(frozen=True)
class PartyTotal:
    party: str
    role: str
    gas: int
    usd: float


@dataclass(frozen=True)
class FeeTable:
    rows: tuple[FeeRow, ...]
    totals: tuple[PartyTotal, ...]
    usd_per_gas: float

    @property
    def total_gas(self) -> int:
        return sum(t.gas for t in self.totals)

    def total_for(self, party: str) -> PartyTotal:
        for t in self.totals:
            if t.party == party:
                return t
        raise KeyError(party)

    def max_party(self, roles: Optional[Iterable[str]] = None) -> Optional[PartyTotal]:
        """Largest per-party total, optionally among the given roles only."""
        wanted = None if roles is None else set(roles)
        pool = [t for t in self.totals if wanted is None or t.role in wanted]
        return max(pool, key=lambda t: (t.gas, t.party), default=None)

    def to_dict(self) -> dict[str, Any]:
        top = self.max_party(r for r in {t.role for t in self.totals} if r != "administrator")
        return {
            "usd_per_gas": self.usd_per_gas,
            "rows": [vars(r) for r in self.rows],
            "totals": [vars(t) for t in self.totals],
            "total_gas": self.total_gas,
            "max_per_party": vars(top) if top else None,
        }

    def to_text(self) -> str:
        header = ("party", "role", "operation", "count", "gas", "usd")
        body = [(r.party, r.role, r.operation, str(r.count), str(r.gas), f"{r.usd:.6f}")
                for r in self.rows]
        body += [(t.party, t.role, "TOTAL", "", str(t.gas), f"{t.usd:.6f}") for t in self.totals]
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        right = {3, 4, 5}

        def fmt(row):
            return "  ".join(c.rjust(w) if i in right else c.ljust(w)
                             for i, (c, w) in enumerate(zip(row, widths))).rstrip()

        lines = [fmt(header), fmt(tuple("-" * w for w in widths))]
        lines += [fmt(row) for row in body]
        lines.append(f"usd_per_gas = {self.usd_per_gas!r}")
        return "\n".join(lines) + "\n"


def fee_summary(log: Iterable[Transaction], owners: Mapping[Address, str],
                usd_per_gas: float = DEFAULT_USD_PER_GAS,
                roles: Optional[Mapping[str, str]] = None) -> FeeTable:
    """Aggregate gas by (party, operation).

    ``owners`` maps sender addresses to party names; senders missing from it
    are listed under their address. Every party named in ``roles`` gets a
    total row, zero if it never transacted. Reverted calls still cost gas and
    are listed as ``<operation> [revert]``.
    """
    roles = dict(roles or {})
    gas: dict[tuple[str, str], int] = defaultdict(int)
    count: dict[tuple[str, str], int] = defaultdict(int)
    for tx in log:
        party = owners.get(tx.sender, str(tx.sender))
        op = tx.operation if tx.succeeded else f"{tx.operation} [revert]"
        gas[party, op] += tx.gas_used
        count[party, op] += 1

    def role(party):
        return roles.get(party, "administrator" if party == "admin" else "unknown")

    names = list(roles) + sorted({p for p, _ in gas} - set(roles))
    order = {name: i for i, name in enumerate(names)}
    rows = tuple(FeeRow(p, role(p), op, count[p, op], g, g * usd_per_gas)
                 for (p, op), g in sorted(gas.items(), key=lambda kv: (order[kv[0][0]], kv[0][1])))
    totals = []
    for name in names:
        g = sum(r.gas for r in rows if r.party == name)
        totals.append(PartyTotal(name, role(name), g, g * usd_per_gas))
    return FeeTable(rows, tuple(totals), usd_per_gas)
