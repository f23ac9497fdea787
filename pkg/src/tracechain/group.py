"""Prime-order elliptic-curve groups behind one interface.

Two backends:

* ``Secp256k1Group`` -- the production group, arithmetic delegated to
  libsecp256k1 through ``coincurve``. Order is a 256-bit prime, cofactor 1.
* ``ToyCurveGroup`` -- short Weierstrass curves over tiny prime fields with
  prime order, used for exhaustive oracle checks.

Points serialize to a fixed length per group (SEC1-style compressed form,
identity is all-zero bytes). Scalars serialize big-endian with
``ceil(order_bits / 8)`` bytes.

Addresses are embedded into points by try-and-increment on the
x-coordinate::

    x = tag || address || counter

with the smallest counter that yields a curve point, and the even-y root
picked. Decoding checks the tag, the y parity and that the counter is the
first valid one, so every address has exactly one valid embedding.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from typing import Any, Optional

import coincurve

from .errors import DecodeFailure, EncodingFailure, InvalidPoint, InvalidScalar

ADDRESS_LEN = 20


class Address(bytes):
    """A 20-byte account identifier."""

    def __new__(cls, value: bytes):
        if len(value) != ADDRESS_LEN:
            raise ValueError(f"address must be {ADDRESS_LEN} bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        if text.startswith("0x"):
            text = text[2:]
        return cls(bytes.fromhex(text))

    def __str__(self) -> str:
        return "0x" + self.hex()

    def __repr__(self) -> str:
        return f"Address({self})"


class Point:
    """An element of a ``Group``; immutable.

    Supports ``P + Q``, ``P - Q``, ``-P`` and ``k * P`` for an integer ``k``.
    """

    __slots__ = ("group", "_raw")

    def __init__(self, group: "Group", raw: Any):
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "_raw", raw)

    def __setattr__(self, name, value):
        raise AttributeError("Point is immutable")

    @property
    def is_identity(self) -> bool:
        return self._raw is None

    def __add__(self, other: "Point") -> "Point":
        self._check(other)
        return Point(self.group, self.group._add(self._raw, other._raw))

    def __neg__(self) -> "Point":
        return Point(self.group, self.group._neg(self._raw))

    def __sub__(self, other: "Point") -> "Point":
        return self + (-other)

    def __rmul__(self, k: int) -> "Point":
        if not isinstance(k, int):
            return NotImplemented
        return Point(self.group, self.group._mul(self._raw, k % self.group.order))

    __mul__ = __rmul__

    def __bytes__(self) -> bytes:
        return self.group._to_bytes(self._raw)

    def to_bytes(self) -> bytes:
        return self.group._to_bytes(self._raw)

    def xy(self) -> Optional[tuple[int, int]]:
        """Affine coordinates, or None for the identity."""
        return None if self._raw is None else self.group._xy(self._raw)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return self.group.name == other.group.name and bytes(self) == bytes(other)

    def __hash__(self) -> int:
        return hash((self.group.name, bytes(self)))

    def __repr__(self) -> str:
        if self.is_identity:
            return f"Point({self.group.name}, identity)"
        return f"Point({self.group.name}, {bytes(self).hex()})"

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def _check(self, other):
        if not isinstance(other, Point) or other.group.name != self.group.name:
            raise TypeError("points belong to different groups")


def _length_prefixed(parts) -> bytes:
    out = bytearray()
    for part in parts:
        if isinstance(part, str):
            part = part.encode()
        elif isinstance(part, int):
            part = part.to_bytes((part.bit_length() + 8) // 8, "big")
        elif isinstance(part, Point):
            part = bytes(part)
        out += len(part).to_bytes(4, "big") + part
    return bytes(out)


class Group(ABC):
    """Common interface of a prime-order group with address embedding."""

    name: str
    order: int
    field_prime: int
    point_size: int
    # address embedding layout (bits of the x-coordinate)
    embed_tag: int
    tag_bits: int
    payload_bits: int
    counter_bits: int

    @property
    def scalar_size(self) -> int:
        return (self.order.bit_length() + 7) // 8

    @property
    def security_bits(self) -> int:
        return self.order.bit_length() // 2

    @property
    def generator(self) -> Point:
        return self._generator

    @property
    def identity(self) -> Point:
        return Point(self, None)

    # -- backend primitives ------------------------------------------------
    @abstractmethod
    def _add(self, a, b): ...

    @abstractmethod
    def _neg(self, a): ...

    @abstractmethod
    def _mul(self, a, k: int): ...

    @abstractmethod
    def _to_bytes(self, a) -> bytes: ...

    @abstractmethod
    def _from_bytes(self, data: bytes): ...

    @abstractmethod
    def _lift_x(self, x: int):
        """Point with the given x and even y, or None if x is not on the curve."""

    @abstractmethod
    def _xy(self, a) -> tuple[int, int]: ...

    # -- points and scalars -------------------------------------------------
    def base_mul(self, k: int) -> Point:
        return k * self._generator

    def point_from_bytes(self, data: bytes) -> Point:
        data = bytes(data)
        if len(data) != self.point_size:
            raise InvalidPoint(f"expected {self.point_size} bytes, got {len(data)}")
        if not any(data):
            return self.identity
        return Point(self, self._from_bytes(data))

    def scalar_to_bytes(self, k: int) -> bytes:
        if not 0 <= k < self.order:
            raise InvalidScalar("scalar out of range")
        return k.to_bytes(self.scalar_size, "big")

    def scalar_from_bytes(self, data: bytes) -> int:
        if len(data) != self.scalar_size:
            raise InvalidScalar(f"expected {self.scalar_size} bytes, got {len(data)}")
        k = int.from_bytes(data, "big")
        if k >= self.order:
            raise InvalidScalar("scalar not reduced")
        return k

    def check_scalar(self, k: int, what: str = "scalar") -> int:
        """Validate a secret scalar: an int in [1, order - 1]."""
        if not isinstance(k, int) or isinstance(k, bool):
            raise InvalidScalar(f"{what} must be an int")
        if not 1 <= k < self.order:
            raise InvalidScalar(f"{what} must lie in [1, q-1]")
        return k

    def hash_to_scalar(self, domain: bytes, *parts) -> int:
        """Deterministic nonzero scalar from a domain tag and byte parts.

        SHA-512 over the length-prefixed input, reduced mod the order; a zero
        result is re-hashed with an incremented counter.
        """
        body = _length_prefixed((domain, self.name, *parts))
        counter = 0
        while True:
            digest = hashlib.sha512(body + counter.to_bytes(4, "big")).digest()
            k = int.from_bytes(digest, "big") % self.order
            if k:
                return k
            counter += 1

    # -- address embedding --------------------------------------------------
    @property
    def address_capacity_bits(self) -> int:
        return self.payload_bits

    def _embedding_base(self, address: bytes) -> int:
        value = int.from_bytes(address, "big")
        if value >> self.payload_bits:
            raise EncodingFailure(
                f"address exceeds the {self.payload_bits}-bit capacity of group {self.name}")
        return ((self.embed_tag << self.payload_bits) | value) << self.counter_bits

    def encode_address(self, address: bytes) -> Point:
        address = Address(address)
        base = self._embedding_base(address)
        for counter in range(1 << self.counter_bits):
            raw = self._lift_x(base | counter)
            if raw is not None:
                return Point(self, raw)
        raise EncodingFailure(f"no curve point for {address} within the counter budget")

    def decode_point(self, point: Point) -> Address:
        if point.group.name != self.name:
            raise DecodeFailure("point from a different group")
        if point.is_identity:
            raise DecodeFailure("identity carries no embedding")
        x, y = point.xy()
        if y & 1:
            raise DecodeFailure("odd y is never used by the embedding")
        if x >> (self.payload_bits + self.counter_bits) != self.embed_tag:
            raise DecodeFailure("embedding tag mismatch")
        value = (x >> self.counter_bits) & ((1 << self.payload_bits) - 1)
        address = Address(value.to_bytes(ADDRESS_LEN, "big"))
        try:
            canonical = self.encode_address(address)
        except EncodingFailure as exc:
            raise DecodeFailure(str(exc)) from None
        if canonical != point:
            raise DecodeFailure("non-canonical embedding counter")
        return address

    def can_encode(self, address: bytes) -> bool:
        try:
            self.encode_address(address)
        except EncodingFailure:
            return False
        return True

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} q={self.order}>"


SECP256K1_P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
SECP256K1_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141


class Secp256k1Group(Group):
    """secp256k1 through libsecp256k1. Points are 33-byte compressed SEC1."""

    name = "secp256k1"
    order = SECP256K1_N
    field_prime = SECP256K1_P
    point_size = 33
    embed_tag = 0x74726163  # b"trac"
    tag_bits = 32
    payload_bits = 160
    counter_bits = 8

    def __init__(self):
        one = (1).to_bytes(32, "big")
        self._generator = Point(self, coincurve.PublicKey.from_secret(one))

    def base_mul(self, k: int) -> Point:
        k %= self.order
        if k == 0:
            return self.identity
        return Point(self, coincurve.PublicKey.from_secret(k.to_bytes(32, "big")))

    def _add(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        try:
            return coincurve.PublicKey.combine_keys([a, b])
        except ValueError:
            # only fails when the sum is the point at infinity
            return None

    def _neg(self, a):
        if a is None:
            return None
        enc = bytearray(a.format(compressed=True))
        enc[0] ^= 0x01
        return coincurve.PublicKey(bytes(enc))

    def _mul(self, a, k: int):
        if a is None or k == 0:
            return None
        return a.multiply(k.to_bytes(32, "big"))

    def _to_bytes(self, a) -> bytes:
        if a is None:
            return bytes(self.point_size)
        return a.format(compressed=True)

    def _from_bytes(self, data: bytes):
        if data[0] not in (2, 3):
            raise InvalidPoint("bad SEC1 prefix")
        try:
            return coincurve.PublicKey(data)
        except ValueError:
            raise InvalidPoint("not a point on secp256k1") from None

    def _lift_x(self, x: int):
        if x >= self.field_prime:
            return None
        try:
            return coincurve.PublicKey(b"\x02" + x.to_bytes(32, "big"))
        except ValueError:
            return None

    def _xy(self, a):
        return a.point()


class ToyCurveGroup(Group):
    """Curve ``y^2 = x^3 + a x + b`` over a small prime field with prime order.

    Pure-Python affine arithmetic; points are ``(x, y)`` tuples internally.
    Field primes are restricted to ``p = 3 (mod 4)`` so square roots are one
    exponentiation.
    """

    tag_bits = 2
    counter_bits = 4

    def __init__(self, name: str, p: int, a: int, b: int, order: int):
        if p % 4 != 3:
            raise ValueError("toy field prime must be 3 mod 4")
        self.name = name
        self.field_prime = p
        self.a = a
        self.b = b
        self.order = order
        self.point_size = 1 + (p.bit_length() + 7) // 8
        room = p.bit_length() - 1 - self.tag_bits - self.counter_bits
        self.payload_bits = max(room, 0)
        self.embed_tag = 0b10
        self._generator = Point(self, self._first_point())
        if not (order * self._generator).is_identity:
            raise ValueError("generator order does not match the declared order")

    def _first_point(self):
        for x in range(self.field_prime):
            pt = self._lift_x(x)
            if pt is not None and pt[1] != 0:
                return pt
        raise ValueError("curve has no affine points")

    def _rhs(self, x: int) -> int:
        return (x * x * x + self.a * x + self.b) % self.field_prime

    def _sqrt(self, v: int) -> Optional[int]:
        p = self.field_prime
        y = pow(v, (p + 1) // 4, p)
        return y if y * y % p == v else None

    def _add(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        p = self.field_prime
        x1, y1 = a
        x2, y2 = b
        if x1 == x2:
            if (y1 + y2) % p == 0:
                return None
            lam = (3 * x1 * x1 + self.a) * pow(2 * y1, -1, p) % p
        else:
            lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
        x3 = (lam * lam - x1 - x2) % p
        return (x3, (lam * (x1 - x3) - y1) % p)

    def _neg(self, a):
        if a is None:
            return None
        return (a[0], -a[1] % self.field_prime)

    def _mul(self, a, k: int):
        result = None
        addend = a
        while k and addend is not None:
            if k & 1:
                result = self._add(result, addend)
            addend = self._add(addend, addend)
            k >>= 1
        return result

    def _to_bytes(self, a) -> bytes:
        if a is None:
            return bytes(self.point_size)
        x, y = a
        return bytes([2 | (y & 1)]) + x.to_bytes(self.point_size - 1, "big")

    def _from_bytes(self, data: bytes):
        prefix = data[0]
        if prefix not in (2, 3):
            raise InvalidPoint("bad prefix")
        x = int.from_bytes(data[1:], "big")
        if x >= self.field_prime:
            raise InvalidPoint("x not in field")
        y = self._sqrt(self._rhs(x))
        if y is None:
            raise InvalidPoint("x not on curve")
        if (y & 1) != (prefix & 1):
            y = -y % self.field_prime
            if (y & 1) != (prefix & 1):
                raise InvalidPoint("no root with requested parity")
        return (x, y)

    def _lift_x(self, x: int):
        if x >= self.field_prime:
            return None
        y = self._sqrt(self._rhs(x))
        if y is None:
            return None
        if y & 1:
            y = self.field_prime - y
        return (x, y)

    def _xy(self, a):
        return a


PRODUCTION = Secp256k1Group()
# order 7927 < 2**13; the default toy group
TOY = ToyCurveGroup("toy-7927", p=7963, a=1, b=25, order=7927)
TOY_101 = ToyCurveGroup("toy-101", p=107, a=2, b=22, order=101)
TOY_11 = ToyCurveGroup("toy-11", p=11, a=1, b=5, order=11)

_GROUPS = {
    "production": PRODUCTION,
    "secp256k1": PRODUCTION,
    "toy": TOY,
    TOY.name: TOY,
    TOY_101.name: TOY_101,
    TOY_11.name: TOY_11,
}


def get_group(name: str) -> Group:
    try:
        return _GROUPS[name]
    except KeyError:
        raise ValueError(f"unknown group {name!r}; choose from {sorted(_GROUPS)}") from None
