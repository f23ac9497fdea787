"""EC-ElGamal over a ``Group``: ``Enc(M) = (k*G, M + k*Q)``."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidKey, InvalidPoint
from .group import Group, Point


@dataclass(frozen=True)
class KeyPair:
    private: int
    public: Point

    @property
    def group(self) -> Group:
        return self.public.group


@dataclass(frozen=True)
class Ciphertext:
    c1: Point
    c2: Point

    @property
    def group(self) -> Group:
        return self.c1.group

    def to_bytes(self) -> bytes:
        return bytes(self.c1) + bytes(self.c2)

    @classmethod
    def from_bytes(cls, group: Group, data: bytes) -> "Ciphertext":
        n = group.point_size
        if len(data) != 2 * n:
            raise InvalidPoint(f"ciphertext must be {2 * n} bytes, got {len(data)}")
        return cls(group.point_from_bytes(data[:n]), group.point_from_bytes(data[n:]))


def keygen(group: Group, seed: bytes) -> KeyPair:
    """Deterministic key pair from a nonempty seed."""
    if not seed:
        raise ValueError("seed must be nonempty")
    d = group.hash_to_scalar(b"tracechain/keygen", seed)
    return KeyPair(d, group.base_mul(d))


def encrypt(public: Point, message: Point, k: int) -> Ciphertext:
    group = public.group
    group.check_scalar(k, "token")
    if public.is_identity:
        raise InvalidKey("public key is the identity")
    if message.group.name != group.name:
        raise TypeError("message point belongs to a different group")
    return Ciphertext(group.base_mul(k), message + k * public)


def decrypt(private: int, ct: Ciphertext) -> Point:
    ct.group.check_scalar(private, "private key")
    return ct.c2 - private * ct.c1
