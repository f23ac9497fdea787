"""Exception hierarchy shared across the package."""


class TracechainError(Exception):
    """Base class for all package errors."""


# group / encryption

class GroupError(TracechainError):
    pass


class InvalidPoint(GroupError):
    """Byte string does not decode to an element of the prime-order group."""


class InvalidScalar(GroupError):
    pass


class InvalidKey(GroupError):
    pass


class EncodingFailure(GroupError):
    """An address could not be embedded as a group element."""


class DecodeFailure(GroupError):
    """A group element does not carry a valid address embedding."""


# proofs

class ProofError(TracechainError):
    pass


class WitnessMismatch(ProofError):
    pass


class MalformedProof(ProofError):
    pass


# ledger

class LedgerError(TracechainError):
    pass


class UnknownContract(LedgerError):
    pass


class UnknownSender(LedgerError):
    pass


class DuplicateSeed(LedgerError):
    pass


class UnknownCostClass(LedgerError):
    pass


class Revert(TracechainError):
    """Raised inside contract code to abort the current transaction.

    ``reason`` is a stable identifier such as ``"NotAdministrator"``.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


# party protocol

class ProtocolError(TracechainError):
    pass


class NotManufacturerKey(ProtocolError):
    pass


class HopFailed(ProtocolError):
    def __init__(self, step: str, reason: str, transactions=()):
        self.step = step
        self.reason = reason
        self.transactions = tuple(transactions)
        super().__init__(f"hop failed at {step}: {reason}")


# scenario runner

class ScenarioError(TracechainError):
    exit_code = 1


class ParseError(ScenarioError):
    exit_code = 2


class ValidationError(ScenarioError):
    exit_code = 3


class ScenarioFailure(ScenarioError):
    exit_code = 4

    def __init__(self, step: str, message: str):
        self.step = step
        super().__init__(f"[{step}] {message}")


class UnknownAttackKind(ScenarioError):
    exit_code = 3
