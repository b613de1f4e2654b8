"""Exception hierarchy shared by every nftpos module."""


class NftPosError(Exception):
    """Base class for all errors raised by nftpos."""


# chain_core
class ChainError(NftPosError):
    pass


class EmptyValidator(ChainError):
    pass


class NonMonotoneTime(ChainError):
    pass


class OversizedBlock(ChainError):
    pass


class MalformedTransaction(ChainError):
    pass


# identity_nft
class IdentityError(NftPosError):
    pass


class EmptySecret(IdentityError):
    pass


class LabelTooLong(IdentityError):
    pass


class AuthenticationError(IdentityError):
    """Login failure.

    Subclasses tell callers *why* authentication failed, but every instance
    renders the same message so the reason never leaks to an end user.
    """

    MESSAGE = "authentication failed"

    def __init__(self, *_ignored):
        super().__init__(self.MESSAGE)

    def __str__(self):
        return self.MESSAGE

    def __repr__(self):
        return f"AuthenticationError({self.MESSAGE!r})"


class UnknownNft(AuthenticationError):
    pass


class BadCredential(AuthenticationError):
    pass


# stake_pos
class StakeError(NftPosError):
    pass


class UnregisteredId(StakeError):
    pass


class ZeroAmount(StakeError):
    pass


class StakeOverflow(StakeError):
    pass


class NoStake(StakeError):
    pass


# txpool
class TxError(NftPosError):
    pass


class InvalidSession(TxError):
    pass


class PayloadTooLarge(TxError):
    pass


class WrongLength(TxError):
    pass


# sim_harness
class ConfigInvalid(NftPosError):
    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"invalid config field {field!r}: {reason}")


class UnknownAxis(ConfigInvalid):
    def __init__(self, axis):
        super().__init__("axis", f"cannot sweep over {axis!r}")


# metrics
class MetricsError(NftPosError):
    pass


class ZeroDuration(MetricsError):
    pass


class BadWindow(MetricsError):
    pass


# persistence
class PersistenceError(NftPosError):
    pass


class IoFailure(PersistenceError):
    pass


class InvalidChain(PersistenceError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"refusing to store invalid chain: {report.describe()}")


class BadMagic(PersistenceError):
    pass


class UnsupportedVersion(PersistenceError):
    pass


class CorruptRecord(PersistenceError):
    def __init__(self, offset, reason):
        self.offset = offset
        self.reason = reason
        super().__init__(f"corrupt record at byte offset {offset}: {reason}")


class ChainInvalid(PersistenceError):
    def __init__(self, report):
        self.report = report
        self.height = report.height
        super().__init__(f"chain failed verification: {report.describe()}")


class TipMismatch(PersistenceError):
    pass
