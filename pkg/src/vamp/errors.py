"""Exception hierarchy shared by every vamp module."""


class VampError(Exception):
    """Base class for all vamp errors."""


class VerificationError(VampError):
    """Something failed an integrity or authenticity check."""


# manifest model / serialization
class InvalidManifest(VampError):
    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues) or "invalid manifest")


class UnsupportedFormat(VampError):
    pass


class MalformedInput(VampError):
    pass


class SchemaViolation(MalformedInput):
    pass


class NonCanonical(MalformedInput):
    pass


# crypto
class UntrustedRoot(VerificationError):
    pass


class Expired(VerificationError):
    pass


class BadSignature(VerificationError):
    pass


class ChainTooLong(VerificationError):
    pass


class MalformedPayload(VerificationError):
    pass


class KeyMismatch(VampError):
    pass


class ExpiredIssuer(VampError):
    pass


class InvalidIssuerKey(VampError):
    pass


# binding
class RangeOutOfBounds(VampError):
    pass


class MalformedProof(VampError):
    pass


# container
class BindingMismatch(VerificationError):
    pass


class OversizeManifest(VampError):
    pass


class InvalidLocator(VampError):
    pass


class CorruptHeader(VampError):
    pass


class ManifestNotFound(VampError):
    pass


class DivergentCopies(VerificationError):
    pass


# provenance
class CycleDetected(VampError):
    pass


class DuplicateId(VampError):
    pass


class UnknownId(VampError):
    pass


# ledger
class LogSealed(VampError):
    pass


class OutOfRange(VampError):
    pass


class CorruptLog(VampError):
    pass


class MalformedEnvelope(MalformedInput):
    pass
