"""Exception hierarchy shared across the toolkit.

Three families map onto distinct CLI exit codes: input format problems,
data/parameter validation problems, and model artifact problems.
"""


class EdgebotError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 6


class FormatError(EdgebotError):
    """Malformed input text (Zeek logs, CSV)."""

    exit_code = 3


class MissingHeader(FormatError):
    pass


class FieldCountMismatch(FormatError):
    def __init__(self, line_no, expected, actual):
        super().__init__(
            f"line {line_no}: expected {expected} fields, found {actual}"
        )
        self.line_no = line_no
        self.expected = expected
        self.actual = actual


class UnparsableValue(FormatError):
    def __init__(self, column, line_no, value):
        super().__init__(f"line {line_no}: column {column!r} has unparsable value {value!r}")
        self.column = column
        self.line_no = line_no
        self.value = value


class UnbalancedQuote(FormatError):
    def __init__(self, line_no):
        super().__init__(f"line {line_no}: unbalanced quote in CSV input")
        self.line_no = line_no


class DataError(EdgebotError):
    """Invalid data or parameters for an operation."""

    exit_code = 4


class InsufficientClassSamples(DataError):
    def __init__(self, class_name, requested, available):
        super().__init__(
            f"class {class_name!r}: requested {requested} samples, "
            f"only {available} available (short by {requested - available})"
        )
        self.class_name = class_name
        self.requested = requested
        self.available = available


class TooFewRows(DataError):
    pass


class EmptyInput(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ConstantInput(DataError):
    pass


class AllZero(DataError):
    pass


class EmptyNode(DataError):
    pass


class EmptyChild(DataError):
    pass


class CountMismatch(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class NoPositiveRows(DataError):
    pass


class PayloadKindMismatch(DataError):
    pass


class FeatureIndexOutOfRange(DataError):
    pass


class ProbabilityOutOfRange(DataError):
    pass


class InvalidParams(DataError):
    pass


class InvalidConfig(DataError):
    pass


class UntrainedModel(DataError):
    pass


class ArtifactError(EdgebotError):
    """Problems loading or validating a serialized model artifact."""

    exit_code = 5


class ChecksumMismatch(ArtifactError):
    pass


class UnsupportedVersion(ArtifactError):
    pass


class TruncatedArtifact(ArtifactError):
    pass
