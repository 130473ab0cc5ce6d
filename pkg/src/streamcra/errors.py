"""Exception hierarchy shared by every module of the package."""


class StreamCraError(Exception):
    """Base class for all package errors."""


class ParseError(StreamCraError):
    pass


# values and expressions
class UnboundRegister(StreamCraError):
    pass


class MissingCurrentVal(StreamCraError):
    pass


class UnknownOperation(StreamCraError):
    pass


class UnknownDomain(StreamCraError):
    pass


class PartialOperationRejected(StreamCraError):
    pass


class LawViolation(StreamCraError):
    pass


class ValueParseError(StreamCraError):
    pass


# automata
class AlphabetMismatch(StreamCraError):
    pass


class EpsilonCycle(StreamCraError):
    pass


# machines
class ArityMismatch(StreamCraError):
    pass


class AmbiguityDetected(StreamCraError):
    pass


class PreconditionError(StreamCraError):
    pass


class BoundExceeded(StreamCraError):
    pass


class NoConstant(StreamCraError):
    pass


class NotUnambiguous(StreamCraError):
    pass


class NonUnaryOperation(StreamCraError):
    pass


class TagOutOfAlphabet(StreamCraError):
    pass


# combinators
class PrefixSumOnPartial(StreamCraError):
    pass


# weighted
class NonLinearizableExpression(StreamCraError):
    pass


class PartialRate(StreamCraError):
    pass


class RegistryMismatch(StreamCraError):
    pass


# transductions
class NotWellFormed(StreamCraError):
    pass


class MalformedDag(StreamCraError):
    pass


# cli
class BudgetExceeded(StreamCraError):
    pass
