"""Exception hierarchy shared by the engine, oracles and algorithms."""


class CongestError(Exception):
    """Base class for every error raised by this package."""


# Graph model

class GraphValidationError(CongestError):
    """A graph violates a structural invariant."""


class NegativeWeightInNonnegativeMode(GraphValidationError):
    pass


class SelfLoop(GraphValidationError):
    pass


class DuplicateEdge(GraphValidationError):
    pass


class NodeOutOfRange(GraphValidationError):
    pass


class GraphFormatError(CongestError):
    """A graph file could not be parsed."""

    def __init__(self, message: str, line_number: int = 0):
        self.line_number = line_number
        if line_number:
            message = f"line {line_number}: {message}"
        super().__init__(message)


# Engine

class EngineError(CongestError):
    """Raised by the round engine."""


class RoundLimitExceeded(EngineError):
    def __init__(self, round_limit: int):
        self.round_limit = round_limit
        super().__init__(
            f"Execution did not quiesce within {round_limit} rounds"
        )


class MessageTooLarge(EngineError):
    def __init__(self, sender: int, bit_size: int, budget: int):
        self.sender = sender
        self.bit_size = bit_size
        self.budget = budget
        super().__init__(
            f"Node {sender} sent a {bit_size}-bit message (budget {budget} bits)"
        )


class LocalityViolation(EngineError):
    """A node program addressed a node outside its local view."""


# Algorithms

class AlgorithmError(CongestError):
    """Raised when an algorithm cannot produce a result."""


class NegativeWeight(AlgorithmError):
    pass


class NegativeCycle(AlgorithmError):
    pass


class InvalidHopBound(AlgorithmError):
    pass


class InvalidParameter(AlgorithmError):
    pass


class NotATree(AlgorithmError):
    pass


class AllZero(AlgorithmError):
    """Every blocker score is zero; the greedy loop is finished."""


class EpsilonTooSmall(AlgorithmError):
    def __init__(self, epsilon, n: int):
        self.epsilon = epsilon
        self.n = n
        super().__init__(f"epsilon={epsilon} must exceed 3/n = 3/{n}")
