"""Exception hierarchy shared by all modules."""


class GroupcharError(Exception):
    """Base class for every error raised by :mod:`groupchar`."""


class StructuralError(GroupcharError, ValueError):
    """Operands live in different groups, or a set is not a subgroup."""


class BudgetExceeded(GroupcharError):
    """An exhaustive enumeration would exceed its tuple budget."""

    def __init__(self, needed, budget):
        super().__init__(f"exhaustive enumeration needs {needed} tuples, budget is {budget}")
        self.needed = needed
        self.budget = budget


class NotASignedMeasure(GroupcharError):
    """Fourier inversion left an imaginary residue (input not conjugate symmetric)."""

    def __init__(self, residue):
        super().__init__(f"imaginary residue {residue:.3e} after inversion")
        self.residue = residue


class VanishingCharFunction(GroupcharError):
    """A characteristic function vanishes where it is required not to."""

    def __init__(self, where, value):
        super().__init__(f"characteristic function vanishes at {where} (|value| = {abs(value):.3e})")
        self.where = where
        self.value = value


class NotACharacter(GroupcharError):
    """A unit-modulus function is not multiplicative."""

    def __init__(self, witness, violation):
        super().__init__(f"not multiplicative at (u, v) = {witness}, violation {violation:.3e}")
        self.witness = witness
        self.violation = violation


class HypothesisViolated(GroupcharError):
    """An input does not satisfy a precondition of a decomposition step."""


class NotDecomposable(GroupcharError):
    """The input does not have the structure a decomposition step expects."""


class NotASolution(GroupcharError):
    """The characteristic function fails the product equation."""

    def __init__(self, report):
        super().__init__(f"product equation violated by {report.max_violation:.3e} at {report.witness}")
        self.report = report


class ConditionUndefined(GroupcharError):
    """Conditioning on an event of probability zero."""


class DegenerateConditional(GroupcharError):
    """A conditional expectation is too close to zero to have a phase."""


class ConstraintViolated(GroupcharError):
    """Model parameters violate a construction constraint."""
