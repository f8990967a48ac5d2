"""Exception types shared across the package."""


class SpnError(Exception):
    """Base class for all library errors."""


class CircuitStructureError(SpnError):
    """Malformed circuit: bad references, ordering, or arity."""


class CycleError(CircuitStructureError):
    """A node references a child with an id >= its own id."""


class MonotonicityError(CircuitStructureError):
    """Negative weight, constant, or leaf value in a non-extended circuit."""


class DomainError(SpnError):
    """A value lies outside a variable's domain, or a domain is invalid."""


class UnknownVariableError(SpnError):
    """Assignment or query references a variable the circuit does not have."""


class SerializationError(SpnError):
    """Malformed circuit/machine document."""


class TermExplosionError(SpnError):
    """Polynomial expansion exceeded the configured monomial cap."""


class ExtendedCircuitError(SpnError):
    """An operation that requires a monotone circuit got an extended one."""


class ZeroCircuitError(SpnError):
    """Pruning eliminated the root: the circuit computes the zero polynomial."""


class TrivialVariableError(SpnError):
    """A variable has fewer than two domain values."""


class DegenerateCircuitError(SpnError):
    """The circuit has zero weights or zero constants; prune first."""


class NotDecomposableCompleteError(SpnError):
    """Operation requires a decomposable and complete circuit."""


class ZeroPartitionError(SpnError):
    """Partition function is zero; no distribution is defined."""


class NotNormalizedError(SpnError):
    """Sampling requires a weight-normalized circuit."""


class InstanceTooLargeError(SpnError):
    """Input exceeds the bounds of an exhaustive or exact operation."""
