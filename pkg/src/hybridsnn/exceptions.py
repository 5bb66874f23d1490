"""Exception types raised across the simulator."""


class DomainError(ValueError):
    """An input value lies outside the domain an operation accepts."""


class ShapeError(ValueError):
    """Tensor or layer dimensions are inconsistent."""


class FormatError(ValueError):
    """A file or serialized payload does not follow its declared format."""


class TopologyError(ValueError):
    """A topology string cannot be parsed or its dimensions do not flow."""


class VerificationError(RuntimeError):
    """Simulator output disagrees with the reference model."""
