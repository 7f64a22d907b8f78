class FluidmatchException(Exception):
    pass


class DomainException(FluidmatchException, ValueError):
    pass


class FeasibilityException(FluidmatchException):
    pass


class GradientUndefinedException(FluidmatchException):
    pass


class InstanceTooLargeException(FluidmatchException):
    pass


class StructureException(FluidmatchException):
    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class TruncationException(FluidmatchException):
    pass


class ConfigurationException(FluidmatchException):
    pass
