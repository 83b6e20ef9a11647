# lmi/exceptions.py


class NumericalBreakdown(RuntimeError):
    """El método de punto interior se estancó sin llegar a un veredicto."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class DimensionMismatch(ValueError):
    pass
