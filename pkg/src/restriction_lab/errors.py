"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside its admissible range."""


class ResolutionError(ValueError):
    """The frequency grid is too coarse for the requested evaluation points.

    ``required_h`` carries the largest admissible grid spacing.
    """

    def __init__(self, message, required_h):
        super().__init__(f"{message} (required h <= {required_h:.17g})")
        self.required_h = float(required_h)


class DegeneratePairError(ValueError):
    """Two caps with identical centers were given where distinct ones are needed."""
