"""Exception types shared across the package."""


class DomainError(ValueError):
    """A pair potential was evaluated outside its domain (r <= 0 or at a pole)."""


class DegenerateGradientError(ValueError):
    """The gradient is too small to define a direction."""


class ZeroEnergyError(ValueError):
    """The stationarity ratio is undefined because the cluster energy is zero."""


class NumericBreakdownError(ArithmeticError):
    """NaN or Inf appeared where a finite value is required.

    When the failure happened partway through an iteration, last_coords
    holds the most recent finite coordinate array so callers can save it.
    """

    def __init__(self, message, last_coords=None):
        self.last_coords = last_coords
        super().__init__(message)


class FrontierExhaustedError(RuntimeError):
    """No vacant neighbor site is available to grow into."""


class OffLatticeError(LookupError):
    """A point could not be matched to any lattice site within tolerance."""

    def __init__(self, point, tol):
        self.point = tuple(float(v) for v in point)
        self.tol = float(tol)
        super().__init__(
            f"point ({self.point[0]:.6g}, {self.point[1]:.6g}, {self.point[2]:.6g}) "
            f"matches no lattice site within {self.tol:.3g}"
        )


class AmbiguousSiteError(LookupError):
    """More than one lattice site matched a point within tolerance."""


class SymmetryViolationError(RuntimeError):
    """A rotation mapped an occupied lattice site off the lattice."""


class CatalogError(ValueError):
    """Base class for catalog file problems."""


class CatalogSyntaxError(CatalogError):
    """The catalog text does not follow the MIFCAT format."""

    def __init__(self, lineno, message):
        self.lineno = int(lineno)
        super().__init__(f"line {self.lineno}: {message}")


class CatalogIntegrityError(CatalogError):
    """The catalog parses but its content is internally inconsistent."""


class XyzParseError(ValueError):
    """An XYZ file does not follow the expected layout."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = int(lineno)
        super().__init__(f"{self.path}:{self.lineno}: {message}")
