"""Exception types shared across the package."""


class PlantgenError(Exception):
    """Base class for all package errors."""


class ValidationError(PlantgenError, ValueError):
    """Invalid input data: broken invariants, bad shapes, out-of-range values."""


class DomainError(PlantgenError, ValueError):
    """Parametric evaluation requested outside the valid domain."""


class DescriptorError(ValidationError):
    """Plant descriptor parsing or resolution failure.

    Carries a dotted `location` breadcrumb (e.g. ``leaves.globals.camber``)
    so the user can find the offending key in the YAML file.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class FormatError(PlantgenError, ValueError):
    """Malformed file content (STL / SMESH / point cloud)."""
