"""Exception hierarchy shared by every module of the package."""


class HFNSError(Exception):
    """Base class for all package errors."""


class HorizontalMeanError(HFNSError, ValueError):
    """A negative power of the horizontal Laplacian met energy on k_h = 0 modes."""


class OffLatticeError(HFNSError, ValueError):
    """A time argument does not fall on the trajectory sample lattice."""


class BlowUpError(HFNSError, FloatingPointError):
    """Non-finite coefficients appeared during time stepping."""

    def __init__(self, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(f"blow-up detected at step {step} (t = {time:.6g})")


class ConfigError(HFNSError, ValueError):
    """Invalid run configuration; carries the offending key and line if known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class SnapshotError(HFNSError, IOError):
    """Base class for snapshot container failures."""


class ShortReadError(SnapshotError):
    pass


class BadMagicError(SnapshotError):
    pass


class DimensionMismatchError(SnapshotError):
    pass
