"""Exception hierarchy shared by the numerical modules, the harness and the CLI."""


class LabError(Exception):
    """Base class; ``category`` prefixes the one-line CLI diagnostic."""

    category = "lab"


class FieldError(LabError, ValueError):
    category = "field"


class ModulusDomainError(LabError, ValueError):
    category = "modulus"


class EstimatorError(LabError, ValueError):
    category = "estimator"


class FlowError(LabError, ValueError):
    category = "flow"


class SolverError(LabError):
    category = "solver"


class CFLViolation(SolverError, ValueError):
    def __init__(self, courant, limit, dt, max_dt):
        self.courant = courant
        self.limit = limit
        self.dt = dt
        self.max_dt = max_dt
        super().__init__(
            f"CFL number {courant:.3g} exceeds {limit:g} at dt={dt:g}; "
            f"use dt <= {max_dt:.3g} or a coarser grid"
        )


class SymmetryError(SolverError, ValueError):
    pass


class MeanNotZeroError(SolverError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    category = "config"

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class ReportError(LabError, OSError):
    category = "io"


class ReportWriteError(ReportError):
    def __init__(self, message, written=()):
        self.written = list(written)
        super().__init__(f"{message} (already written: {', '.join(self.written) or 'none'})")
