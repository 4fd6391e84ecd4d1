"""Exception hierarchy. Each class carries the CLI exit code for its error class."""


class ReqmineError(Exception):
    exit_code = 1


class MissingInputError(ReqmineError):
    exit_code = 2


class SchemaError(ReqmineError):
    exit_code = 3


class ValidationError(ReqmineError):
    """Bad content in an input file; ``details`` lists offending lines."""

    exit_code = 4

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = list(details or [])

    def __str__(self):
        msg = super().__str__()
        if self.details:
            msg += "\n  " + "\n  ".join(str(d) for d in self.details[:20])
            if len(self.details) > 20:
                msg += f"\n  ... ({len(self.details) - 20} more)"
        return msg


class FormatError(ValidationError):
    pass


class AggregationError(ValidationError):
    pass


class TrainingError(ReqmineError):
    pass


class ResamplingError(TrainingError):
    pass


class PlanError(ReqmineError):
    pass
