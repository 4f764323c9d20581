"""Exception hierarchy. ``exit_code`` drives the CLI's process exit status."""


class MiaGridError(Exception):
    exit_code = 1


class ConfigError(MiaGridError):
    """Invalid specification, configuration, or input shape."""

    exit_code = 2


class TrainingDivergedError(MiaGridError):
    """Non-finite loss encountered during training; carries the step index."""

    exit_code = 3

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite loss at training step {step}")


class AccountingError(MiaGridError):
    exit_code = 3


class CalibrationError(MiaGridError):
    exit_code = 3


class HpoFailedError(MiaGridError):
    """All HPO trials diverged; carries per-trial diagnostics."""

    exit_code = 3

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__(
            "all HPO trials diverged: " + "; ".join(str(d) for d in self.diagnostics)
        )


class InsufficientShadowsError(MiaGridError):
    """A sample lacks IN or OUT shadow models under the current assignment."""

    exit_code = 3

    def __init__(self, sample_id, message=None):
        self.sample_id = sample_id
        super().__init__(
            message or f"sample {sample_id} has no IN or no OUT shadow models"
        )


class MetricError(MiaGridError):
    exit_code = 3


class NumericError(MiaGridError):
    exit_code = 3


class IntegrityError(MiaGridError):
    """Store content does not match its digest or an existing object."""

    exit_code = 4
