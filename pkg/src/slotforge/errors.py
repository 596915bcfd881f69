"""Exception hierarchy shared by all slotforge modules."""


class SlotforgeError(Exception):
    pass


class ParseError(SlotforgeError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RealisationError(SlotforgeError):
    def __init__(self, slot_type):
        self.slot_type = slot_type
        super().__init__(f"no slot values known for slot type {slot_type!r}")


class DomainError(SlotforgeError, ValueError):
    pass


class CheckpointError(SlotforgeError):
    pass


class ConfigError(SlotforgeError):
    pass


class TrainingError(SlotforgeError):
    pass


class PipelineError(SlotforgeError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
