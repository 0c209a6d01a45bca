from enum import Enum


class GammaMode(str, Enum):
    EXPLICIT = "explicit"
    ALGORITHM1 = "algorithm1"
    VARIANCE = "variance"


class PayloadMode(str, Enum):
    GRADIENT = "gradient"  # workers send the braced term B_j
    PARAMETERS = "parameters"  # workers send theta - B_j, literal composition


class FailureMode(str, Enum):
    TRANSIENT = "transient"
    PERMANENT = "permanent"


class WorkerStatus(Enum):
    IDLE = "IDLE"
    RESPONDED = "RESPONDED"
    ABANDONED = "ABANDONED"
    FAILED = "FAILED"
    REMOVED = "REMOVED"


class CheckSeverity(str, Enum):
    HARD = "hard"
    SOFT = "soft"
