"""Exception types shared across the package."""


class ImitalError(Exception):
    """Base class for all package-specific errors."""


class TimeoutRetryExhausted(ImitalError):
    """Dataset generation kept timing out after the allowed retries."""


class InfeasibleSplit(ImitalError):
    """A stratified split is impossible (some class has fewer than 2 samples)."""


class EmptyTrainingSet(ImitalError):
    pass


class EmptyDataset(ImitalError):
    pass


class DimensionMismatch(ImitalError):
    pass


class EmptyPool(ImitalError):
    pass


class MissingClass(ImitalError):
    pass


class EmptyLabeledSet(ImitalError):
    pass


class EmptyUnlabeledSet(ImitalError):
    pass


class EmptyCorpus(ImitalError):
    pass


class InconsistentK(ImitalError):
    pass


class EmptyCurve(ImitalError):
    pass


class LengthMismatch(ImitalError):
    pass


class MissingModel(ImitalError):
    pass


class SinkWriteFailure(ImitalError):
    pass


class IoError(ImitalError):
    pass
