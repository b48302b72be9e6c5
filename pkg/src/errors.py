"""
Exception hierarchy shared by every sign-pose module
"""

from typing import Optional, Sequence


class SignPoseError(Exception):
    """Base class for all errors raised by this package"""


class DimensionError(SignPoseError, ValueError):
    """Tensor shapes do not agree"""

    def __init__(self, message: str, *shapes: Sequence[int]):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class SequenceTooShortError(DimensionError):
    """Temporal axis shorter than a convolution window"""


class ContractError(SignPoseError, ValueError):
    """A precondition of an operation was violated"""


class VocabularyError(SignPoseError, KeyError):
    """Unknown token or token id"""

    def __init__(self, message: str, tokens: Sequence = ()):
        self.tokens = list(tokens)
        if self.tokens:
            message = f"{message}: {', '.join(str(t) for t in self.tokens)}"
        super().__init__(message)

    def __str__(self) -> str:
        # KeyError quotes its argument
        return str(self.args[0])


class CorpusParseError(SignPoseError, ValueError):
    """Malformed corpus or vocabulary file"""

    def __init__(self, message: str, line_number: Optional[int] = None, path: Optional[str] = None):
        self.line_number = line_number
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line_number is not None:
            where += f"{':' if where else 'line '}{line_number}"
        super().__init__(f"{where}: {message}" if where else message)


class EmptyCorpusError(CorpusParseError):
    """Corpus file holds no examples"""


class MissingGradientError(SignPoseError, RuntimeError):
    """Optimizer step requested for a parameter without a gradient"""

    def __init__(self, name: str):
        super().__init__(f"parameter '{name}' has no gradient; run backward() before adam_step")
        self.name = name


class CheckpointError(SignPoseError, ValueError):
    """Checkpoint file is not readable"""


class TrainingDivergedError(SignPoseError, RuntimeError):
    """A loss became NaN or infinite during training"""

    def __init__(self, epoch: int, batch: int, losses: dict):
        detail = ", ".join(f"{k}={v}" for k, v in losses.items())
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch} ({detail})")
        self.epoch = epoch
        self.batch = batch
        self.losses = dict(losses)
