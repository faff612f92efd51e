"""
Exception types raised by the sampler library
"""

from typing import List, Optional


class SamplerError(Exception):
    """Base class for every error raised by this package"""


class ContractViolationError(SamplerError, ValueError):
    """Inputs do not satisfy a shape or dimension contract"""


class ConfigurationError(SamplerError, ValueError):
    """Invalid sampler, schedule or run configuration"""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems: List[str] = list(problems)
        super().__init__("; ".join(self.problems))


class ChainDivergenceError(SamplerError):
    """A chain produced a non-finite or runaway coordinate"""

    def __init__(self, step: int, message: str, coordinate: Optional[int] = None):
        self.step = step
        self.coordinate = coordinate
        where = f" (coordinate {coordinate})" if coordinate is not None else ""
        super().__init__(f"Chain diverged at step {step}{where}: {message}")


class DataFormatError(SamplerError, ValueError):
    """Malformed dataset file"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class NumericalError(SamplerError):
    """Degenerate linear algebra or probabilities that underflow"""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        super().__init__(message)


class DatumUnderflowError(NumericalError):
    """The likelihood of one datum underflows under every mixture component"""

    def __init__(self, index: int):
        super().__init__(f"Responsibilities underflow for datum {index}", index=index)
