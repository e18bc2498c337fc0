"""Exception hierarchy for the spatial product system laboratory"""


class LabError(Exception):
    """Base class for every error raised by spatial_lab"""


class DimensionError(LabError):
    """Vectors or maps do not belong to the expected module"""


class AlgebraMismatchError(LabError):
    """Objects over different algebras were combined"""


class SymmetryError(LabError):
    """An element or kernel violates hermitian symmetry"""


class HermiticityError(LabError):
    """A superoperator does not preserve adjoints"""


class NotCPDError(LabError):
    """A kernel failed the complete positive definiteness test"""


class ReferenceNotCentralError(LabError):
    """The chosen reference label does not behave as a central unit row"""


class NotCEGeneratorError(LabError):
    """The CPD part of a generator is not completely positive definite"""


class WeightSumError(LabError):
    """Weights of a mean of units do not sum to one"""


class BilinearityError(LabError):
    """A module map fails to intertwine the left actions"""


class TupleError(LabError):
    """A time tuple is empty, unordered or out of range"""


class PreconditionError(LabError):
    """A documented precondition of an operation is not met"""


class DescriptorError(LabError):
    """A descriptor or config file could not be parsed"""

    def __init__(self, message: str, path: str = "", line: int | None = None, field: str = ""):
        self.path = path
        self.line = line
        self.field = field
        location = path
        if line is not None:
            location += f":{line}"
        if field:
            location += f" [{field}]"
        super().__init__(f"{location}: {message}" if location else message)
