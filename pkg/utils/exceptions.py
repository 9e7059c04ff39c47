"""Custom exceptions for the MH-QMO toolkit"""

class MhqmoException(Exception):
    """Base exception for the MH-QMO toolkit"""
    pass

class NotHermitianException(MhqmoException):
    """Matrix fails the Hermiticity check"""
    pass

class DimNotPowerOfTwoException(MhqmoException):
    """Operator dimension is not a power of two (no qubit embedding)"""
    pass

class NonCommutingGroupException(MhqmoException):
    """Observables placed in one group do not commute"""
    pass

class DimMismatchException(MhqmoException):
    """Operands live in spaces of different dimension"""
    pass

class EmptyKeepSetException(MhqmoException):
    """Marginalization asked to keep no observable"""
    pass

class NonIntegerSpectrumException(MhqmoException):
    """Characteristic function needs integer eigenvalue labels"""
    pass

class UnsupportedSpectrumException(MhqmoException):
    """DFT inversion only supports labels in {-1, 0, +1}"""
    pass

class BlockLeakageException(MhqmoException):
    """Conjugated element is not block diagonal in the coupled basis"""
    pass

class UnknownLabelException(MhqmoException):
    """No closed form registered for the requested element label"""
    pass

class NotPositiveAtZeroException(MhqmoException):
    """Family is already non-positive at eta = 0"""
    pass

class SignStructureException(MhqmoException):
    """Minimum-eigenvalue curve changes sign more than once"""
    pass

class ValidationException(MhqmoException):
    """Data validation exceptions"""
    pass

class InputFileException(MhqmoException):
    """Input file could not be read or parsed"""
    pass

class VerificationException(MhqmoException):
    """A self-check of the verification suite did not hold"""
    pass
