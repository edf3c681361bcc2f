from typing import Dict, List, Optional


class R13Exception(Exception):
    """Catch-all for exceptions that could occur related to known program phenomena"""
    pass


class MeshException(R13Exception):
    """Raised for invalid geometry arguments, unreadable mesh files, or meshes that violate the quality bound"""
    pass


class DegenerateElementException(R13Exception):
    """Raised when a triangle has a non-positive signed area"""
    pass


class QuadratureException(R13Exception):
    """Raised when a quadrature rule of unsupported exactness is requested"""
    pass


class AssemblyException(R13Exception):
    """Raised for unlabeled boundary edges, missing wall data, or systems beyond the configured DoF cap"""
    pass


class DimensionCapException(R13Exception):
    """Raised by dense linear algebra routines that refuse problems above their size cap"""
    pass


class PointLocationException(R13Exception):
    """Raised when points fall outside the mesh beyond the snap tolerance"""
    pass


class SingularSystemException(R13Exception):
    """
    Raised when the direct factorization of a block system fails or produces a numerically singular factor.
    The pivot report carries the smallest and largest pivot magnitudes, their ratio and the residual, when known.
    """
    def __init__(self, message: str, pivot_report: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.pivot_report: Dict[str, float] = pivot_report or {}


class ConfigException(R13Exception):
    """Raised when a case configuration cannot be parsed or fails its checks"""
    def __init__(self, message: str, messages: Optional[List[str]] = None):
        super().__init__(message)
        self.messages: List[str] = messages or []
