from typing import Sequence, Tuple

import numpy as np


class FormatError(ValueError):
    """Raised when a binary file does not match its declared layout"""


class UsageError(ValueError):
    """Raised when command arguments are missing or contradict each other"""


class ArrayValidator:
    """Validates array shapes, ranges and index arguments"""

    @staticmethod
    def require_finite(values: np.ndarray, name: str = "input") -> None:
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{name} contains non-finite values")

    @staticmethod
    def require_range(values: np.ndarray, low: float, high: float, name: str = "input") -> None:
        ArrayValidator.require_finite(values, name)
        if values.size and (values.min() < low or values.max() > high):
            raise ValueError(f"{name} must lie in [{low}, {high}]")

    @staticmethod
    def require_same_shape(a: np.ndarray, b: np.ndarray, what: str = "dimension mismatch") -> None:
        if a.shape != b.shape:
            raise ValueError(f"{what}: {a.shape} vs {b.shape}")

    @staticmethod
    def require_positive_size(width: int, height: int) -> None:
        if int(width) < 1 or int(height) < 1:
            raise ValueError(f"width and height must be >= 1 (got {width}x{height})")

    @staticmethod
    def require_index(index: int, low: int, high: int, name: str = "index") -> None:
        """Inclusive 1-based range check"""
        if not low <= int(index) <= high:
            raise ValueError(f"{name} {index} out of range [{low}, {high}]")

    @staticmethod
    def require_permutation(perm: Sequence[int], n: int) -> Tuple[int, ...]:
        """Validate a 1-based bijection on 1..n"""
        values = tuple(int(p) for p in perm)
        if len(values) != n or sorted(values) != list(range(1, n + 1)):
            raise ValueError(f"invalid permutation {list(values)} for {n} patterns")
        return values

    @staticmethod
    def require_magic(header: bytes, magic: bytes) -> None:
        if header != magic:
            raise FormatError(f"bad magic {header!r}, expected {magic!r}")
