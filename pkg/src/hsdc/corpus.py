"""Small worked families with known SDC status, named by content."""

from __future__ import annotations

import numpy as np

from .core import MatrixFamily

_SHARED_SECOND = [[0, 0, 0], [0, -3, 2], [0, 2, -1]]
_SHARED_THIRD = [[-1, -3, 2], [-3, -5, 4], [2, 4, -3]]

_FAMILIES = {
    # C1^-1 C2 has eigenvalues (1 +- i sqrt3)/2
    "complex_spectrum_pair": ([[0, 1], [1, 1]], [[1, 1], [1, 0]]),
    "integer_triple_sdc": ([[1, 3, -2], [3, 16, -10], [-2, -10, 6]], _SHARED_SECOND, _SHARED_THIRD),
    "integer_triple_noncommuting": ([[1, 3, -1], [3, 6, 0], [-1, 0, -2]], _SHARED_SECOND, _SHARED_THIRD),
    "integer_triple_with_kernel": (
        [[-1, -4, 4], [-4, -16, 16], [4, 16, -16]],
        [[0, 0, 0], [0, -1, 2], [0, 2, -4]],
        [[-1, -3, 2], [-3, -9, 6], [2, 6, -4]],
    ),
    "noncommuting_sdc_triple": (
        [[-1, -2, 0], [-2, -28, 0], [0, 0, 5]],
        [[1, 2, 0], [2, 20, 0], [0, 0, -3]],
        [[2, 4, 0], [4, 1, 0], [0, 0, 7]],
    ),
}

EXPECTED_SDC = {
    "complex_spectrum_pair": False,
    "integer_triple_sdc": True,
    "integer_triple_noncommuting": False,
    "integer_triple_with_kernel": False,
    "noncommuting_sdc_triple": True,
}

# congruence making every member of noncommuting_sdc_triple diagonal
NONCOMMUTING_SDC_TRANSFORM = np.array([[1.0, 0, -2], [0, 0, 1], [0, 1, 0]])


def names() -> list[str]:
    return list(_FAMILIES)


def family(name: str) -> MatrixFamily:
    return MatrixFamily.from_matrices([np.array(c, dtype=float) for c in _FAMILIES[name]])


def raw(name: str) -> list[list[list[int]]]:
    return [list(map(list, c)) for c in _FAMILIES[name]]
