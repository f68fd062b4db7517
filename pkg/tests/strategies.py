"""Shared hypothesis strategies."""

from __future__ import annotations

import numpy as np
from hypothesis import assume
from hypothesis import strategies as st

from chainlogic.hardy import HardyAmplitudes

component = st.floats(min_value=-1.0, max_value=1.0,
                      allow_nan=False, allow_infinity=False)


@st.composite
def strict_triples(draw, floor: float = 0.05) -> HardyAmplitudes:
    """Normalized complex amplitude triples with every magnitude above
    ``floor``, so conditional probabilities stay well scaled."""
    parts = [draw(component) for _ in range(6)]
    raw = np.array([complex(parts[0], parts[1]),
                    complex(parts[2], parts[3]),
                    complex(parts[4], parts[5])])
    norm = np.linalg.norm(raw)
    assume(norm > 1e-3)
    raw = raw / norm
    assume(min(abs(x) for x in raw) > floor)
    return HardyAmplitudes(*raw)


@st.composite
def unit_vectors(draw, dim: int = 2) -> np.ndarray:
    parts = [draw(component) for _ in range(2 * dim)]
    raw = np.array([complex(parts[2 * i], parts[2 * i + 1])
                    for i in range(dim)])
    norm = np.linalg.norm(raw)
    assume(norm > 1e-2)
    return raw / norm
