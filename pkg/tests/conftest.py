"""Shared fixtures: reference circuits and the published loss-parameter
table used across the test suite."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kinres import CircuitSpec, PowerLossSpec

# Published loss-parameter table: (f0 [GHz], beta [1e-6], gamma [1e-3],
# delta_0 [1e-5]) for 31 devices across two film sheet inductances and
# two resonator geometries.
LOSS_TABLE = [
    # 100 pH/sq, distributed
    (4.375, 4.656, 79.502, 1.622),
    (4.881, 3.966, 167.804, 1.521),
    (5.108, 3.482, 335.690, 1.466),
    (5.428, 4.686, 190.073, 1.720),
    (6.086, 3.858, 289.612, 1.428),
    (7.093, 3.559, 424.432, 1.405),
    (7.616, 3.225, 238.005, 1.273),
    (7.701, 3.059, 728.460, 1.262),
    # 100 pH/sq, lumped
    (7.300, 5.641, 47.725, 1.638),
    (7.396, 3.398, 77.397, 1.432),
    (7.633, 4.130, 53.224, 1.467),
    (7.695, 3.817, 38.484, 1.204),
    (7.913, 4.433, 43.428, 1.394),
    (8.028, 3.400, 58.591, 1.277),
    (8.242, 3.268, 78.759, 2.816),
    # 300 pH/sq, distributed
    (3.771, 45.353, 16.170, 12.983),
    (4.139, 39.185, 19.458, 12.090),
    (4.580, 34.405, 11.018, 10.960),
    (5.041, 27.230, 10.320, 10.122),
    (5.841, 25.930, 5.003, 11.629),
    (6.527, 16.345, 6.709, 8.688),
    (7.414, 9.541, 19.156, 8.416),
    (7.625, 13.793, 4.068, 9.117),
    (8.123, 22.841, 0.224, 7.851),
    # 300 pH/sq, lumped
    (6.398, 28.887, 133.440, 9.331),
    (6.532, 26.100, 48.252, 9.030),
    (6.670, 24.779, 45.101, 8.696),
    (6.781, 23.994, 104.948, 8.441),
    (6.954, 21.434, 37.558, 8.246),
    (7.111, 16.420, 51.912, 7.869),
    (7.178, 16.903, 22.186, 8.102),
]


def loss_specs():
    """PowerLossSpec for every table row (units unpacked)."""
    return [
        (f0, PowerLossSpec(q0=1.0 / (d0 * 1e-5), beta=b * 1e-6, gamma=g * 1e-3))
        for f0, b, g, d0 in LOSS_TABLE
    ]


@pytest.fixture
def light_circuit():
    """Reference fluxonium A: E_C=0.88, E_J=2.65, E_L=0.72 GHz."""
    return CircuitSpec(0.88, 2.65, 0.72)


@pytest.fixture
def heavy_circuit():
    """Reference fluxonium B: E_C=0.96, E_J=3.95, E_L=0.74 GHz."""
    return CircuitSpec(0.96, 3.95, 0.74)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
