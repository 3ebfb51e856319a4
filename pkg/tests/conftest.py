import numpy as np
import pytest

from dirfsim.geometry import ApDescriptor, ApLayout, Vec3

DOWN = Vec3(0.0, 0.0, -1.0)


def grid_layout(rows=2, cols=3, spacing=5.0, ceiling=3.0, beamwidth=120.0, gain=9.0):
    """The default 2x3 bench layout: even ids in row 0, odd ids in row 1."""
    aps = []
    for col in range(cols):
        for row in range(rows):
            aps.append(ApDescriptor(
                id=col * rows + row,
                position=Vec3(spacing / 2 + col * spacing,
                              spacing / 2 + row * spacing, ceiling),
                boresight=DOWN, beamwidth_deg=beamwidth, boresight_gain_db=gain))
    return ApLayout(aps)


@pytest.fixture
def layout6():
    return grid_layout()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
