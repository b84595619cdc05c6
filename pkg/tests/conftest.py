import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

DATA = os.path.join(os.path.dirname(__file__), "data")


def box_surface(dims, spacing=0.002, center=(0.0, 0.0, 0.0), bottom=False):
    """Regular samples on the faces of an axis-aligned box resting on z = 0.

    ``center`` is the centre of the bottom face."""
    lx, ly, lz = dims
    cx, cy, cz = center
    xs = np.linspace(-lx / 2, lx / 2, int(round(lx / spacing)) + 1)
    ys = np.linspace(-ly / 2, ly / 2, int(round(ly / spacing)) + 1)
    zs = np.linspace(0.0, lz, int(round(lz / spacing)) + 1)
    faces = []
    gx, gy = np.meshgrid(xs, ys)
    faces.append(np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, lz)]))
    if bottom:
        faces.append(np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)]))
    for sx in (-lx / 2, lx / 2):
        g1, g2 = np.meshgrid(ys, zs)
        faces.append(np.column_stack([np.full(g1.size, sx), g1.ravel(), g2.ravel()]))
    for sy in (-ly / 2, ly / 2):
        g1, g2 = np.meshgrid(xs, zs)
        faces.append(np.column_stack([g1.ravel(), np.full(g1.size, sy), g2.ravel()]))
    pts = np.unique(np.round(np.vstack(faces), 12), axis=0)
    return pts + np.array([cx, cy, cz])


def plane_grid(size=0.6, spacing=0.01, z=0.0):
    xs = np.arange(-size / 2, size / 2 + 1e-9, spacing)
    gx, gy = np.meshgrid(xs, xs)
    return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
