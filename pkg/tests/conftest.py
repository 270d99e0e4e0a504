from functools import lru_cache

import numpy as np
import pytest

from vemasp.mesh import cut_with_line, generate_diamond, generate_triangle_grid

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


@lru_cache(maxsize=None)
def diamond(N: int):
    return generate_diamond(N)


@lru_cache(maxsize=None)
def cut_mesh(eps, N: int = 16):
    grid = generate_triangle_grid(N)
    return grid if eps is None else cut_with_line(grid, 0.5 + eps)


def _scaled(poly, h=1.0, shift=(0.0, 0.0)):
    return np.asarray(poly, dtype=float) * h + np.asarray(shift)


# every cell shape that occurs in the experiment meshes, plus a few classics
TEMPLATE_CELLS = {
    "pentagon": _scaled([(0, 0), (4, 0), (6, 3), (3, 6), (0, 4)], 1 / 12),
    "side-triangle": _scaled([(4, 0), (8, 0), (6, 3)], 1 / 12),
    "diamond": _scaled([(6, 3), (9, 6), (6, 9), (3, 6)], 1 / 12),
    "right-triangle": _scaled([(0, 0), (1, 0), (1, 1)], 1 / 16),
    "sliver-trapezoid": np.array([[0.25, 0.5], [0.5, 0.5], [0.5, 0.5001], [0.2501, 0.5001]]),
    "tiny-triangle": np.array([[0.75, 0.5], [0.75000001, 0.50000001], [0.75, 0.50000001]]),
    "unit-square": _scaled([(0, 0), (1, 0), (1, 1), (0, 1)]),
    "hexagon": np.column_stack([np.cos(np.arange(6) * np.pi / 3),
                                np.sin(np.arange(6) * np.pi / 3)]),
}


@pytest.fixture(params=sorted(TEMPLATE_CELLS))
def template_cell(request):
    return request.param, TEMPLATE_CELLS[request.param]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
