"""The compiled kernels must agree bit for bit with the pure-Python twin."""
import os
import subprocess
import sys

import numpy as np
import pytest

from pdfrelay import _pykernels as py
from pdfrelay import kernels

compiled = pytest.importorskip("pdfrelay._ckernels", reason="compiled kernels not built")


def random_case(rng):
    g = rng.uniform(-2, 2, 6).tolist()
    p = rng.uniform(0, 3, 3).tolist()
    a = py.project(rng.standard_normal(13).tolist(), py.ALLOC_BLOCKS, p)
    rows = py.project(rng.standard_normal(9).tolist(), py.CUTSET_BLOCKS, p)
    return g, p, a, rows


@pytest.mark.parametrize("seed", range(5))
def test_terms_and_cuts_identical(seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        g, p, a, rows = random_case(rng)
        for mode in (0, 1):
            assert compiled.corollary_terms(g, a, p, mode) == py.corollary_terms(g, a, p, mode)
            assert compiled.corollary_rate(g, a, p, mode) == py.corollary_rate(g, a, p, mode)
        assert compiled.cutset_cuts(g, rows) == py.cutset_cuts(g, rows)
        assert compiled.cutset_value(g, rows) == py.cutset_value(g, rows)


def test_project_identical_and_zero_block():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(13).tolist()
    p = [1.0, 2.0, 0.5]
    assert compiled.project(x, py.ALLOC_BLOCKS, p) == py.project(x, py.ALLOC_BLOCKS, p)
    x = [0.0] * 13
    assert compiled.project(x, py.ALLOC_BLOCKS, p) is None and py.project(x, py.ALLOC_BLOCKS, p) is None


@pytest.mark.parametrize("kind", [py.OBJ_COROLLARY, py.OBJ_CUTSET])
def test_pattern_search_identical(kind):
    rng = np.random.default_rng(kind + 3)
    for _ in range(5):
        g, p, a, rows = random_case(rng)
        x0, blocks = (a, py.ALLOC_BLOCKS) if kind == py.OBJ_COROLLARY else (rows, py.CUTSET_BLOCKS)
        mask = [1] * len(x0)
        args = (kind, g, x0, blocks, p, mask, 0.25, 0.5, 1e-5, 20000, 0)
        assert compiled.pattern_search(*args) == py.pattern_search(*args)


def test_backend_selection():
    expected = "python" if os.environ.get("PDFRELAY_PURE_PYTHON") else "compiled"
    assert kernels.BACKEND == expected
    assert set(kernels.available_backends()) == {"compiled", "python"}
    env = dict(os.environ, PDFRELAY_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from pdfrelay import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
