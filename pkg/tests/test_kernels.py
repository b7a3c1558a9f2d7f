import os
import random
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from singulock import _kernels
from singulock._kernels import reduce_columns_py

needs_ext = pytest.mark.skipif(_kernels.reduce_columns_ext is None, reason="compiled kernel not built")


def random_columns(rng, n, density=0.2):
    return [sorted(i for i in range(j) if rng.random() < density) for j in range(n)]


def columns_strategy(max_n=30):
    return st.integers(0, max_n).flatmap(
        lambda n: st.tuples(*[st.sets(st.integers(0, j - 1)) if j else st.just(set()) for j in range(n)]).map(
            lambda cols: [sorted(c) for c in cols]
        )
    )


def reduced_is_valid(columns, lows, reps):
    """Pivots are distinct and every recorded zero combination really sums to zero."""
    pivots = [l for l in lows if l >= 0]
    assert len(pivots) == len(set(pivots))
    for j, rep in reps.items():
        assert lows[j] == -1
        assert j in rep
        acc = set()
        for k in rep:
            acc ^= set(columns[k])
        assert acc == set()


class TestPython:
    def test_empty(self):
        assert reduce_columns_py([]) == ([], {})

    def test_triangle_boundary(self):
        # rows 0,1,2 vertices; 3,4,5 edges; 6 the triangle
        cols = [[], [], [], [0, 1], [1, 2], [0, 2], [3, 4, 5]]
        lows, reps = reduce_columns_py(cols)
        assert lows == [-1, -1, -1, 1, 2, -1, 5]
        assert sorted(reps[5]) == [3, 4, 5]
        reduced_is_valid(cols, lows, reps)

    @given(columns_strategy())
    def test_valid_reduction(self, cols):
        lows, reps = reduce_columns_py(cols)
        reduced_is_valid(cols, lows, reps)
        # rank of the matrix equals the number of pivots
        assert sum(l >= 0 for l in lows) + len(reps) == len(cols)


@needs_ext
class TestCompiled:
    def test_backend_selected(self):
        if not os.environ.get("SINGULOCK_PURE"):
            assert _kernels.BACKEND == "cython"

    @pytest.mark.parametrize("seed", range(20))
    def test_agrees_with_python(self, seed):
        rng = random.Random(seed)
        cols = random_columns(rng, rng.randint(1, 300), rng.choice([0.01, 0.05, 0.2]))
        lows_c, reps_c = _kernels.reduce_columns_ext(cols)
        lows_p, reps_p = reduce_columns_py(cols)
        assert list(lows_c) == lows_p
        assert {j: sorted(r) for j, r in reps_c.items()} == {j: sorted(r) for j, r in reps_p.items()}

    @given(columns_strategy(40))
    def test_agrees_on_generated_columns(self, cols):
        lows_c, reps_c = _kernels.reduce_columns_ext(cols)
        lows_p, reps_p = reduce_columns_py(cols)
        assert list(lows_c) == lows_p
        assert set(reps_c) == set(reps_p)

    def test_wide_rows(self):
        # row indices beyond 64 exercise multi-word bitsets
        cols = [[] for _ in range(200)] + [[3, 70, 150], [70, 199], [3, 150, 199]]
        lows_c, reps_c = _kernels.reduce_columns_ext(cols)
        assert list(lows_c) == reduce_columns_py(cols)[0]
        assert sorted(reps_c[202]) == [200, 201, 202]


class TestSelection:
    def test_pure_env_forces_python(self):
        code = "from singulock import _kernels; print(_kernels.BACKEND)"
        env = dict(os.environ, SINGULOCK_PURE="1")
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "python"

    def test_backend_name(self):
        assert _kernels.BACKEND in {"cython", "python"}
        expected = _kernels.reduce_columns_py if _kernels.BACKEND == "python" else _kernels.reduce_columns_ext
        assert _kernels.reduce_columns is expected
