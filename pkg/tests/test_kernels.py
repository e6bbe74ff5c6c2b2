"""Pairwise-dot kernels: backend selection, equivalence, exact invariance."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genmine import kernels
from genmine.kernels import (BACKENDS, active_backend, mean_pairwise_cosine,
                             pair_dots)

AVAILABLE = [b for b in BACKENDS if b == "numpy" or kernels.HAS_NUMBA]


def unit(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return rows / np.linalg.norm(rows, axis=1)[:, None]


class TestBackendSelection:
    def test_active_backend_is_known(self):
        assert active_backend() in BACKENDS

    def test_env_forces_numpy(self, monkeypatch):
        monkeypatch.setenv("GENMINE_KERNELS", "numpy")
        assert kernels._resolve_backend(None) == "numpy"

    def test_explicit_argument_beats_env(self, monkeypatch):
        monkeypatch.setenv("GENMINE_KERNELS", "numpy")
        if kernels.HAS_NUMBA:
            assert kernels._resolve_backend("numba") == "numba"

    def test_unknown_backend_rejected(self, monkeypatch):
        monkeypatch.setenv("GENMINE_KERNELS", "warp-drive")
        with pytest.raises(ValueError):
            kernels._resolve_backend(None)

    def test_numba_request_without_numba_fails(self, monkeypatch):
        monkeypatch.setattr(kernels, "HAS_NUMBA", False)
        with pytest.raises(RuntimeError):
            kernels._resolve_backend("numba")

    def test_auto_without_numba_falls_back(self, monkeypatch):
        monkeypatch.setattr(kernels, "HAS_NUMBA", False)
        monkeypatch.delenv("GENMINE_KERNELS", raising=False)
        assert kernels._resolve_backend(None) == "numpy"


class TestPairDots:
    def test_input_validation(self):
        with pytest.raises(ValueError):
            pair_dots(np.ones(3))
        with pytest.raises(ValueError):
            pair_dots(np.ones((1, 3)))

    @pytest.mark.parametrize("backend", AVAILABLE)
    def test_matches_brute_force(self, backend):
        rng = np.random.default_rng(7)
        rows = rng.normal(size=(13, 5))
        got = pair_dots(rows, backend=backend)
        expected = [float(np.dot(rows[i], rows[j]))
                    for i in range(13) for j in range(i + 1, 13)]
        assert got.shape == (13 * 12 // 2,)
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)

    def test_backends_agree(self):
        if not kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        rng = np.random.default_rng(11)
        rows = rng.normal(size=(40, 16))
        np.testing.assert_allclose(pair_dots(rows, backend="numba"),
                                   pair_dots(rows, backend="numpy"),
                                   rtol=0, atol=1e-12)


class TestMeanPairwiseCosine:
    @pytest.mark.parametrize("backend", AVAILABLE)
    def test_identical_vectors(self, backend):
        rows = unit(np.tile([3.0, 4.0, 0.0], (5, 1)))
        assert mean_pairwise_cosine(rows, backend=backend) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("backend", AVAILABLE)
    def test_orthonormal_pair(self, backend):
        rows = np.eye(2)
        assert mean_pairwise_cosine(rows, backend=backend) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("backend", AVAILABLE)
    def test_three_vector_case(self, backend):
        rows = unit([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        got = mean_pairwise_cosine(rows, backend=backend)
        # pairs: cos(e1,e2)=0, cos(e1,d)=cos(e2,d)=1/sqrt(2); mean = sqrt(2)/3
        assert got == pytest.approx(math.sqrt(2) / 3, abs=1e-12)

    @pytest.mark.parametrize("backend", AVAILABLE)
    def test_matches_fsum_oracle(self, backend):
        rng = np.random.default_rng(3)
        rows = unit(rng.normal(size=(17, 8)))
        pairs = [float(np.dot(rows[i], rows[j]))
                 for i in range(17) for j in range(i + 1, 17)]
        oracle = math.fsum(pairs) / len(pairs)
        assert mean_pairwise_cosine(rows, backend=backend) == \
            pytest.approx(oracle, abs=1e-12)


@st.composite
def rows_and_permutation(draw):
    n = draw(st.integers(min_value=2, max_value=12))
    d = draw(st.integers(min_value=1, max_value=6))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, d))
    norms = np.linalg.norm(rows, axis=1)
    rows[norms == 0.0] = 1.0
    perm = draw(st.permutations(list(range(n))))
    return unit(rows), np.array(perm)


class TestPermutationInvariance:
    @settings(max_examples=60, deadline=None)
    @given(rows_and_permutation())
    def test_exact_on_every_backend(self, case):
        rows, perm = case
        for backend in AVAILABLE:
            a = mean_pairwise_cosine(rows, backend=backend)
            b = mean_pairwise_cosine(rows[perm], backend=backend)
            assert a == b  # bitwise, not approximate
