import numpy as np
import pytest
from scipy.stats import unitary_group

from wsma_mud.errors import ConvergenceError, DimensionError, FormatError
from wsma_mud.numerics import RandomStream
from wsma_mud.signatures import (SignatureMatrix, coherence, equiangular_spread, generate_grassmann,
                                 generate_wbe, load_sequences, save_sequences, select_sequences,
                                 tsc, welch_bound)


class TestMetrics:
    def test_identity_tsc(self):
        assert tsc(SignatureMatrix(np.eye(2))) == pytest.approx(2.0)

    def test_identical_columns(self):
        S = SignatureMatrix(np.array([[1.0, 1.0], [0.0, 0.0]]))
        assert tsc(S) == pytest.approx(4.0)
        assert coherence(S) == pytest.approx(1.0)

    def test_orthonormal_coherence(self):
        assert coherence(SignatureMatrix(np.eye(3))) == 0.0

    def test_coherence_needs_two(self):
        with pytest.raises(DimensionError):
            coherence(np.ones((2, 1)))

    @pytest.mark.parametrize("K, L, expected", [(4, 2, 8), (2, 2, 2), (8, 4, 16)])
    def test_welch_bound(self, K, L, expected):
        assert welch_bound(K, L) == expected

    def test_welch_bound_regime(self):
        with pytest.raises(ValueError):
            welch_bound(2, 4)


class TestWbe:
    def test_k4_l2_meets_bound(self):
        S = generate_wbe(4, 2, RandomStream(0), tol=1e-6)
        assert 8 - 1e-9 <= S.tsc <= 8 + 1e-6

    def test_square_is_orthonormal(self):
        S = generate_wbe(2, 2, RandomStream(1))
        assert S.tsc == pytest.approx(2.0, abs=1e-6)
        assert np.allclose(S.columns.conj().T @ S.columns, np.eye(2), atol=1e-3)

    def test_two_seeds_same_metric(self):
        a = generate_wbe(4, 2, RandomStream(1))
        b = generate_wbe(4, 2, RandomStream(2))
        assert not np.allclose(a.columns, b.columns)
        assert abs(a.tsc - b.tsc) <= 2e-6

    def test_budget_exhaustion_reports_best(self):
        with pytest.raises(ConvergenceError) as info:
            generate_wbe(4, 2, RandomStream(0), tol=1e-6, max_iter=1, restarts=1)
        assert info.value.best_value >= 8

    def test_frame_is_tight(self):
        S = generate_wbe(6, 3, RandomStream(4))
        assert np.allclose(S.columns @ S.columns.conj().T, 2 * np.eye(3), atol=1e-3)


class TestGrassmann:
    def test_k4_l2_equiangular(self, grassmann_4x2):
        assert grassmann_4x2.coherence == pytest.approx(0.577, abs=1e-3)
        assert grassmann_4x2.coherence == pytest.approx(1 / np.sqrt(3), abs=1e-3)
        assert equiangular_spread(grassmann_4x2) <= 1e-3

    def test_grassmann_set_is_also_wbe(self, grassmann_4x2):
        assert grassmann_4x2.tsc == pytest.approx(8.0, abs=1e-3)

    def test_square_is_orthonormal(self):
        assert generate_grassmann(2, 2, RandomStream(0)).coherence < 1e-12

    def test_unreachable_target_reports_best(self):
        with pytest.raises(ConvergenceError) as info:
            generate_grassmann(6, 3, RandomStream(0), restarts=1, max_iter=400)
        assert info.value.best is not None
        assert info.value.best_value < 1


class TestSelection:
    def test_first_two(self, grassmann_4x2):
        S2 = select_sequences(grassmann_4x2, 2)
        assert S2.K == 2
        assert np.array_equal(S2.columns, grassmann_4x2.columns[:, :2])
        assert S2.coherence == pytest.approx(0.577, abs=1e-3)

    def test_all(self, grassmann_4x2):
        assert np.array_equal(select_sequences(grassmann_4x2, 4).columns, grassmann_4x2.columns)

    def test_single(self, grassmann_4x2):
        S1 = select_sequences(grassmann_4x2, 1)
        assert S1.coherence == 0.0 and not S1.coherence_defined

    def test_too_many(self, grassmann_4x2):
        with pytest.raises(ValueError):
            select_sequences(grassmann_4x2, 5)


class TestInvariants:
    @pytest.mark.parametrize("gen", [generate_wbe, generate_grassmann])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_unit_norm_and_bound(self, gen, seed):
        S = gen(4, 2, RandomStream(seed))
        assert np.allclose(np.linalg.norm(S.columns, axis=0), 1, atol=1e-10)
        assert S.tsc >= welch_bound(4, 2) - 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_unitary_invariance(self, grassmann_4x2, seed):
        U = unitary_group.rvs(2, random_state=seed)
        S = grassmann_4x2
        rotated = SignatureMatrix(U @ S.columns)
        assert rotated.tsc == pytest.approx(S.tsc, abs=1e-10)
        assert rotated.coherence == pytest.approx(S.coherence, abs=1e-10)


class TestTextFormat:
    def test_bit_exact_round_trip(self, grassmann_4x2, tmp_path):
        path = tmp_path / "seq.txt"
        save_sequences(grassmann_4x2, path)
        back = load_sequences(path)
        assert np.array_equal(back.columns, grassmann_4x2.columns)
        header = path.read_text().splitlines()
        assert header[0] == "# wsma-sequences v1"
        assert header[1:3] == ["K 4", "L 2"]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("K 2\n")
        with pytest.raises(FormatError):
            load_sequences(path)

    def test_wrong_count(self, grassmann_4x2, tmp_path):
        path = tmp_path / "seq.txt"
        save_sequences(grassmann_4x2, path)
        lines = path.read_text().splitlines()
        lines[-1] = lines[-1].rsplit(" ", 1)[0]
        path.write_text("\n".join(lines))
        with pytest.raises(FormatError):
            load_sequences(path)
