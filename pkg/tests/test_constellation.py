import numpy as np
import pytest

from wsma_mud.constellation import build_qam, enumerate_symbol_grid, slice_to_nearest


class TestQam:
    def test_qpsk_symbols(self):
        q = build_qam(4)
        assert np.allclose(q.symbols, [1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
        assert q.energy == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("M", [4, 16, 64])
    def test_energy_is_log2_m(self, M):
        q = build_qam(M)
        assert q.energy == pytest.approx(np.log2(M), abs=1e-12)
        assert len(set(np.round(q.symbols, 12))) == M

    def test_qpsk_min_distance(self):
        assert build_qam(4).min_distance >= 2 - 1e-12

    def test_unsupported(self):
        with pytest.raises(ValueError):
            build_qam(8)


class TestGrid:
    def test_k2_ordering_follows_table(self):
        q = build_qam(4)
        g = enumerate_symbol_grid(2, q)
        s = q.symbols
        assert len(g) == 16
        assert np.array_equal(g.entries[0], [s[0], s[0]])
        assert np.array_equal(g.entries[1], [s[0], s[1]])
        assert np.array_equal(g.entries[12], [s[3], s[0]])
        assert np.array_equal(g.entries[15], [s[3], s[3]])

    def test_k1_is_alphabet(self):
        q = build_qam(4)
        assert np.array_equal(enumerate_symbol_grid(1, q).entries[:, 0], q.symbols)

    def test_k0_rejected(self):
        with pytest.raises(ValueError):
            enumerate_symbol_grid(0, build_qam(4))

    @pytest.mark.parametrize("K", [1, 2, 3, 4])
    def test_round_trip_by_value(self, K):
        g = enumerate_symbol_grid(K, build_qam(4))
        for n in range(len(g)):
            assert g.locate(g.entries[n]) == n
            assert g.joint_index(g.indices[n]) == n


class TestSlicing:
    def test_exact_symbol(self):
        q = build_qam(4)
        assert slice_to_nearest(q.symbols[2], q) == 2

    def test_origin_tie(self):
        assert slice_to_nearest(0.0, build_qam(4)) == 0

    def test_nearest_by_inspection(self):
        assert slice_to_nearest(0.9 + 1.2j, build_qam(4)) == 0

    @pytest.mark.parametrize("M", [4, 16])
    def test_perturbation_within_half_distance(self, M, rng):
        q = build_qam(M)
        r = 0.499 * q.min_distance * np.sqrt(rng.uniform(size=(M, 50)))
        eps = r * np.exp(2j * np.pi * rng.uniform(size=(M, 50)))
        got = slice_to_nearest(q.symbols[:, None] + eps, q)
        assert np.array_equal(got, np.repeat(np.arange(M)[:, None], 50, axis=1))
