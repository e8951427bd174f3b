import numpy as np
import pytest

from flowids.errors import NumericError
from flowids.ingest import DatasetTable
from flowids.linalg import (
    ORACLE_MAX_DIM,
    RsvdConfig,
    dump_factors,
    matmul,
    orthonormal_basis,
    project,
    randomized_svd,
    svd_oracle,
)


def random_rank_k(seed, m=50, n=30, rank=8, smin=1.0, smax=10.0):
    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.standard_normal((m, rank)))
    v, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    s = np.sort(rng.uniform(smin, smax, rank))[::-1]
    return (u * s) @ v.T


class TestMatmul:
    def test_identity(self):
        a = np.random.default_rng(0).standard_normal((4, 4))
        assert np.array_equal(matmul(a, np.eye(4)), a)

    def test_hand_product(self):
        out = matmul([[1.0, 2.0], [3.0, 4.0]], [[5.0], [6.0]])
        assert out.tolist() == [[17.0], [39.0]]

    def test_transpose_identity(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((3, 5))
        b = rng.standard_normal((5, 2))
        assert np.allclose(matmul(a, b).T, matmul(b.T, a.T), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            matmul(np.array([[np.inf, 1.0]]), np.ones((2, 1)))


class TestOrthonormalBasis:
    def test_orthonormal_input_keeps_span(self):
        rng = np.random.default_rng(2)
        q0, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        q = orthonormal_basis(q0)
        assert q.shape == (8, 3)
        assert np.max(np.abs(q.T @ q - np.eye(3))) < 1e-12
        residual = q0 - q @ (q.T @ q0)
        assert np.linalg.norm(residual) < 1e-10

    def test_rank_one_collapse(self):
        y = np.array([[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]])
        q = orthonormal_basis(y)
        assert q.shape == (3, 1)
        assert abs(abs(q[0, 0]) - 1.0) < 1e-14
        assert np.all(q[1:, 0] == 0.0)

    def test_random_20x5_properties(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal((20, 5))
        q = orthonormal_basis(y)
        assert np.max(np.abs(q.T @ q - np.eye(q.shape[1]))) < 1e-10
        assert np.linalg.norm(y - q @ (q.T @ y)) < 1e-8

    def test_zero_matrix(self):
        with pytest.raises(ValueError, match="rank zero"):
            orthonormal_basis(np.zeros((4, 2)))


class TestSvdOracle:
    def test_identity_singular_values(self):
        f = svd_oracle(np.eye(3))
        assert np.allclose(f.s, [1.0, 1.0, 1.0], atol=1e-14)

    def test_diagonal(self):
        f = svd_oracle(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(f.s, [3.0, 2.0, 1.0], atol=1e-12)

    def test_rank_deficient_column(self):
        # eigenvalues of A^T A are 25 and 0
        f = svd_oracle(np.array([[3.0, 0.0], [4.0, 0.0]]))
        assert np.allclose(f.s, [5.0, 0.0], atol=1e-12)
        assert np.max(np.abs(f.u.T @ f.u - np.eye(2))) < 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_random_reconstruction_and_orthonormality(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((10, 6))
        f = svd_oracle(a)
        assert np.max(np.abs(a - f.reconstruct())) < 1e-8 * np.max(np.abs(a))
        assert np.max(np.abs(f.u.T @ f.u - np.eye(6))) < 1e-10
        assert np.max(np.abs(f.v.T @ f.v - np.eye(6))) < 1e-10
        assert np.all(np.diff(f.s) <= 1e-15)
        eig = np.sort(np.linalg.eigvalsh(a.T @ a))[::-1]
        assert np.allclose(f.s, np.sqrt(np.maximum(eig, 0.0)), atol=1e-8)

    def test_wide_matrix_via_transpose(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((4, 9))
        f = svd_oracle(a)
        assert f.u.shape == (4, 4)
        assert f.v.shape == (9, 4)
        assert np.max(np.abs(a - f.reconstruct())) < 1e-10

    def test_size_cap(self):
        big = np.ones((ORACLE_MAX_DIM + 1, ORACLE_MAX_DIM + 1))
        with pytest.raises(ValueError, match="caps"):
            svd_oracle(big)


class TestRandomizedSvd:
    def test_padded_diagonal(self):
        a = np.zeros((8, 5))
        np.fill_diagonal(a, [5.0, 4.0, 3.0, 2.0, 1.0])
        f = randomized_svd(a, RsvdConfig(k=3, p=2, q=1, seed=7))
        oracle = svd_oracle(a)
        assert np.max(np.abs(f.s - oracle.s[:3])) < 1e-6

    def test_exact_rank_k_reconstruction(self):
        a = random_rank_k(seed=5)
        f = randomized_svd(a, RsvdConfig(k=8, p=10, q=2, seed=0))
        assert np.linalg.norm(a - f.reconstruct()) < 1e-6

    def test_deterministic(self):
        a = np.random.default_rng(4).standard_normal((20, 12))
        cfg = RsvdConfig(k=5, p=4, q=2, seed=123)
        f1 = randomized_svd(a, cfg)
        f2 = randomized_svd(a, cfg)
        assert np.array_equal(f1.u, f2.u)
        assert np.array_equal(f1.s, f2.s)
        assert np.array_equal(f1.v, f2.v)

    def test_rank_plus_oversampling_too_large(self):
        a = np.ones((6, 4))
        with pytest.raises(ValueError, match="exceeds"):
            randomized_svd(a, RsvdConfig(k=3, p=2, q=0, seed=0))

    def test_power_iterations_do_not_hurt(self):
        # more power rounds never increase the reconstruction error materially
        for seed in range(20):
            a = np.random.default_rng(seed).standard_normal((30, 20))
            errs = []
            for q in (0, 1, 2):
                f = randomized_svd(a, RsvdConfig(k=6, p=6, q=q, seed=77))
                errs.append(np.linalg.norm(a - f.reconstruct()))
            assert errs[1] <= errs[0] + 1e-9
            assert errs[2] <= errs[1] + 1e-9

    def test_near_optimal_on_full_rank(self):
        for seed in (0, 1, 2):
            a = np.random.default_rng(seed).standard_normal((50, 30))
            f = randomized_svd(a, RsvdConfig(k=8, p=10, q=2, seed=seed))
            oracle = svd_oracle(a)
            optimal = np.sqrt(np.sum(oracle.s[8:] ** 2))
            achieved = np.linalg.norm(a - f.reconstruct())
            assert achieved <= 1.05 * optimal

    def test_rank_deficient_input_pads_with_zeros(self):
        a = random_rank_k(seed=8, m=12, n=10, rank=3)
        f = randomized_svd(a, RsvdConfig(k=5, p=2, q=1, seed=3))
        assert f.s.shape == (5,)
        assert np.all(f.s[3:] < 1e-10)
        assert np.max(np.abs(f.u.T @ f.u - np.eye(5))) < 1e-8
        assert np.max(np.abs(f.v.T @ f.v - np.eye(5))) < 1e-8


class TestProject:
    def table(self, feats):
        return DatasetTable(
            features=feats,
            feature_names=tuple(f"c{i}" for i in range(feats.shape[1])),
            labels=np.arange(feats.shape[0]) % 2,
        )

    def test_identity_projection(self):
        from flowids.linalg import SvdFactors

        feats = np.random.default_rng(0).standard_normal((6, 4))
        t = self.table(feats)
        factors = SvdFactors(u=np.eye(6, 4), s=np.ones(4), v=np.eye(4), k=4)
        out = project(t, factors)
        assert np.array_equal(out.features, feats)
        assert out.feature_names == ("svd_0", "svd_1", "svd_2", "svd_3")

    def test_coordinate_selection(self):
        from flowids.linalg import SvdFactors

        feats = np.random.default_rng(1).standard_normal((5, 3))
        t = self.table(feats)
        v = np.zeros((3, 1))
        v[0, 0] = 1.0
        factors = SvdFactors(u=np.zeros((5, 1)), s=np.ones(1), v=v, k=1)
        out = project(t, factors)
        assert np.array_equal(out.features[:, 0], feats[:, 0])

    def test_labels_and_rows_preserved(self):
        feats = np.random.default_rng(2).standard_normal((7, 5))
        t = self.table(feats)
        f = randomized_svd(feats, RsvdConfig(k=2, p=2, q=1, seed=0))
        out = project(t, f)
        assert out.n_rows == t.n_rows
        assert np.array_equal(out.labels, t.labels)

    def test_reconstruction_close_to_oracle_truncation(self):
        feats = np.random.default_rng(3).standard_normal((40, 12))
        t = self.table(feats)
        k = 4
        f = randomized_svd(feats, RsvdConfig(k=k, p=6, q=2, seed=1))
        projected = project(t, f)
        recon = projected.features @ f.v.T
        err = np.linalg.norm(feats - recon)
        oracle = svd_oracle(feats)
        optimal = np.sqrt(np.sum(oracle.s[k:] ** 2))
        assert err <= 1.05 * optimal

    def test_dimension_mismatch(self):
        feats = np.ones((3, 4))
        t = self.table(feats)
        f = svd_oracle(np.eye(3))
        with pytest.raises(ValueError, match="mismatch"):
            project(t, f)


def test_dump_factors_writes_csvs(tmp_path):
    f = svd_oracle(np.diag([2.0, 1.0]))
    paths = dump_factors(f, tmp_path)
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["u.csv", "s.csv", "v.csv"]
    loaded = np.loadtxt(tmp_path / "s.csv", delimiter=",")
    assert np.allclose(loaded, [2.0, 1.0])
