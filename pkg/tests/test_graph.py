"""Graph-shift operators, constraint sets, generators and the error metric."""

import networkx as nx
import numpy as np
import pytest

from topoinfer.graph import (
    ConstraintSet,
    ConstraintVariant,
    EdgeListError,
    Gso,
    GsoKind,
    erdos_renyi,
    karate_club,
    laplacian,
    load_edge_list,
    load_gso_json,
    normalized_laplacian,
    recovery_error,
    save_edge_list,
    save_gso_json,
    scale_to_degree,
    shift_from_normalized_laplacian,
    support,
    validate,
    validate_kind,
)

TRIANGLE = np.ones((3, 3)) - np.eye(3)


class TestGso:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            Gso(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_json_roundtrip(self, tmp_path):
        g = erdos_renyi(8, 0.5, seed=1)
        save_gso_json(g, tmp_path / "g.json")
        h = load_gso_json(tmp_path / "g.json")
        np.testing.assert_array_equal(h.matrix, g.matrix)
        assert h.kind == g.kind

    def test_edges(self):
        g = Gso(TRIANGLE)
        assert g.n_edges == 3
        assert g.edges()[0] == (0, 1, 1.0)


class TestValidate:
    def test_scaled_triangle_passes(self):
        assert validate(scale_to_degree(TRIANGLE)).passed

    def test_zero_fails_scale(self):
        rep = validate(np.zeros((3, 3)))
        assert not rep.passed
        assert rep.failed() == ["scale"]

    def test_nonzero_diagonal_fails(self):
        S = scale_to_degree(TRIANGLE)
        S[0, 0] = 0.5
        assert "zero-diagonal" in validate(S).failed()

    def test_negative_weight_fails(self):
        S = scale_to_degree(TRIANGLE)
        S[1, 2] = S[2, 1] = -0.1
        assert validate(S).failed() == ["nonnegativity"]

    def test_normalized_laplacian_set(self):
        A = nx.to_numpy_array(nx.cycle_graph(5))
        cs = ConstraintSet(ConstraintVariant.NORMALIZED_LAPLACIAN)
        assert validate(normalized_laplacian(A), cs).passed
        assert not validate(A, cs).passed

    def test_generated_graphs_valid_for_kind(self):
        for seed in range(5):
            g = erdos_renyi(12, 0.3, seed=seed)
            assert validate_kind(g)
            assert validate_kind(Gso(laplacian(g.matrix), GsoKind.LAPLACIAN))
            assert validate_kind(Gso(normalized_laplacian(g.matrix), GsoKind.NORMALIZED_LAPLACIAN))
        assert validate_kind(karate_club())


class TestShiftFromNormalizedLaplacian:
    def test_single_edge(self):
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        S = shift_from_normalized_laplacian(normalized_laplacian(A)).matrix
        np.testing.assert_allclose(S, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError):
            shift_from_normalized_laplacian(np.zeros((3, 3)))

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError):
            shift_from_normalized_laplacian(np.diag([1.0, -1.0]))

    def test_karate_spectrum(self):
        L = normalized_laplacian(karate_club().matrix)
        S = shift_from_normalized_laplacian(L).matrix
        w, V = np.linalg.eigh(L)
        assert abs(np.linalg.eigvalsh(S)[0]) < 1e-12
        # the top eigenvector of L_n is the one S sends to zero
        np.testing.assert_allclose(S @ V[:, -1], 0, atol=1e-12)

    def test_commutes_with_laplacian(self):
        for seed in range(5):
            L = normalized_laplacian(erdos_renyi(15, 0.3, seed=seed).matrix)
            S = shift_from_normalized_laplacian(L).matrix
            assert np.linalg.norm(S @ L - L @ S) < 1e-8


class TestErdosRenyi:
    def test_single_edge(self):
        np.testing.assert_array_equal(erdos_renyi(2, 1.0, seed=0).matrix, [[0, 1], [1, 0]])

    def test_complete(self):
        A = erdos_renyi(10, 1.0, seed=0).matrix
        np.testing.assert_array_equal(A.sum(axis=0), np.full(10, 9.0))

    def test_deterministic(self):
        np.testing.assert_array_equal(erdos_renyi(20, 0.3, seed=7).matrix, erdos_renyi(20, 0.3, seed=7).matrix)

    def test_connected(self):
        for seed in range(10):
            assert nx.is_connected(nx.from_numpy_array(erdos_renyi(15, 0.2, seed=seed).matrix))

    def test_retry_budget(self):
        with pytest.raises(RuntimeError):
            erdos_renyi(30, 0.01, seed=0, max_tries=3)

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            erdos_renyi(5, 0.0)


class TestEdgeList:
    def test_path(self, tmp_path):
        f = tmp_path / "p3.txt"
        f.write_text("0 1\n1 2")
        np.testing.assert_array_equal(load_edge_list(f).matrix, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])

    def test_karate_size(self):
        g = karate_club()
        assert g.n == 34
        assert g.n_edges == 78

    def test_out_of_range(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("0 5\n")
        with pytest.raises(EdgeListError, match="out of range"):
            load_edge_list(f, n=3)

    def test_duplicate(self, tmp_path):
        f = tmp_path / "dup.txt"
        f.write_text("0 1 1.0\n1 0 2.0\n")
        with pytest.raises(EdgeListError, match="duplicate"):
            load_edge_list(f, weighted=True)

    def test_parse_failure(self, tmp_path):
        f = tmp_path / "junk.txt"
        f.write_text("a b\n")
        with pytest.raises(EdgeListError):
            load_edge_list(f)

    def test_roundtrip(self, tmp_path):
        g = erdos_renyi(9, 0.4, seed=3)
        save_edge_list(g, tmp_path / "e.txt")
        np.testing.assert_array_equal(load_edge_list(tmp_path / "e.txt", weighted=True, n=9).matrix, g.matrix)


class TestRecoveryError:
    def test_examples(self):
        S = scale_to_degree(TRIANGLE)
        assert recovery_error(S, S) == 0.0
        assert recovery_error(np.zeros_like(S), S) == 1.0
        assert recovery_error(2 * S, S) == pytest.approx(1.0)

    def test_zero_truth(self):
        with pytest.raises(ValueError):
            recovery_error(np.eye(2), np.zeros((2, 2)))

    def test_support(self):
        S = np.array([[1.0, 1e-6], [1e-6, 0.0]])
        assert not support(S).any()
        assert support(TRIANGLE).sum() == 6
