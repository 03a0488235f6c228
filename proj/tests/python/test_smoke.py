import numpy as np
import pytest

import sttgcn


def rng():
    return np.random.default_rng(3)


def mode_product_ref(x, u, mode):
    return np.moveaxis(np.tensordot(u, x, axes=(1, mode - 1)), 0, mode - 1)


def test_unfold_fold_roundtrip():
    x = rng().standard_normal((3, 4, 2))
    for mode in (1, 2, 3):
        m = sttgcn.unfold(x, mode)
        assert m.shape[0] == x.shape[mode - 1]
        np.testing.assert_array_equal(sttgcn.fold(m, mode, list(x.shape)), x)


def test_mode_product_matches_tensordot():
    g = rng()
    x = g.standard_normal((3, 4, 5))
    for mode in (1, 2, 3):
        u = g.standard_normal((2, x.shape[mode - 1]))
        np.testing.assert_allclose(sttgcn.mode_product(x, u, mode), mode_product_ref(x, u, mode), rtol=1e-12, atol=1e-12)


def test_batch_product():
    g = rng()
    a = g.standard_normal((4, 3, 5))
    b = g.standard_normal((4, 5, 2))
    np.testing.assert_allclose(sttgcn.batch_mode3_product(a, b), np.einsum("kdt,kts->kds", a, b), atol=1e-12)


def test_hooi_full_rank_is_exact():
    x = rng().standard_normal((5, 4, 3))
    f = sttgcn.hooi(x, [5, 4, 3])
    rec = sttgcn.tucker_reconstruct(f["core"], f["u_s"], f["u_f"], f["u_t"])
    np.testing.assert_allclose(rec, x, atol=1e-10)
    low = sttgcn.hooi(x, [2, 2, 2])
    assert all(b <= a + 1e-12 for a, b in zip(low["errors"], low["errors"][1:]))
    np.testing.assert_allclose(low["u_s"].T @ low["u_s"], np.eye(2), atol=1e-10)


def test_factorized_matches_full_at_full_rank():
    g = rng()
    x = g.standard_normal((6, 3, 4))
    adj = np.ones((6, 6)) - np.eye(6)
    weights = [g.standard_normal((2, 3)) for _ in range(9)]
    full = sttgcn.st_conv_full(x, adj, weights, 2)
    fact = sttgcn.st_conv_factorized(x, adj, weights, 2, [6, 3, 4])
    assert np.linalg.norm(fact - full) <= 1e-8 * np.linalg.norm(full)


def test_metrics_and_memory():
    m = sttgcn.compute_metrics(np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 4.0]))
    assert m["rmse"] == pytest.approx(np.sqrt(2 / 3))
    assert m["r2"] == pytest.approx(0.0, abs=1e-12)
    assert sttgcn.compute_metrics(np.zeros(3), np.ones(3))["accuracy"] is None
    assert sttgcn.memory_footprint(156, 128, 12, 13, 12, 4) == (239616, 4236)
    assert sttgcn.ranks_from_rule([156, 128, 12], "sqrt") == [13, 12, 4]


def test_synthetic_and_ha():
    speeds, adj = sttgcn.make_synthetic(nodes=6, steps=200)
    assert speeds.shape == (200, 6)
    assert adj.shape == (6, 6)
    m = sttgcn.ha_metrics(speeds, adj)
    assert m["rmse"] > 0


def test_errors_are_python_exceptions():
    with pytest.raises(ValueError):
        sttgcn.mode_product(np.zeros((2, 2, 2)), np.zeros((3, 3)), 1)
    with pytest.raises(ValueError):
        sttgcn.ranks_from_rule([4, 4, 4], "log")


def test_cli_entry(tmp_path):
    code, out, _ = sttgcn.run_cli(["decompose", "--random", "5,4,3", "--ranks", "2,2,2", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "decompose_trace.csv").exists()
    assert sttgcn.run_cli([])[0] == 2
