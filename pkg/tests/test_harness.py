import numpy as np
import pytest

from cttfed.dataio import SyntheticSpec, gen_synthetic
from cttfed.engine import run_master_slave
from cttfed.errors import ConfigError, PrivacyAuditError
from cttfed.harness import (
    DatasetSpec,
    ExperimentConfig,
    audit_privacy,
    build_embeddings,
    comm_predicted_dec,
    comm_predicted_ms,
    compute_cost_model,
    cross_validate,
    feature_variance,
    knn_classify,
    rse,
    rse_global,
    run_experiment,
    run_sweep,
    select_top_m,
    FeatureSelection,
)
from cttfed.network import Message
from cttfed.tensor import DenseTensor


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


def synthetic_config(**overrides):
    base = dict(
        mode="master-slave",
        dataset=DatasetSpec(kind="synthetic", dims=[40, 10, 10], ranks=[3, 3], density=0.4),
        clients=4,
        r1=3,
        eps1=0.1,
        eps2=0.05,
        seed=1,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------- rse ----------


def test_rse_identities():
    x = DenseTensor(rng_for(1).standard_normal((4, 5)))
    assert rse(x, x) == 0.0
    assert rse(x, DenseTensor(np.zeros((4, 5)))) == pytest.approx(1.0)
    assert rse(x, DenseTensor(0.9 * x.data)) == pytest.approx(0.01)


def test_rse_errors():
    x = DenseTensor(np.ones((2, 2)))
    with pytest.raises(ValueError, match="zero norm"):
        rse(DenseTensor(np.zeros((2, 2))), x)
    with pytest.raises(ValueError, match="mismatch"):
        rse(x, DenseTensor(np.ones((3, 2))))


def test_rse_global_energy_weighted():
    rng = rng_for(2)
    pairs = [
        (DenseTensor(rng.standard_normal((3, 3))), DenseTensor(rng.standard_normal((3, 3))))
        for _ in range(3)
    ]
    per = [rse(x, xh) for x, xh in pairs]
    energies = [np.linalg.norm(x.data) ** 2 for x, _ in pairs]
    combined = sum(r * e for r, e in zip(per, energies)) / sum(energies)
    assert rse_global(pairs) == pytest.approx(combined, rel=1e-12)


# ---------- communication formulas (frozen reference counts) ----------


def test_comm_dec_diabetes_grid():
    dims = (250, 20, 24)
    assert comm_predicted_dec(1, 15, dims) == 7200
    assert comm_predicted_dec(2, 15, dims) == 14400
    assert comm_predicted_dec(3, 15, dims) == 21600
    assert comm_predicted_dec(4, 15, dims) == 28800


def test_comm_dec_synthetic_entry():
    assert comm_predicted_dec(1, 5, (50, 30, 30)) == 4500


def test_comm_ms_diabetes_entry():
    # realized ranks [1, 15, 9, 1] on a x20x24 tensor
    assert comm_predicted_ms([1, 15, 9, 1], (250, 20, 24)) == 2916


def test_comm_ms_all_rank_one():
    assert comm_predicted_ms([1, 1, 1, 1], (9, 20, 24)) == 20 + 24


def test_comm_ms_matches_measured_uplink():
    spec = SyntheticSpec(dims=[40, 9, 8], client_count=4, ranks=[3, 3], density=0.5, seed=3)
    tensors = gen_synthetic(spec).tensors
    result = run_master_slave(tensors, 0.1, 0.05, 3)
    dims = tensors[0].dims
    for state, measured in zip(result.clients, result.uplink_elements):
        ranks = [1, state.payload.shape[0]] + [c.shape[2] for c in state.feature_cores]
        assert measured == comm_predicted_ms(ranks, dims)


# ---------- compute cost model ----------


def test_cost_model_master_slave_large_k_limit():
    small_k = compute_cost_model((30, 30, 30), [1, 10, 10, 1], 2, 3, "master-slave")
    huge_k = compute_cost_model((30, 30, 30), [1, 10, 10, 1], 10**9, 3, "master-slave")
    assert huge_k["total"] == pytest.approx(small_k["terms"]["client_svd"], rel=1e-6)


def test_cost_model_rank_quadratic():
    a = compute_cost_model((30, 30, 30), [1, 10, 10, 1], 4, 3, "master-slave")
    b = compute_cost_model((30, 30, 30), [1, 20, 20, 1], 4, 3, "master-slave")
    assert b["terms"]["client_svd"] == pytest.approx(4 * a["terms"]["client_svd"])


def test_cost_model_monotone_in_k():
    totals = [
        compute_cost_model((40, 40, 40), [1, 3, 3, 1], k, 3, "master-slave")["total"]
        for k in (2, 4, 8)
    ]
    assert totals[0] > totals[1] > totals[2]


def test_cost_model_dec_linear_in_rounds():
    a = compute_cost_model((30, 30, 30), [1, 5, 5, 1], 4, 1, "decentralized")
    b = compute_cost_model((30, 30, 30), [1, 5, 5, 1], 4, 2, "decentralized")
    assert b["terms"]["consensus"] == pytest.approx(2 * a["terms"]["consensus"])


# ---------- feature variance / selection / embeddings ----------


def test_feature_variance_constant_and_pm_one():
    from cttfed.engine import GlobalFeatures

    g2 = np.zeros((1, 2, 2))
    g2[0, 0] = [3.0, 3.0]  # constant slice -> 0
    g2[0, 1] = [1.0, -1.0]  # population variance 1
    g3 = np.ones((2, 2, 1))
    variances = feature_variance(GlobalFeatures(cores=[g2, g3]))
    assert variances[0].tolist() == [0.0, 1.0]


def test_feature_variance_matches_two_pass_oracle():
    from cttfed.engine import GlobalFeatures

    rng = rng_for(4)
    g2 = rng.standard_normal((3, 6, 2))
    g3 = rng.standard_normal((2, 5, 1))
    variances = feature_variance(GlobalFeatures(cores=[g2, g3]))
    for j in range(6):
        flat = g2[:, j, :].ravel()
        mean = sum(flat) / flat.size
        var = sum((v - mean) ** 2 for v in flat) / flat.size
        assert variances[0][j] == pytest.approx(var, rel=1e-12)


def test_select_top_m_basic_and_ties():
    sel = select_top_m([np.array([3.0, 1.0, 2.0])], 2)
    assert sel.selected == [[1, 3]]
    sel_all = select_top_m([np.array([3.0, 1.0, 2.0])], 3)
    assert sel_all.selected == [[1, 2, 3]]
    ties = select_top_m([np.array([5.0, 5.0, 5.0])], 2)
    assert ties.selected == [[1, 2]]
    with pytest.raises(ValueError, match="out of range"):
        select_top_m([np.array([1.0, 2.0])], 3)


def test_build_embeddings_full_selection_is_flatten():
    x = DenseTensor(rng_for(5).standard_normal((4, 3, 3)))
    sel = FeatureSelection(variances=[], selected=[[1, 2, 3], [1, 2, 3]])
    emb = build_embeddings(x, sel)
    for i in range(4):
        np.testing.assert_array_equal(emb[i], np.ravel(x.data[i], order="F"))


def test_build_embeddings_single_index():
    x = DenseTensor(rng_for(6).standard_normal((5, 2, 2)))
    sel = FeatureSelection(variances=[], selected=[[1], [1]])
    emb = build_embeddings(x, sel)
    np.testing.assert_array_equal(emb[:, 0], x.data[:, 0, 0])


def test_build_embeddings_matches_index_oracle():
    x = DenseTensor(rng_for(7).standard_normal((4, 3, 3)))
    sel = FeatureSelection(variances=[], selected=[[1, 3], [2, 3]])
    emb = build_embeddings(x, sel)
    # colexicographic over (j2, j3): fastest index is mode 2's set
    for i in range(4):
        expected = [
            x.data[i, 0, 1], x.data[i, 2, 1],
            x.data[i, 0, 2], x.data[i, 2, 2],
        ]
        assert emb[i].tolist() == expected


def test_build_embeddings_out_of_range():
    x = DenseTensor(np.zeros((2, 2, 2)))
    sel = FeatureSelection(variances=[], selected=[[1, 3], [1]])
    with pytest.raises(ValueError, match="out of range"):
        build_embeddings(x, sel)


# ---------- kNN ----------


def test_knn_exact_match_k1():
    train = np.array([[0.0, 0], [5, 5], [9, 0]])
    labels = np.array([0, 1, 2])
    pred = knn_classify(train, labels, np.array([[5.0, 5]]), k=1)
    assert pred.tolist() == [1]


def test_knn_two_clusters_perfect():
    rng = rng_for(8)
    train = np.concatenate([rng.normal(-10, 0.5, (20, 1)), rng.normal(10, 0.5, (20, 1))])
    labels = np.array([0] * 20 + [1] * 20)
    test = np.array([[-9.0], [10.5], [-11.0]])
    pred = knn_classify(train, labels, test, k=3)
    assert pred.tolist() == [0, 1, 0]


def test_knn_matches_bruteforce_oracle():
    rng = rng_for(9)
    train = rng.standard_normal((50, 4))
    labels = rng.integers(0, 3, 50)
    test = rng.standard_normal((20, 4))
    pred = knn_classify(train, labels, test, k=5)
    for row, got in zip(test, pred):
        dists = sorted(
            (float(np.linalg.norm(train[i] - row)), i) for i in range(50)
        )
        votes = {}
        for _, i in dists[:5]:
            votes[labels[i]] = votes.get(labels[i], 0) + 1
        best = max(votes.values())
        expected = min(lab for lab, cnt in votes.items() if cnt == best)
        assert got == expected


def test_knn_tie_breaks():
    # vote tie between labels 1 and 2 -> smallest label
    train = np.array([[0.0], [2.0]])
    labels = np.array([2, 1])
    pred = knn_classify(train, labels, np.array([[1.0]]), k=2)
    assert pred.tolist() == [1]
    # distance tie -> smaller train index first
    train = np.array([[1.0], [-1.0], [3.0]])
    labels = np.array([7, 8, 9])
    pred = knn_classify(train, labels, np.array([[0.0]]), k=1)
    assert pred.tolist() == [7]


def test_knn_errors():
    with pytest.raises(ValueError, match="empty"):
        knn_classify(np.zeros((0, 2)), np.array([]), np.zeros((1, 2)), k=1)
    with pytest.raises(ValueError, match="out of range"):
        knn_classify(np.zeros((3, 2)), np.zeros(3), np.zeros((1, 2)), k=4)


# ---------- cross-validation ----------


def _separable_fixture():
    rng = rng_for(10)
    n = 60
    labels = np.array([i % 3 for i in range(n)])
    base = np.zeros((n, 4, 4))
    for i in range(n):
        base[i] = labels[i] * 10.0 + rng.normal(0, 0.1, (4, 4))
    return DenseTensor(base), labels


def test_cross_validate_separable():
    x, labels = _separable_fixture()
    sel = FeatureSelection(variances=[], selected=[[1, 2], [1, 2]])
    result = cross_validate(x, labels, sel, k=3, repeats=10, seed=1)
    assert result.mean_test == pytest.approx(1.0)
    assert len(result.test_accuracies) == 10


def test_cross_validate_noise_labels_near_chance():
    rng = rng_for(11)
    n = 120
    x = DenseTensor(rng.standard_normal((n, 4, 4)))
    labels = np.array([i % 3 for i in range(n)])
    sel = FeatureSelection(variances=[], selected=[[1, 2, 3], [1, 2, 3]])
    result = cross_validate(x, labels, sel, k=5, repeats=10, seed=2)
    assert 0.23 <= result.mean_test <= 0.43


def test_cross_validate_deterministic():
    x, labels = _separable_fixture()
    sel = FeatureSelection(variances=[], selected=[[1, 2], [1, 2]])
    a = cross_validate(x, labels, sel, k=3, repeats=5, seed=7)
    b = cross_validate(x, labels, sel, k=3, repeats=5, seed=7)
    assert a.test_accuracies == b.test_accuracies


def test_cross_validate_label_length_mismatch():
    x, labels = _separable_fixture()
    sel = FeatureSelection(variances=[], selected=[[1], [1]])
    with pytest.raises(ValueError, match="labels"):
        cross_validate(x, labels[:-1], sel)


# ---------- privacy audit ----------


def test_audit_passes_clean_run():
    cfg = synthetic_config()
    report = run_experiment(cfg)
    assert report.privacy_audit == "pass"


def test_audit_detects_injected_personal_core():
    rng = rng_for(12)
    core = rng.standard_normal((10, 3))
    messages = [
        Message(1, "client:1", "server", "feature_cores", (rng.standard_normal((3, 4)),)),
        Message(1, "client:2", "server", "feature_cores", (core.copy(),)),
    ]
    result = audit_privacy(messages, [core])
    assert not result.passed
    assert result.offending == [1]


def test_audit_detects_tagged_payload():
    messages = [Message(1, "client:1", "server", "personal_core", (np.zeros((2, 2)),))]
    result = audit_privacy(messages, [])
    assert not result.passed and result.offending == [0]


def test_run_experiment_raises_on_leak(monkeypatch):
    # fault injection: make the protocol leak a personal core through the sim
    import cttfed.engine as engine

    original = engine.run_master_slave

    def leaky(tensors, eps1, eps2, r1, sim=None):
        result = original(tensors, eps1, eps2, r1, sim)
        result.sim.send("client:1", "server", "feature_cores", [result.clients[0].personal_core])
        return result

    monkeypatch.setattr("cttfed.harness.run_master_slave", leaky)
    with pytest.raises(PrivacyAuditError):
        run_experiment(synthetic_config())


# ---------- run_experiment / run_sweep ----------


def test_run_reports_are_deterministic_modulo_wall_time():
    a = run_experiment(synthetic_config(mode="decentralized", rounds=3)).to_dict()
    b = run_experiment(synthetic_config(mode="decentralized", rounds=3)).to_dict()
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_run_centralized_zero_comm():
    report = run_experiment(synthetic_config(mode="centralized"))
    assert report.comm_measured_total == 0
    assert report.comm_measured_per_link == []
    assert report.rounds == 0


def test_run_master_slave_report_contract():
    report = run_experiment(synthetic_config())
    assert report.rounds == 2
    assert report.comm_measured_per_link == report.comm_predicted
    assert len(report.rse_per_client) == 4
    combined = sum(
        r * e for r, e in zip(report.rse_per_client, _client_energies(report))
    ) / sum(_client_energies(report))
    assert report.rse_global == pytest.approx(combined, rel=1e-9)


def _client_energies(report):
    # regenerate the dataset to recover per-client energies
    cfg = ExperimentConfig.from_dict(report.config)
    from cttfed.harness import load_dataset

    return [float(np.linalg.norm(t.data) ** 2) for t in load_dataset(cfg)]


def test_run_decentralized_report_contract():
    report = run_experiment(synthetic_config(mode="decentralized", rounds=3))
    assert report.rounds == 3
    assert len(report.consensus_error_trace) == 3
    assert report.lambda2 is not None and 0 <= report.lambda2 < 1
    assert report.comm_measured_per_link == report.comm_predicted


def test_run_rejects_bad_config():
    with pytest.raises(ConfigError, match="divide"):
        run_experiment(synthetic_config(clients=3))
    with pytest.raises(ConfigError, match="mode"):
        run_experiment(synthetic_config(mode="ring"))
    with pytest.raises(ConfigError, match="eps"):
        run_experiment(synthetic_config(eps1=1.5))


def test_sweep_grid_rows_and_scaling():
    cfg = synthetic_config(mode="decentralized", sweep={"rounds": [1, 2, 3, 4]})
    reports = run_sweep(cfg)
    assert len(reports) == 4
    base = reports[0].comm_predicted[0]
    for i, rep in enumerate(reports, start=1):
        assert rep.comm_predicted[0] == base * i


def test_sweep_rejects_empty_or_unknown():
    with pytest.raises(ConfigError, match="non-empty"):
        run_sweep(synthetic_config())
    with pytest.raises(ConfigError, match="cannot sweep"):
        run_sweep(synthetic_config(sweep={"colour": [1]}))


def test_config_roundtrip_through_dict():
    cfg = synthetic_config(mode="decentralized", rounds=2)
    clone = ExperimentConfig.from_dict(cfg.to_dict())
    assert clone.to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError, match="unknown config fields"):
        ExperimentConfig.from_dict({"modes": "x"})


def test_missing_data_degrades_rse_monotonically():
    base = synthetic_config(
        dataset=DatasetSpec(kind="synthetic", dims=[40, 10, 10], ranks=[3, 3], density=0.4),
        r1=3,
    )
    rses = []
    for fraction in (0.0, 0.3, 0.6):
        cfg = ExperimentConfig.from_dict(base.to_dict())
        cfg.missing_fraction = fraction
        rses.append(run_experiment(cfg).rse_global)
    assert rses[0] < rses[1] < rses[2]


def test_numerical_failures_map_to_numerical_error(monkeypatch):
    from cttfed.errors import NumericalError

    def explode(*args, **kwargs):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr("cttfed.harness.run_master_slave", explode)
    with pytest.raises(NumericalError, match="converge"):
        run_experiment(synthetic_config())
