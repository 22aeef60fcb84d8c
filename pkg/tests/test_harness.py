"""Experiment driver: decisions, baselines, tasks, ablations, tuning, CLI."""
import json

import numpy as np
import pytest

from physrel.builder import BuildConfig, FACTOR_KINDS, train_models
from physrel.core import Attribute, ObjectPairNode, RelationValue
from physrel.factorgraph import BPConfig
from physrel.harness import (
    AccuracyReport,
    DataPaths,
    TaskSpec,
    assemble_task_dataset,
    baseline_emb_maxent,
    baseline_majority,
    baseline_random,
    decide,
    load_world,
    run_ablation,
    run_task,
    toggle_switch,
    tune_thresholds,
    write_run,
)
from physrel.lexstats import EmbeddingStore, Embeddings, LabelAccessError
from conftest import make_dataset

SIZE, WEIGHT = Attribute.SIZE, Attribute.WEIGHT
GT, EQ, LT = RelationValue.GT, RelationValue.EQ, RelationValue.LT


def test_decide_argmax_and_tie_break():
    assert decide([0.5, 0.2, 0.3]) is GT
    assert decide([0.2, 0.2, 0.6]) is LT
    assert decide([0.4, 0.4, 0.2]) is GT  # tie breaks toward lower index
    assert decide([0.3, 0.3, 0.4]) is LT
    assert decide([1 / 3, 1 / 3, 1 / 3]) is GT


def test_task_spec_validation():
    with pytest.raises(ValueError):
        TaskSpec(task="verbs")
    with pytest.raises(ValueError):
        TaskSpec(cross_seed_fraction="50")
    with pytest.raises(ValueError):
        TaskSpec(eval_split="seed")


# -- baselines on hand-built data --


def majority_dataset():
    # Seeds: 3x GT, 1x LT. Dev golds: GT, GT, LT -> majority (GT) scores 2/3.
    pairs = [
        ("a", "b", "seed", {SIZE: GT}),
        ("c", "d", "seed", {SIZE: GT}),
        ("e", "f", "seed", {SIZE: GT}),
        ("g", "h", "seed", {SIZE: LT}),
        ("i", "j", "dev", {SIZE: GT}),
        ("k", "l", "dev", {SIZE: GT}),
        ("m", "n", "dev", {SIZE: LT}),
    ]
    return make_dataset(pairs=pairs)


def test_baseline_majority_accuracy():
    ds = majority_dataset()
    spec = TaskSpec(task="objects", eval_split="dev")
    report = baseline_majority(ds, spec)
    assert report.per_attribute["size"] == pytest.approx(2 / 3)
    assert report.counts["size"] == 3
    assert report.overall == pytest.approx(2 / 3)


def test_baseline_majority_requires_seeds():
    ds = make_dataset(pairs=[("a", "b", "dev", {SIZE: GT})])
    with pytest.raises(ValueError, match="empty seed"):
        baseline_majority(ds, TaskSpec(task="objects"))


def test_baseline_majority_tie_breaks_canonically():
    ds = make_dataset(
        pairs=[
            ("a", "b", "seed", {SIZE: EQ}),
            ("c", "d", "seed", {SIZE: LT}),
            ("e", "f", "dev", {SIZE: EQ}),
        ]
    )
    report = baseline_majority(ds, TaskSpec(task="objects"))
    # EQ and LT tie at one each; EQ wins by index order.
    assert report.per_attribute["size"] == 1.0


def test_baseline_random_deterministic_and_binary_on_single_item():
    ds = make_dataset(pairs=[("a", "b", "seed", {SIZE: GT}), ("c", "d", "dev", {SIZE: LT})])
    spec = TaskSpec(task="objects", eval_split="dev")
    r1 = baseline_random(ds, spec, rng_seed=7)
    r2 = baseline_random(ds, spec, rng_seed=7)
    assert r1.to_tsv() == r2.to_tsv()
    assert r1.per_attribute["size"] in (0.0, 1.0)


def test_baseline_random_mean_near_third():
    ds = majority_dataset()
    spec = TaskSpec(task="objects", eval_split="dev")
    report = baseline_random(ds, spec, rng_seed=0, resamples=10_000)
    assert report.overall == pytest.approx(1 / 3, abs=0.02)


def test_baseline_emb_maxent_perfect_on_separable_fixture():
    # Object embeddings whose first coordinate's sign determines the label;
    # seed and dev items follow the same rule, so the classifier must hit 1.0.
    objs = {}
    pairs = []
    for i in range(8):
        hi, lo = f"h{i}", f"l{i}"
        up = np.zeros(50)
        up[0] = 1.0 + 0.05 * i
        down = np.zeros(50)
        down[0] = -1.0 - 0.05 * i
        objs[hi], objs[lo] = up, down
        split = "seed" if i < 4 else "dev"
        label = GT if hi < lo else LT  # gold in canonical order
        x, y = sorted((hi, lo))
        pairs.append((x, y, split, {SIZE: GT if objs[x][0] > objs[y][0] else LT}))
    ds = make_dataset(pairs=pairs)
    emb = Embeddings(EmbeddingStore(100, {}), EmbeddingStore(50, objs))
    models = train_models(ds, emb)
    report = baseline_emb_maxent(ds, TaskSpec(task="objects", eval_split="dev"), models)
    assert report.per_attribute["size"] == 1.0


# -- report invariants --


def test_report_overall_is_macro_mean(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="5", eval_split="dev")
    ds = assemble_task_dataset(world.paths, spec)
    report = baseline_majority(ds, spec)
    assert report.overall == pytest.approx(np.mean(list(report.per_attribute.values())), abs=1e-12)
    micro = sum(report.per_attribute[a] * report.counts[a] for a in report.per_attribute) / sum(
        report.counts[a] for a in report.per_attribute
    )
    assert report.micro == pytest.approx(micro, abs=1e-12)


def test_report_serialization_stable(world):
    spec = TaskSpec(task="objects", eval_split="dev")
    ds = assemble_task_dataset(world.paths, spec)
    r = baseline_majority(ds, spec)
    assert r.to_tsv() == baseline_majority(ds, spec).to_tsv()
    payload = json.loads(r.to_json())
    assert payload["algorithm"] == "majority"
    assert 0.0 <= payload["overall"] <= 1.0


# -- run_task --


def test_run_task_seed_nodes_dominated_by_their_seeds(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="5", eval_split="dev")
    cfg = BuildConfig(enabled_factor_kinds=frozenset({"seed"}))
    result = run_task(spec, cfg, BPConfig(), world.paths)
    ds = assemble_task_dataset(world.paths, spec).restrict({"seed", "dev"}, {"seed", "dev"})
    checked = 0
    for item in ds.pairs_in("seed"):
        for attribute in ds.labeled_attributes(item):
            belief = result.beliefs[item.node(attribute)]
            assert decide(belief) is ds.gold(item, attribute)
            checked += 1
    assert checked > 0


def test_run_task_full_model_beats_seed_only(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="20", eval_split="dev")
    full = run_task(spec, BuildConfig(), BPConfig(), world.paths)
    seed_only = run_task(
        spec, BuildConfig(enabled_factor_kinds=frozenset({"seed"})), BPConfig(), world.paths
    )
    assert full.report.overall > seed_only.report.overall + 0.2


def test_run_task_report_fields(world):
    spec = TaskSpec(task="frames", cross_seed_fraction="5", eval_split="dev")
    result = run_task(spec, BuildConfig(), BPConfig(), world.paths)
    report = result.report
    assert report.task == "frames" and report.eval_split == "dev"
    assert set(report.per_attribute) <= {a.value for a in Attribute}
    assert all(0.0 <= v <= 1.0 for v in report.per_attribute.values())
    assert report.converged is not None and report.iterations >= 1
    assert len(report.config_fingerprint) == 16
    assert len(result.predictions) == sum(report.counts.values())


def test_run_task_pair_belief_orientation(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="5", eval_split="dev")
    result = run_task(spec, BuildConfig(), BPConfig(), world.paths)
    node = next(n for n in result.beliefs if isinstance(n, ObjectPairNode))
    fwd = result.pair_belief(node.x, node.y, node.attribute)
    rev = result.pair_belief(node.y, node.x, node.attribute)
    assert np.array_equal(rev, fwd[[2, 1, 0]])
    assert np.array_equal(fwd, result.beliefs[node])


def test_audit_guard_trips_on_eval_label_read_during_build(world):
    spec = TaskSpec(task="objects", eval_split="dev")
    ds = assemble_task_dataset(world.paths, spec).restrict({"seed", "dev"}, {"seed", "dev"})
    dev_item = ds.pairs_in("dev")[0]
    attribute = ds.labeled_attributes(dev_item)[0]
    with ds.audit_label_access({"seed"}):
        with pytest.raises(LabelAccessError):
            ds.gold(dev_item, attribute)


# -- ablations --


def test_toggle_switch_kinds_and_classes():
    cfg = BuildConfig()
    no_selpref = toggle_switch(cfg, "selpref")
    assert "selpref" not in no_selpref.enabled_factor_kinds
    assert toggle_switch(no_selpref, "selpref") == cfg
    assert toggle_switch(cfg, "frame_seeds").seed_frames is False
    assert toggle_switch(cfg, "object_embeddings").emb_objects is False
    assert toggle_switch(cfg, None) == cfg
    with pytest.raises(ValueError):
        toggle_switch(cfg, "gravity")


def test_run_ablation_identity_switch_identical_reports(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="5", eval_split="dev")
    result = run_ablation(spec, BuildConfig(), None, BPConfig(), world.paths)
    assert result.full.to_tsv() == result.ablated.to_tsv()
    assert result.delta == 0.0


def test_run_ablation_selpref_hurts_on_synthetic_world(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="20", eval_split="dev")
    result = run_ablation(spec, BuildConfig(), "selpref", BPConfig(), world.paths)
    assert result.ablated.overall < result.full.overall


# -- tuning --


def test_tune_singleton_grid_returns_it(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="5")
    cfg = BuildConfig(obj_sim_threshold=0.83)
    result = tune_thresholds(spec, [cfg], world.paths, BPConfig())
    assert result.best == cfg
    assert len(result.table) == 1


def test_tune_prefers_dominating_config(world):
    spec = TaskSpec(task="objects", cross_seed_fraction="20")
    good = BuildConfig()
    bad = BuildConfig(enabled_factor_kinds=frozenset({"seed"}))  # dev nodes get no signal
    result = tune_thresholds(spec, [bad, good], world.paths, BPConfig())
    assert result.best == good
    assert result.best_score > 0.8


def test_tune_empty_grid_rejected(world):
    with pytest.raises(ValueError):
        tune_thresholds(TaskSpec(), [], world.paths, BPConfig())


def test_tune_rejects_threshold_that_adds_harmful_factor(tmp_path):
    # Hand-built world with a known optimum. The dev pair (m, z) has gold GT;
    # with a permissive similarity threshold, b ~ z links (b, m) and (m, z)
    # on opposite sides of comparator m, pushing (m, z) toward the flip of
    # the seeded GT, which is wrong. The strict threshold adds nothing and
    # the factorless dev node decides GT correctly.
    (tmp_path / "frames_5.tsv").write_text("")
    (tmp_path / "frames_20.tsv").write_text("")
    pair_rows = "b\tm\tsize\t>\tseed\nm\tz\tsize\t>\tdev\n"
    (tmp_path / "pairs_5.tsv").write_text(pair_rows)
    (tmp_path / "pairs_20.tsv").write_text(pair_rows)
    (tmp_path / "embeddings_verbs.txt").write_text("")
    b_vec = " ".join(["1.0"] + ["0.0"] * 49)
    z_vec = " ".join(["0.9", "0.1"] + ["0.0"] * 48)  # cosine(b, z) ~ 0.994
    m_vec = " ".join(["0.0", "0.0", "1.0"] + ["0.0"] * 47)
    (tmp_path / "embeddings_objects.txt").write_text(f"b {b_vec}\nz {z_vec}\nm {m_vec}\n")
    (tmp_path / "cooccurrence.tsv").write_text("")

    kinds = frozenset({"seed", "objsim"})
    harmful = BuildConfig(enabled_factor_kinds=kinds, obj_sim_threshold=0.5)
    safe = BuildConfig(enabled_factor_kinds=kinds, obj_sim_threshold=0.999)
    spec = TaskSpec(task="objects", cross_seed_fraction="5", eval_split="dev")
    result = tune_thresholds(spec, [harmful, safe], DataPaths.from_dir(tmp_path), BPConfig())
    assert result.best == safe
    assert result.best_score == 1.0
    scores = dict(result.table)
    assert scores[harmful.to_text()] == 0.0


# -- output files and CLI --


def test_write_run_outputs(world, tmp_path):
    spec = TaskSpec(task="objects", cross_seed_fraction="5", eval_split="dev")
    result = run_task(spec, BuildConfig(), BPConfig(), world.paths)
    write_run(result, tmp_path)
    assert (tmp_path / "report.tsv").exists()
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "build_report.tsv").exists()
    predictions = (tmp_path / "predictions.tsv").read_text().splitlines()
    assert predictions[0].startswith("node\t")
    assert len(predictions) == len(result.predictions) + 1


def test_cli_subcommands(world, tmp_path):
    from physrel.cli import main

    data = str(world.paths.frames_5.parent)
    out = tmp_path / "cli"
    assert main(["train", "--data-dir", data, "--out-dir", str(out / "train")]) == 0
    assert (out / "train" / "maxent_size_frame.txt").exists()
    assert main(["build", "--data-dir", data, "--out-dir", str(out / "build"), "--task", "objects"]) == 0
    assert (out / "build" / "graph.txt").exists()
    assert main(["infer", "--data-dir", data, "--out-dir", str(out / "infer"), "--task", "objects"]) == 0
    assert (out / "infer" / "marginals.tsv").exists()
    assert main([
        "eval", "--data-dir", data, "--out-dir", str(out / "eval"), "--task", "objects",
        "--cross", "20", "--eval-split", "test",
    ]) == 0
    report = json.loads((out / "eval" / "report.json").read_text())
    assert report["overall"] > 0.8
    assert main([
        "eval", "--data-dir", data, "--out-dir", str(out / "evalr"), "--algorithm", "random",
        "--task", "objects", "--resamples", "50",
    ]) == 0
    assert main([
        "ablate", "--data-dir", data, "--out-dir", str(out / "ablate"), "--task", "objects",
        "--component", "selpref",
    ]) == 0
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"obj_sim_threshold": 0.7}, {"obj_sim_threshold": 0.9}]))
    assert main([
        "tune", "--data-dir", data, "--out-dir", str(out / "tune"), "--task", "objects",
        "--grid", str(grid),
    ]) == 0
    cfg_path = out / "tune" / "best_config.cfg"
    assert cfg_path.exists()
    # The tuned config file feeds straight back into eval via --config.
    assert main([
        "eval", "--data-dir", data, "--out-dir", str(out / "eval2"), "--task", "objects",
        "--config", str(cfg_path),
    ]) == 0


def test_cli_error_exits_nonzero(tmp_path):
    from physrel.cli import main

    assert main(["eval", "--data-dir", str(tmp_path / "missing")]) == 1
