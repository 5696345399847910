import json

import pytest

from tileseg.errors import SingleDomain
from tileseg.manifest import (
    DatasetManifest,
    ManifestEntry,
    load_fold_plan,
    load_manifest,
    make_folds,
    save_fold_plan,
    save_manifest,
    validate_manifest,
)


def _manifest(domain_counts: dict[str, int]) -> DatasetManifest:
    entries = []
    for domain, count in domain_counts.items():
        for i in range(count):
            entries.append(ManifestEntry(
                image_id=f"{domain}_{i}",
                image_path=f"/data/{domain}_{i}.png",
                mask_path=f"/data/{domain}_{i}_mask.png",
                domain=domain,
            ))
    return validate_manifest("task", entries)


def test_three_domain_folds():
    manifest = _manifest({"stomach": 60, "colon": 60, "pancreas": 60})
    plan = make_folds(manifest)
    assert len(plan.folds) == 3
    for fold in plan.folds:
        assert len(fold.valid_ids) == 60
        assert len(fold.train_ids) == 120
        assert set(fold.valid_ids).isdisjoint(fold.train_ids)
        assert len(set(fold.valid_ids) | set(fold.train_ids)) == 180


def test_folds_ordered_lexicographically():
    plan = make_folds(_manifest({"zebra": 1, "alpha": 1, "mid": 1}))
    assert [f.valid_domain for f in plan.folds] == ["alpha", "mid", "zebra"]
    assert [f.fold_id for f in plan.folds] == [0, 1, 2]


def test_two_domain_folds_exhaustive():
    plan = make_folds(_manifest({"A": 2, "B": 3}))
    assert len(plan.folds) == 2
    by_domain = {f.valid_domain: f for f in plan.folds}
    assert set(by_domain["A"].valid_ids) == {"A_0", "A_1"}
    assert set(by_domain["A"].train_ids) == {"B_0", "B_1", "B_2"}
    assert set(by_domain["B"].valid_ids) == {"B_0", "B_1", "B_2"}
    assert set(by_domain["B"].train_ids) == {"A_0", "A_1"}


def test_single_domain_rejected():
    with pytest.raises(SingleDomain):
        make_folds(_manifest({"only": 4}))


def test_fold_partition_property():
    manifest = _manifest({"a": 3, "b": 5, "c": 2, "d": 4})
    plan = make_folds(manifest)
    all_ids = {e.image_id for e in manifest.entries}
    for image_id in all_ids:
        valid_hits = sum(image_id in f.valid_ids for f in plan.folds)
        train_hits = sum(image_id in f.train_ids for f in plan.folds)
        assert valid_hits == 1
        assert train_hits == len(plan.folds) - 1


def test_domain_purity():
    manifest = _manifest({"a": 3, "b": 5, "c": 2})
    by_id = {e.image_id: e.domain for e in manifest.entries}
    for fold in make_folds(manifest).folds:
        assert all(by_id[i] != fold.valid_domain for i in fold.train_ids)
        assert all(by_id[i] == fold.valid_domain for i in fold.valid_ids)


def test_manifest_json_round_trip(tmp_path):
    manifest = _manifest({"a": 2, "b": 1})
    path = tmp_path / "manifest.json"
    save_manifest(manifest, path)
    loaded = load_manifest(path)
    assert loaded == manifest
    doc = json.loads(path.read_text())
    assert doc["task_id"] == "task"
    assert set(doc["entries"][0]) == {"image_id", "image_path", "mask_path", "domain"}


def test_fold_plan_json_round_trip(tmp_path):
    plan = make_folds(_manifest({"a": 2, "b": 1}))
    path = tmp_path / "folds.json"
    save_fold_plan(plan, path)
    assert load_fold_plan(path) == plan


def test_duplicate_ids_reported_with_index():
    entries = [
        ManifestEntry("x", "p1", "m1", "a"),
        ManifestEntry("x", "p2", "m2", "b"),
    ]
    with pytest.raises(ValueError, match="entry 1.*duplicate"):
        validate_manifest("t", entries)


def test_empty_domain_reported_with_index():
    entries = [ManifestEntry("x", "p", "m", "")]
    with pytest.raises(ValueError, match="entry 0.*domain"):
        validate_manifest("t", entries)
