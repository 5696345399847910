"""Dataset manifests and leave-one-domain-out fold planning.

A manifest lists images with a domain label (organ or scanner). Fold
planning produces one fold per distinct domain: that domain's images are
the validation set, everything else trains. Folds are ordered
lexicographically by domain label so fold ids are stable across runs and
machines.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import SingleDomain


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image_path: str
    mask_path: str
    domain: str


@dataclass(frozen=True)
class DatasetManifest:
    task_id: str
    entries: tuple[ManifestEntry, ...]

    def domains(self) -> list[str]:
        return sorted({e.domain for e in self.entries})

    def by_id(self) -> dict[str, ManifestEntry]:
        return {e.image_id: e for e in self.entries}


@dataclass(frozen=True)
class Fold:
    fold_id: int
    valid_domain: str
    train_ids: tuple[str, ...]
    valid_ids: tuple[str, ...]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[Fold, ...]


def validate_manifest(task_id: str, entries: list[ManifestEntry]) -> DatasetManifest:
    """Check id uniqueness and non-empty domains; report offending entry indices."""
    problems = []
    seen: dict[str, int] = {}
    for i, e in enumerate(entries):
        if not e.image_id:
            problems.append(f"entry {i}: empty image_id")
        elif e.image_id in seen:
            problems.append(f"entry {i}: duplicate image_id {e.image_id!r} (first at entry {seen[e.image_id]})")
        else:
            seen[e.image_id] = i
        if not e.domain:
            problems.append(f"entry {i}: empty domain")
    if problems:
        raise ValueError("invalid manifest: " + "; ".join(problems))
    return DatasetManifest(task_id=task_id, entries=tuple(entries))


def load_manifest(path) -> DatasetManifest:
    """Load a manifest; relative file paths resolve against the manifest's directory."""
    with open(path) as fh:
        raw = json.load(fh)
    base = os.path.dirname(os.path.abspath(os.fspath(path)))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))

    entries = [
        ManifestEntry(
            image_id=e["image_id"],
            image_path=resolve(e["image_path"]),
            mask_path=resolve(e["mask_path"]),
            domain=e["domain"],
        )
        for e in raw["entries"]
    ]
    return validate_manifest(raw["task_id"], entries)


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "task_id": manifest.task_id,
        "entries": [
            {
                "image_id": e.image_id,
                "image_path": e.image_path,
                "mask_path": e.mask_path,
                "domain": e.domain,
            }
            for e in manifest.entries
        ],
    }
    _atomic_write_json(doc, path)


def make_folds(manifest: DatasetManifest) -> FoldPlan:
    """One leave-one-domain-out fold per distinct domain.

    Raises SingleDomain when fewer than two domains are present.
    """
    domains = manifest.domains()
    if len(domains) < 2:
        raise SingleDomain(f"fold planning needs >= 2 domains, found {domains}")
    folds = []
    for fold_id, domain in enumerate(domains):
        valid_ids = tuple(e.image_id for e in manifest.entries if e.domain == domain)
        train_ids = tuple(e.image_id for e in manifest.entries if e.domain != domain)
        folds.append(Fold(fold_id=fold_id, valid_domain=domain,
                          train_ids=train_ids, valid_ids=valid_ids))
    return FoldPlan(folds=tuple(folds))


def save_fold_plan(plan: FoldPlan, path) -> None:
    doc = {
        "folds": [
            {
                "fold_id": f.fold_id,
                "valid_domain": f.valid_domain,
                "train_ids": list(f.train_ids),
                "valid_ids": list(f.valid_ids),
            }
            for f in plan.folds
        ]
    }
    _atomic_write_json(doc, path)


def load_fold_plan(path) -> FoldPlan:
    with open(path) as fh:
        raw = json.load(fh)
    return FoldPlan(folds=tuple(
        Fold(
            fold_id=f["fold_id"],
            valid_domain=f["valid_domain"],
            train_ids=tuple(f["train_ids"]),
            valid_ids=tuple(f["valid_ids"]),
        )
        for f in raw["folds"]
    ))


def _atomic_write_json(doc, path) -> None:
    payload = json.dumps(doc, indent=2) + "\n"
    tmp = f"{os.fspath(path)}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(payload)
    os.replace(tmp, path)
