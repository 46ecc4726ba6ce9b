"""Versioned JSON serialization for trees and forests.

Documents carry ``schema_version`` "major.minor"; loaders accept any minor
revision of a known major and refuse the rest.  Region bounds use ``null``
for the unbounded sides, every other number is a plain JSON float, and
dumps are key-sorted with fixed indentation so identical models serialize
to identical bytes.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .forest import Forest, ForestConfig, ForestMember
from .partition import Partition, Region
from .trees import StandardTree, SplitRecord, TreeConfig, UncertainTree, replay_split_log

SCHEMA_VERSION = "1.0"

KINDS = ("standard_tree", "uncertain_tree", "standard_forest", "uncertain_forest")


def _require(doc: dict, key: str) -> Any:
    if key not in doc:
        raise ValueError(f"invalid model document: missing field {key!r}")
    return doc[key]


def _check_version(doc: dict) -> None:
    version = str(_require(doc, "schema_version"))
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise ValueError(f"unsupported schema version {version!r}")


def _bound_out(value: float) -> float | None:
    return None if math.isinf(value) else float(value)


def _regions_out(partition: Partition) -> list:
    out = []
    for region in partition:
        out.append(
            [
                {"lo": _bound_out(region.lower[j]), "hi": _bound_out(region.upper[j])}
                for j in range(partition.p)
            ]
        )
    return out


def _regions_in(doc_regions: list, p: int) -> Partition:
    regions = []
    for bounds in doc_regions:
        if len(bounds) != p:
            raise ValueError(f"invalid model document: region has {len(bounds)} bounds, expected {p}")
        lower = np.array([-np.inf if b["lo"] is None else float(b["lo"]) for b in bounds])
        upper = np.array([np.inf if b["hi"] is None else float(b["hi"]) for b in bounds])
        regions.append(Region(lower, upper))
    return Partition(tuple(regions))


def _split_log_out(split_log: tuple[SplitRecord, ...]) -> list:
    return [
        {
            "region": int(rec.region),
            "feature": int(rec.feature),
            "threshold": float(rec.threshold),
            "risk": float(rec.risk),
        }
        for rec in split_log
    ]


def _split_log_in(entries: list) -> tuple[SplitRecord, ...]:
    return tuple(
        SplitRecord(int(e["region"]), int(e["feature"]), float(e["threshold"]), float(e["risk"]))
        for e in entries
    )


def _tree_config_out(config: TreeConfig) -> dict:
    return {
        "min_leaf_fraction": float(config.min_leaf_fraction),
        "max_leaves": config.max_leaves,
        "max_depth": config.max_depth,
    }


def _tree_config_in(doc: dict) -> TreeConfig:
    return TreeConfig(
        min_leaf_fraction=float(doc["min_leaf_fraction"]),
        max_leaves=None if doc.get("max_leaves") is None else int(doc["max_leaves"]),
        max_depth=None if doc.get("max_depth") is None else int(doc["max_depth"]),
    )


def _forest_config_out(config: ForestConfig) -> dict:
    return {
        "tau": int(config.tau),
        "mtry": config.mtry,
        "bootstrap": bool(config.bootstrap),
        "seed": int(config.seed),
        "variant": config.variant,
        "tree_config": _tree_config_out(config.tree_config),
    }


def _forest_config_in(doc: dict) -> ForestConfig:
    return ForestConfig(
        tau=int(doc["tau"]),
        mtry=None if doc.get("mtry") is None else int(doc["mtry"]),
        bootstrap=bool(doc["bootstrap"]),
        seed=int(doc["seed"]),
        variant=str(doc["variant"]),
        tree_config=_tree_config_in(doc["tree_config"]),
    )


def _check_replay(partition: Partition, split_log: tuple[SplitRecord, ...]) -> None:
    # Handcrafted documents (region lists for diagnostics) may omit the
    # split history; a non-empty log must reproduce the stored regions.
    if not split_log:
        return
    replayed = replay_split_log(partition.p, split_log)
    same = len(replayed) == len(partition) and all(
        replayed[k].equals(partition[k]) for k in range(len(partition))
    )
    if not same:
        raise ValueError("invalid model document: split log does not reproduce the stored regions")


def model_to_dict(model) -> dict:
    """Plain-JSON document for a fitted tree or forest."""
    if isinstance(model, UncertainTree):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "uncertain_tree",
            "n_features": model.p,
            "n_train": int(model.n_train),
            "config": _tree_config_out(model.config),
            "sigma": [float(s) for s in model.sigma],
            "gamma": [float(g) for g in model.gamma],
            "regions": _regions_out(model.partition),
            "split_log": _split_log_out(model.split_log),
        }
    if isinstance(model, StandardTree):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "standard_tree",
            "n_features": model.p,
            "n_train": int(model.n_train),
            "config": _tree_config_out(model.config),
            "gamma": [float(g) for g in model.gamma],
            "regions": _regions_out(model.partition),
            "split_log": _split_log_out(model.split_log),
        }
    if isinstance(model, Forest):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": f"{model.config.variant}_forest",
            "n_features": int(model.p),
            "config": _forest_config_out(model.config),
            "members": [
                {
                    "features": [int(j) for j in member.features],
                    "seed": int(member.seed),
                    "tree": model_to_dict(member.tree),
                }
                for member in model.members
            ],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    """Reconstruct a model from its document, verifying internal consistency."""
    if not isinstance(doc, dict):
        raise ValueError("invalid model document: expected a JSON object")
    _check_version(doc)
    kind = str(_require(doc, "kind"))
    if kind not in KINDS:
        raise ValueError(f"invalid model document: unknown kind {kind!r}")

    if kind.endswith("_tree"):
        p = int(_require(doc, "n_features"))
        partition = _regions_in(_require(doc, "regions"), p)
        gamma = np.array([float(g) for g in _require(doc, "gamma")])
        if gamma.shape[0] != len(partition):
            raise ValueError(
                f"invalid model document: {gamma.shape[0]} weights for {len(partition)} regions"
            )
        split_log = _split_log_in(_require(doc, "split_log"))
        _check_replay(partition, split_log)
        config = _tree_config_in(_require(doc, "config"))
        n_train = int(_require(doc, "n_train"))
        if kind == "uncertain_tree":
            sigma = np.array([float(s) for s in _require(doc, "sigma")])
            if sigma.shape[0] != p:
                raise ValueError(
                    f"invalid model document: {sigma.shape[0]} sigma entries for {p} features"
                )
            return UncertainTree(partition, gamma, sigma, split_log, n_train, config)
        return StandardTree(partition, gamma, split_log, n_train, config)

    config = _forest_config_in(_require(doc, "config"))
    expected_variant = kind.removesuffix("_forest")
    if config.variant != expected_variant:
        raise ValueError(
            f"invalid model document: kind {kind!r} with variant {config.variant!r}"
        )
    p = int(_require(doc, "n_features"))
    members = []
    for entry in _require(doc, "members"):
        features = np.array([int(j) for j in entry["features"]], dtype=np.intp)
        if features.size and (features.min() < 0 or features.max() >= p):
            raise ValueError("invalid model document: member feature index out of range")
        tree = model_from_dict(entry["tree"])
        if tree.p != p:
            raise ValueError(
                f"invalid model document: member tree spans {tree.p} features, forest expects {p}"
            )
        members.append(ForestMember(tree, features, int(entry["seed"])))
    if len(members) != config.tau:
        raise ValueError(
            f"invalid model document: {len(members)} members for tau = {config.tau}"
        )
    return Forest(tuple(members), p, config)


def dumps(model) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, no NaN."""
    return json.dumps(model_to_dict(model), sort_keys=True, indent=2, allow_nan=False)


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid model document: {exc}") from exc
    return model_from_dict(doc)


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
