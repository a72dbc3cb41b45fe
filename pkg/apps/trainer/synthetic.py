"""Synthetic hierarchical Gaussian-mixture datasets.

The generator builds a rectangular hierarchy from ``branching`` and places the children of
every node on a regular simplex around their parent's center. Each level owns its own block of
``branching - 1`` coordinates, so the siblings at one level are equidistant and a sample's
position at one level says nothing about the others; a random rotation then mixes the blocks.
The generator compiles the holdout rules into a split manifest and samples:

- training data for ID leaves only,
- test data for every leaf, tagged ID or OOD_Lk through the manifest,
- a true-OOD cluster ``true_ood_offset`` away from the mean of the leaf centers,
- an outlier pool used by the OE, energy and mixed objectives. Part of it is a broad normal
  background around the same mean; the rest comes from ``outlier_domains`` foreign clusters at
  ``true_ood_offset``, the first of which is the one the true-OOD test set is drawn from. Pool
  and test samples are independent draws, so they never share a point.
"""

import logfire
import numpy as np

from apps.hierarchy.models import LabelHierarchy, LabelNode, Membership
from apps.hierarchy.splits import compile_split, emit_manifest

from .models import LEVEL_PREFIXES, Array, SynthConfig, SyntheticData, TestSet

SYNTHETIC_ROOT = "synthetic"


def synthetic_hierarchy(branching: list[int]) -> LabelHierarchy:
    """Rectangular tree with ids like ``c0``, ``c0.m1``, ``c0.m1.f1``, in depth-first order."""
    nodes = [LabelNode(SYNTHETIC_ROOT, None, "Synthetic")]

    def add_children(parent_id: str, parent_path: str, depth: int):
        if depth == len(branching):
            return
        for index in range(branching[depth]):
            part = f"{LEVEL_PREFIXES[depth]}{index}"
            node_id = f"{parent_path}.{part}" if parent_path else part
            nodes.append(LabelNode(node_id, parent_id))
            add_children(node_id, node_id, depth + 1)

    add_children(SYNTHETIC_ROOT, "", 0)
    return LabelHierarchy(tuple(nodes), SYNTHETIC_ROOT)


def random_rotation(size: int, rng: np.random.Generator) -> Array:
    """Orthogonal ``size x size`` matrix from the QR decomposition of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(size, size)))
    return q * np.sign(np.diag(r))


def simplex_vertices(count: int, radius: float, rng: np.random.Generator) -> Array:
    """``count`` equidistant points at ``radius`` from the origin in ``count - 1`` dimensions, randomly turned."""
    centered = np.eye(count) - 1.0 / count
    basis, _ = np.linalg.qr(centered[:, : count - 1])
    vertices = centered @ basis @ random_rotation(count - 1, rng)
    return radius * vertices / np.linalg.norm(vertices, axis=1, keepdims=True)


def _child_index(node_id: str) -> int:
    return int(node_id.rsplit(".", 1)[-1][1:])


def _node_centers(hierarchy: LabelHierarchy, cfg: SynthConfig, rng: np.random.Generator) -> dict[str, Array]:
    offsets: list[Array] = []
    start = 0
    for count, scale in zip(cfg.branching, cfg.level_scales, strict=True):
        block = np.zeros((count, cfg.dims))
        block[:, start : start + count - 1] = simplex_vertices(count, scale * np.sqrt(cfg.dims), rng)
        offsets.append(block)
        start += count - 1
    rotation = random_rotation(cfg.dims, rng)

    centers = {hierarchy.root_id: np.zeros(cfg.dims)}
    for node in hierarchy:
        if node.parent_id is None:
            continue
        level = hierarchy.depth(node.node_id) - 1
        centers[node.node_id] = centers[node.parent_id] + offsets[level][_child_index(node.node_id)] @ rotation
    return centers


def _unit_vector(dims: int, rng: np.random.Generator) -> Array:
    direction = rng.normal(size=dims)
    return direction / np.linalg.norm(direction)


def _outlier_pool(cfg: SynthConfig, global_mean: Array, domain_centers: Array, rng: np.random.Generator) -> Array:
    foreign = round(cfg.outlier_pool_size * cfg.outlier_domain_fraction)
    domain = np.arange(foreign) % len(domain_centers)
    pool = np.concatenate(
        [
            global_mean + rng.normal(0.0, cfg.outlier_sigma, size=(cfg.outlier_pool_size - foreign, cfg.dims)),
            domain_centers[domain] + rng.normal(0.0, cfg.true_ood_sigma, size=(foreign, cfg.dims)),
        ]
    )
    return pool[rng.permutation(len(pool))]


def generate_synthetic(cfg: SynthConfig) -> SyntheticData:
    """Sample a dataset; the same config (seed included) always gives identical arrays.

    Args:
        cfg: Hierarchy shape, scales, sample counts, holdout rules, outlier domains and seed

    Returns:
        SyntheticData: Hierarchy, manifest, training set, test sets by membership and outlier pool

    Raises:
        SplitError: If the holdout rules are invalid or leave no ID class
    """
    with logfire.span("generate_synthetic", seed=cfg.seed, branching=cfg.branching):
        rng = np.random.default_rng(cfg.seed)
        hierarchy = synthetic_hierarchy(cfg.branching)
        manifest = emit_manifest(compile_split(hierarchy, cfg.holdouts))
        centers = _node_centers(hierarchy, cfg, rng)
        leaf_centers = {leaf: centers[leaf] for leaf in hierarchy.leaves}

        train_x: list[Array] = []
        train_y: list[np.ndarray] = []
        test_x: dict[Membership, list[Array]] = {}
        test_y: dict[Membership, list[np.ndarray]] = {}
        for leaf in hierarchy.leaves:
            membership = manifest.membership_of(leaf)
            label = manifest.class_index(leaf) if membership is Membership.ID else -1
            if membership is Membership.ID:
                noise = rng.normal(0.0, cfg.noise_sigma, size=(cfg.train_per_leaf, cfg.dims))
                train_x.append(leaf_centers[leaf] + noise)
                train_y.append(np.full(cfg.train_per_leaf, label, dtype=np.int64))
            test_x.setdefault(membership, []).append(
                leaf_centers[leaf] + rng.normal(0.0, cfg.noise_sigma, size=(cfg.test_per_leaf, cfg.dims))
            )
            test_y.setdefault(membership, []).append(np.full(cfg.test_per_leaf, label, dtype=np.int64))

        global_mean = np.mean(np.stack(list(leaf_centers.values())), axis=0)
        domain_centers = np.stack(
            [global_mean + cfg.true_ood_offset * _unit_vector(cfg.dims, rng) for _ in range(cfg.outlier_domains)]
        )
        true_center = domain_centers[0]
        if cfg.true_ood_samples:
            test_x[Membership.TRUE_OOD] = [
                true_center + rng.normal(0.0, cfg.true_ood_sigma, size=(cfg.true_ood_samples, cfg.dims))
            ]
            test_y[Membership.TRUE_OOD] = [np.full(cfg.true_ood_samples, -1, dtype=np.int64)]

        outlier_x = _outlier_pool(cfg, global_mean, domain_centers, rng)

        test_sets = {
            membership: TestSet(x=np.concatenate(test_x[membership]), labels=np.concatenate(test_y[membership]))
            for membership in Membership
            if membership in test_x
        }
        data = SyntheticData(
            hierarchy=hierarchy,
            manifest=manifest,
            train_x=np.concatenate(train_x),
            train_y=np.concatenate(train_y),
            test_sets=test_sets,
            outlier_x=outlier_x,
            config=cfg,
            leaf_centers=leaf_centers,
            true_ood_center=true_center,
        )
        logfire.info(
            "Synthetic data generated",
            seed=cfg.seed,
            num_classes=manifest.num_classes,
            train=len(data.train_x),
            test={membership.value: len(test_set) for membership, test_set in test_sets.items()},
            outliers=len(outlier_x),
        )
        return data
