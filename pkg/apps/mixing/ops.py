"""Mix operations and soft targets for virtual-out and virtual-in batches.

One mixing coefficient is drawn per batch from Beta(alpha, alpha). Linear mixing blends
inputs as ``lam * xa + (1 - lam) * xb``; cut mixing pastes a box of ``xb`` into ``xa`` and
reports the realized kept fraction as the corrected coefficient.

Labels may be given as a class index, an integer array of indices (one per row), a soft
vector of length K, or a matrix of soft rows. Integer dtype means indices.
"""

import numpy as np

from .exceptions import LabelIndexError, MixingError, NotGridError, ShapeMismatchError
from .models import CutBox, MixConfig, MixedBatch, MixKind, MixOp

SOFT_LABEL_TOLERANCE = 1e-9


def sample_lambda(cfg: MixConfig, rng: np.random.Generator) -> float:
    """Draw one mixing coefficient from Beta(alpha, alpha)."""
    return float(rng.beta(cfg.alpha, cfg.alpha))


def _check_lambda(lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise MixingError(f"Mixing coefficient must lie in [0, 1], got {lam}")
    return float(lam)


def _check_pair(xa, xb) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(xa, dtype=np.float64)
    xb = np.asarray(xb, dtype=np.float64)
    if xa.shape != xb.shape:
        raise ShapeMismatchError(f"Cannot mix inputs of shapes {xa.shape} and {xb.shape}")
    return xa, xb


def mix_linear(xa, xb, lam: float) -> np.ndarray:
    """Elementwise ``lam * xa + (1 - lam) * xb``.

    Raises:
        ShapeMismatchError: If the shapes differ
    """
    xa, xb = _check_pair(xa, xb)
    lam = _check_lambda(lam)
    return lam * xa + (1.0 - lam) * xb


def cut_box(height: int, width: int, lam: float, rng: np.random.Generator) -> CutBox:
    """Sample a box covering about ``1 - lam`` of an H x W grid.

    Side lengths are ``int(H * sqrt(1 - lam))`` and ``int(W * sqrt(1 - lam))``; the center is
    uniform over the grid and the box is clipped to its bounds.
    """
    lam = _check_lambda(lam)
    ratio = np.sqrt(1.0 - lam)
    cut_h = int(height * ratio)
    cut_w = int(width * ratio)
    center_y = int(rng.integers(0, height))
    center_x = int(rng.integers(0, width))

    top = center_y - cut_h // 2
    left = center_x - cut_w // 2
    return CutBox(
        top=int(np.clip(top, 0, height)),
        bottom=int(np.clip(top + cut_h, 0, height)),
        left=int(np.clip(left, 0, width)),
        right=int(np.clip(left + cut_w, 0, width)),
        height=height,
        width=width,
    )


def mix_cut(xa, xb, lam: float, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Paste a box of ``xb`` into ``xa``.

    Inputs are grids shaped (..., H, W, C); a leading batch axis shares one box.

    Returns:
        tuple[np.ndarray, float]: The mixed grid and the corrected coefficient, equal to the
        fraction of pixels taken from ``xa``

    Raises:
        ShapeMismatchError: If the shapes differ
        NotGridError: If the inputs have fewer than three axes
    """
    xa, xb = _check_pair(xa, xb)
    if xa.ndim < 3:
        raise NotGridError(f"Cut mixing needs (..., H, W, C) grids, got shape {xa.shape}")

    box = cut_box(xa.shape[-3], xa.shape[-2], lam, rng)
    mixed = xa.copy()
    rows = slice(box.top, box.bottom)
    cols = slice(box.left, box.right)
    mixed[..., rows, cols, :] = xb[..., rows, cols, :]
    return mixed, box.kept_fraction


def _soft_labels(y, num_classes: int) -> np.ndarray:
    """Labels as soft rows: (K,) for a single label, (n, K) for a batch."""
    if num_classes < 2:
        raise LabelIndexError(f"Need at least 2 classes, got {num_classes}")

    labels = np.asarray(y)
    if np.issubdtype(labels.dtype, np.integer):
        if labels.ndim > 1:
            raise LabelIndexError(f"Class indices must be a scalar or a vector, got shape {labels.shape}")
        if np.any(labels < 0) or np.any(labels >= num_classes):
            raise LabelIndexError(f"Class index out of range 0..{num_classes - 1}: {labels.tolist()}")
        return np.eye(num_classes, dtype=np.float64)[labels]

    soft = labels.astype(np.float64)
    if soft.shape[-1:] != (num_classes,) or soft.ndim > 2:
        raise LabelIndexError(f"Soft labels must have {num_classes} entries per row, got shape {soft.shape}")
    if np.any(soft < 0) or np.any(np.abs(soft.sum(axis=-1) - 1.0) > SOFT_LABEL_TOLERANCE):
        raise LabelIndexError("Soft labels must be non-negative and sum to 1")
    return soft


def virtual_out_targets(y_in, lam: float, num_classes: int) -> np.ndarray:
    """``lam * onehot(y_in) + (1 - lam) * uniform``.

    Example:
        ``virtual_out_targets(0, 0.6, 4)`` is [0.7, 0.1, 0.1, 0.1]

    Raises:
        LabelIndexError: If an index is outside 0..K-1
    """
    lam = _check_lambda(lam)
    onehot = _soft_labels(y_in, num_classes)
    return lam * onehot + (1.0 - lam) / num_classes


def virtual_in_targets(ya, yb, lam: float, num_classes: int) -> np.ndarray:
    """``lam * onehot(ya) + (1 - lam) * onehot(yb)``.

    Raises:
        LabelIndexError: If an index is outside 0..K-1
    """
    lam = _check_lambda(lam)
    first = _soft_labels(ya, num_classes)
    second = _soft_labels(yb, num_classes)
    if first.shape != second.shape:
        raise ShapeMismatchError(f"Cannot mix labels of shapes {first.shape} and {second.shape}")
    return lam * first + (1.0 - lam) * second


def _mix(
    cfg: MixConfig, xa: np.ndarray, xb: np.ndarray, lam: float, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    if cfg.op is MixOp.CUT:
        return mix_cut(xa, xb, lam, rng)
    return mix_linear(xa, xb, lam), lam


def build_virtual_out(
    x_in,
    y_in,
    outlier_pool,
    num_classes: int,
    cfg: MixConfig,
    rng: np.random.Generator,
) -> MixedBatch:
    """Blend each ID sample with an outlier drawn uniformly, with replacement, from the pool.

    Args:
        x_in: ID inputs, one row (or grid) per sample
        y_in: ID labels
        outlier_pool: Outlier inputs with the same per-sample shape as ``x_in``
        num_classes: K
        cfg: Mix operation and coefficient distribution
        rng: Generator for the coefficient, the outlier draw and the cut box

    Returns:
        MixedBatch: Virtual-out inputs with targets blended toward uniform
    """
    x_in = np.asarray(x_in, dtype=np.float64)
    pool = np.asarray(outlier_pool, dtype=np.float64)
    if len(pool) == 0:
        raise MixingError("Outlier pool is empty")

    lam = sample_lambda(cfg, rng)
    partners = pool[rng.integers(0, len(pool), size=len(x_in))]
    xs, lam_used = _mix(cfg, x_in, partners, lam, rng)
    ys = virtual_out_targets(y_in, lam_used, num_classes)
    return MixedBatch(xs=xs, ys=np.atleast_2d(ys), lambda_used=lam_used, kind=MixKind.VIRTUAL_OUT)


def build_virtual_in(
    x_in,
    y_in,
    num_classes: int,
    cfg: MixConfig,
    rng: np.random.Generator,
) -> MixedBatch:
    """Blend each ID sample with another sample of the same batch (a random permutation).

    Returns:
        MixedBatch: Virtual-in inputs with targets blended between the two labels
    """
    x_in = np.asarray(x_in, dtype=np.float64)
    labels = np.asarray(y_in)

    lam = sample_lambda(cfg, rng)
    order = rng.permutation(len(x_in))
    xs, lam_used = _mix(cfg, x_in, x_in[order], lam, rng)
    ys = virtual_in_targets(labels, labels[order], lam_used, num_classes)
    return MixedBatch(xs=xs, ys=np.atleast_2d(ys), lambda_used=lam_used, kind=MixKind.VIRTUAL_IN)
