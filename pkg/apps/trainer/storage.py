"""On-disk formats for datasets, models and training logs.

Model file layout, all integers unsigned 32-bit and all floats 64-bit, little-endian::

    b"FGOODMLP"                 magic, 8 bytes
    version                     currently 1
    n_layers                    number of affine layers
    sizes[n_layers + 1]         [d, hidden..., K]
    per layer: W (out, in) row-major, then b (out,)

A dataset directory holds ``train_x.npy``, ``train_y.npy``, ``outliers_x.npy``, one
``test_<membership>_x.npy`` / ``test_<membership>_y.npy`` pair per test set, plus
``manifest.json``, ``hierarchy.txt`` and, for generated data, ``synth.json``.
"""

from pathlib import Path

import logfire
import numpy as np
from pydantic import ValidationError

from apps.hierarchy.exceptions import HierarchyError
from apps.hierarchy.models import Membership, SplitManifest
from apps.hierarchy.parser import emit_hierarchy_text, parse_hierarchy

from .exceptions import DatasetError, ModelFormatError
from .models import EpochLog, SynthConfig, SyntheticData, TestSet
from .network import MlpModel

MODEL_MAGIC = b"FGOODMLP"
MODEL_FORMAT_VERSION = 1
UINT = np.dtype("<u4")
FLOAT = np.dtype("<f8")
INT = np.dtype("<i8")

MANIFEST_FILE = "manifest.json"
HIERARCHY_FILE = "hierarchy.txt"
SYNTH_CONFIG_FILE = "synth.json"


def model_to_bytes(model: MlpModel) -> bytes:
    sizes = model.layer_sizes
    parts = [
        MODEL_MAGIC,
        np.array([MODEL_FORMAT_VERSION, len(model.weights)], dtype=UINT).tobytes(),
        np.array(sizes, dtype=UINT).tobytes(),
    ]
    for weight, bias in zip(model.weights, model.biases, strict=True):
        parts.append(np.ascontiguousarray(weight, dtype=FLOAT).tobytes())
        parts.append(np.ascontiguousarray(bias, dtype=FLOAT).tobytes())
    return b"".join(parts)


def model_from_bytes(payload: bytes) -> MlpModel:
    """Decode a model file.

    Raises:
        ModelFormatError: On a wrong magic, an unknown version, or a truncated or oversized payload
    """
    if not payload.startswith(MODEL_MAGIC):
        raise ModelFormatError("Not a model file (bad magic)")
    offset = len(MODEL_MAGIC)
    if len(payload) < offset + 2 * UINT.itemsize:
        raise ModelFormatError("Model file header is truncated")
    version, n_layers = (int(v) for v in np.frombuffer(payload, dtype=UINT, count=2, offset=offset))
    offset += 2 * UINT.itemsize
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"Unsupported model format version {version}, expected {MODEL_FORMAT_VERSION}")
    if n_layers < 1 or len(payload) < offset + (n_layers + 1) * UINT.itemsize:
        raise ModelFormatError(f"Model file declares {n_layers} layers but the header is truncated")
    sizes = [int(v) for v in np.frombuffer(payload, dtype=UINT, count=n_layers + 1, offset=offset)]
    if min(sizes) < 1:
        raise ModelFormatError(f"Model file declares empty layers {sizes}")
    offset += (n_layers + 1) * UINT.itemsize

    expected = offset + sum((fan_in * fan_out + fan_out) * FLOAT.itemsize for fan_in, fan_out in zip(sizes, sizes[1:]))
    if len(payload) != expected:
        raise ModelFormatError(f"Model file has {len(payload)} bytes, layer sizes {sizes} need {expected}")

    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weight = np.frombuffer(payload, dtype=FLOAT, count=fan_in * fan_out, offset=offset)
        offset += weight.nbytes
        bias = np.frombuffer(payload, dtype=FLOAT, count=fan_out, offset=offset)
        offset += bias.nbytes
        weights.append(weight.reshape(fan_out, fan_in).astype(np.float64))
        biases.append(bias.astype(np.float64))
    return MlpModel(weights=weights, biases=biases)


def save_model(model: MlpModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))
    logfire.info("Model saved", path=str(path), layer_sizes=model.layer_sizes)
    return path


def load_model(path: str | Path) -> MlpModel:
    return model_from_bytes(Path(path).read_bytes())


def _test_file(membership: Membership, axis: str) -> str:
    return f"test_{membership.value}_{axis}.npy"


def save_dataset(data: SyntheticData, directory: str | Path) -> Path:
    """Write a dataset directory; identical datasets give byte-identical files.

    Args:
        data: Dataset to write
        directory: Target directory, created when missing

    Returns:
        Path: The directory
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.save(directory / "train_x.npy", data.train_x.astype(FLOAT))
    np.save(directory / "train_y.npy", data.train_y.astype(INT))
    np.save(directory / "outliers_x.npy", data.outlier_x.astype(FLOAT))
    for membership, test_set in data.test_sets.items():
        np.save(directory / _test_file(membership, "x"), test_set.x.astype(FLOAT))
        np.save(directory / _test_file(membership, "y"), test_set.labels.astype(INT))
    (directory / MANIFEST_FILE).write_text(data.manifest.to_json(), encoding="utf-8")
    (directory / HIERARCHY_FILE).write_text(emit_hierarchy_text(data.hierarchy), encoding="utf-8")
    if data.config is not None:
        (directory / SYNTH_CONFIG_FILE).write_text(data.config.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logfire.info("Dataset saved", directory=str(directory), test_sets=[m.value for m in data.test_sets])
    return directory


def _load_array(path: Path, dtype: type[np.float64] | type[np.int64]) -> np.ndarray:
    if not path.is_file():
        raise DatasetError(f"Dataset file {path} is missing")
    try:
        return np.load(path, allow_pickle=False).astype(dtype)
    except ValueError as e:
        raise DatasetError(f"Dataset file {path} is unreadable: {e}") from e


def load_dataset(directory: str | Path) -> SyntheticData:
    """Read a dataset directory written by ``save_dataset``.

    Raises:
        DatasetError: If a file is missing or unreadable, or the arrays disagree with the manifest
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"Dataset directory {directory} does not exist")
    try:
        manifest = SplitManifest.from_json((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
        hierarchy = parse_hierarchy((directory / HIERARCHY_FILE).read_text(encoding="utf-8"))
        config_path = directory / SYNTH_CONFIG_FILE
        config = None
        if config_path.is_file():
            config = SynthConfig.model_validate_json(config_path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise DatasetError(f"Dataset file {e.filename} is missing") from e
    except (ValidationError, HierarchyError) as e:
        raise DatasetError(f"Dataset metadata in {directory} is invalid: {e}") from e

    train_x = _load_array(directory / "train_x.npy", np.float64)
    train_y = _load_array(directory / "train_y.npy", np.int64)
    outlier_x = _load_array(directory / "outliers_x.npy", np.float64)
    test_sets = {
        membership: TestSet(
            x=_load_array(directory / _test_file(membership, "x"), np.float64),
            labels=_load_array(directory / _test_file(membership, "y"), np.int64),
        )
        for membership in Membership
        if (directory / _test_file(membership, "x")).is_file()
    }

    if train_x.ndim != 2 or len(train_x) != len(train_y):
        raise DatasetError(f"train_x {train_x.shape} and train_y {train_y.shape} do not line up")
    if train_y.size and (train_y.min() < 0 or train_y.max() >= manifest.num_classes):
        raise DatasetError(f"Training labels fall outside the manifest's {manifest.num_classes} classes")
    for membership, test_set in test_sets.items():
        if test_set.x.ndim != 2 or test_set.x.shape[1] != train_x.shape[1] or len(test_set) != len(test_set.labels):
            raise DatasetError(
                f"Test set {membership.value} has inputs {test_set.x.shape} and labels {test_set.labels.shape}"
            )
    if outlier_x.ndim != 2 or outlier_x.shape[1] != train_x.shape[1]:
        raise DatasetError(f"Outlier pool has shape {outlier_x.shape}, expected width {train_x.shape[1]}")

    logfire.info("Dataset loaded", directory=str(directory), train=len(train_x), num_classes=manifest.num_classes)
    return SyntheticData(
        hierarchy=hierarchy,
        manifest=manifest,
        train_x=train_x,
        train_y=train_y,
        test_sets=test_sets,
        outlier_x=outlier_x,
        config=config,
    )


def write_log(log: list[EpochLog], path: str | Path) -> Path:
    """Write a training log as JSON lines, one epoch per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(entry.model_dump_json() + "\n" for entry in log), encoding="utf-8")
    return path


def read_log(path: str | Path) -> list[EpochLog]:
    return [EpochLog.model_validate_json(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line]
