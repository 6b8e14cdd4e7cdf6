"""
storage/local_storage.py
Handles all read/write operations of the experiment harness on the local
filesystem.

Directory layout of a dataset (written by the synthetic generator):
  <root>/
    train.tsv, test.tsv               relative_path<TAB>label_name, one cloud per line
    clouds/<label>/<id>.txt           one point per line, "x y z"

Directory layout of a run:
  <out_dir>/
    config.json                       effective experiment config
    metrics_seed<N>.csv               epoch,lr,train_loss,train_acc,test_acc,epoch_time_s
    params_seed<N>.stagw              tunable parameters (STAGW1)
    summary.csv / summary.parquet     mean and per-seed accuracy
    cost.csv / cost.txt               efficiency comparison
"""

import json
import logging
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from errors import DataError, DatasetParseError, ParamFileError
from geometry.pointcloud import CloudDataset, PointCloud, normalize_cloud

logger = logging.getLogger(__name__)

CLOUD_FORMAT = "%.9f"
FLOAT_FORMAT = "%.8g"

PARAM_MAGIC = b"STAGW1"
PRECISION_FLAGS = {"single": 0, "double": 1}
_FLAG_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Cloud files
# ---------------------------------------------------------------------------

def write_cloud(path: Path, points: np.ndarray) -> Path:
    path = _ensure_parent(path)
    np.savetxt(path, np.asarray(points, dtype=np.float64), fmt=CLOUD_FORMAT, delimiter=" ", newline="\n")
    return path


def _read_text(path: Path, what: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise DatasetParseError(path, None, "not UTF-8") from None
    except OSError as exc:
        raise OSError(f"cannot read {what} {path}: {exc.strerror or exc}") from exc


def read_cloud(path: Path) -> np.ndarray:
    """Parse a cloud file; a malformed line raises DatasetParseError with its line number."""
    path = Path(path)
    text = _read_text(path, "cloud file")

    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 3:
            raise DatasetParseError(path, lineno, f"expected 3 fields, got {len(fields)}")
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise DatasetParseError(path, lineno, f"non-numeric field in {line!r}") from None
        if not np.isfinite(row).all():
            raise DatasetParseError(path, lineno, f"non-finite coordinate in {line!r}")
        rows.append(row)
    if not rows:
        raise DatasetParseError(path, None, "no points")
    return np.array(rows, dtype=np.float64)


# ---------------------------------------------------------------------------
# Manifests and datasets
# ---------------------------------------------------------------------------

def write_manifest(path: Path, entries: Iterable[tuple[str, str]]) -> Path:
    path = _ensure_parent(path)
    df = pd.DataFrame(list(entries), columns=["relative_path", "label_name"])
    df.to_csv(path, sep="\t", header=False, index=False, lineterminator="\n")
    logger.info("[STORAGE] manifest %-12s | %d entries → %s", path.name, len(df), path)
    return path


def read_manifest(path: Path) -> pd.DataFrame:
    path = Path(path)
    text = _read_text(path, "manifest")

    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise DatasetParseError(path, lineno, "expected relative_path<TAB>label_name")
        rows.append(fields)
    return pd.DataFrame(rows, columns=["relative_path", "label_name"])


def label_map_for(*manifests: pd.DataFrame) -> dict[str, int]:
    """Label indices in lexicographic label-name order, shared by every manifest given."""
    names = sorted(set().union(*(set(m["label_name"]) for m in manifests)))
    return {name: index for index, name in enumerate(names)}


def load_dataset(manifest_path: Path, label_map: Optional[dict[str, int]] = None) -> CloudDataset:
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    if label_map is None:
        label_map = label_map_for(manifest)
    root = manifest_path.parent

    clouds = []
    for rel, label in manifest.itertuples(index=False):
        if label not in label_map:
            raise DataError(f"{manifest_path}: label {label!r} missing from the label map")
        points = read_cloud(root / rel)
        clouds.append(normalize_cloud(PointCloud(points=points, label=label_map[label], source_id=rel)))

    names = [name for name, _ in sorted(label_map.items(), key=lambda kv: kv[1])]
    logger.info("[DATA] %-12s | %d clouds, %d classes", manifest_path.name, len(clouds), len(names))
    return CloudDataset(clouds=clouds, label_names=names)


def load_splits(train_manifest: Path, test_manifest: Path) -> tuple[CloudDataset, CloudDataset]:
    label_map = label_map_for(read_manifest(train_manifest), read_manifest(test_manifest))
    return load_dataset(train_manifest, label_map), load_dataset(test_manifest, label_map)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def save_table(df: pd.DataFrame, path: Path, parquet: bool = False) -> Path:
    """CSV with a fixed float format; optionally a Parquet snapshot next to it."""
    path = _ensure_parent(path)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if parquet:
        df.to_parquet(path.with_suffix(".parquet"), index=False, engine="pyarrow")
    logger.info("[STORAGE] %-22s | %d rows → %s", path.name, len(df), path)
    return path


def read_table(path: Path) -> pd.DataFrame:
    path = Path(path)
    if path.suffix == ".parquet":
        return pd.read_parquet(path, engine="pyarrow")
    return pd.read_csv(path)


def save_text(text: str, path: Path) -> Path:
    path = _ensure_parent(path)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def save_json(obj: dict, path: Path) -> Path:
    path = _ensure_parent(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


# ---------------------------------------------------------------------------
# Parameter files (STAGW1)
#   magic "STAGW1" | uint8 precision flag | uint32 record count
#   per record: uint32 name length | name (utf-8) | uint32 rows | uint32 cols | rows·cols values
#   all little-endian
# ---------------------------------------------------------------------------

def _u32(value: int) -> bytes:
    return np.array([value], dtype="<u4").tobytes()


def save_params(path: Path, state: dict[str, np.ndarray], precision: str = "single") -> Path:
    if precision not in PRECISION_FLAGS:
        raise ParamFileError(f"unknown precision {precision!r}")
    flag = PRECISION_FLAGS[precision]
    dtype = _FLAG_DTYPES[flag]
    path = _ensure_parent(path)

    chunks = [PARAM_MAGIC, bytes([flag]), _u32(len(state))]
    for name, value in state.items():
        value = np.asarray(value)
        matrix = value.reshape(1, -1) if value.ndim < 2 else value.reshape(value.shape[0], -1)
        encoded = name.encode("utf-8")
        chunks += [_u32(len(encoded)), encoded, _u32(matrix.shape[0]), _u32(matrix.shape[1])]
        chunks.append(np.ascontiguousarray(matrix, dtype=dtype).tobytes())
    path.write_bytes(b"".join(chunks))
    logger.info("[STORAGE] params | %d tensor(s) → %s", len(state), path)
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise ParamFileError(f"{self.path}: truncated at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def u32(self) -> int:
        return int(np.frombuffer(self.take(4), dtype="<u4")[0])


def load_params(path: Path) -> dict[str, np.ndarray]:
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    if reader.take(len(PARAM_MAGIC)) != PARAM_MAGIC:
        raise ParamFileError(f"{path}: not a STAGW1 parameter file")
    flag = reader.take(1)[0]
    if flag not in _FLAG_DTYPES:
        raise ParamFileError(f"{path}: unknown precision flag {flag}")
    dtype = _FLAG_DTYPES[flag]

    state: dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        rows, cols = reader.u32(), reader.u32()
        values = np.frombuffer(reader.take(rows * cols * dtype.itemsize), dtype=dtype)
        state[name] = values.reshape(rows, cols).astype(dtype.newbyteorder("="))
    if reader.pos != len(reader.data):
        raise ParamFileError(f"{path}: {len(reader.data) - reader.pos} trailing byte(s)")
    return state
