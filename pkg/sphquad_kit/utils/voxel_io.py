import csv
import logging
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from sphquad_kit.errors import MaterialError, VolumeFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

Material = Tuple[float, float, float]


def read_volume_header(path: PathLike) -> Tuple[Tuple[int, int, int], float, Path]:
    """
    Parse a volume header with `dims nx ny nz`, `spacing h` and `data file`
    lines. The data path is resolved relative to the header.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise VolumeFormatError(f"cannot read {path}: {e}")
    entries = {}
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        entries[key] = value.strip()
    missing = [k for k in ("dims", "spacing", "data") if k not in entries]
    if missing:
        raise VolumeFormatError(f"{path}: missing {', '.join(missing)}")
    try:
        dims = tuple(int(v) for v in entries["dims"].split())
        spacing = float(entries["spacing"])
    except ValueError:
        raise VolumeFormatError(f"{path}: malformed dims or spacing")
    if len(dims) != 3 or any(n < 1 for n in dims):
        raise VolumeFormatError(f"{path}: dims must be three positive integers")
    if spacing <= 0.0:
        raise VolumeFormatError(f"{path}: spacing must be positive")
    return dims, spacing, path.parent / entries["data"]


def read_labels(path: PathLike) -> Tuple[np.ndarray, float]:
    """Label volume as a (nx, ny, nz) uint8 array; the raw file is x-fastest."""
    dims, spacing, data_path = read_volume_header(path)
    try:
        raw = np.fromfile(data_path, dtype=np.uint8)
    except OSError as e:
        raise VolumeFormatError(f"cannot read {data_path}: {e}")
    expected = dims[0] * dims[1] * dims[2]
    if raw.size != expected:
        raise VolumeFormatError(f"{data_path}: {raw.size} voxels, dims announce {expected}")
    return raw.reshape(dims, order="F"), spacing


def write_labels(labels: np.ndarray, spacing: float, header_path: PathLike) -> None:
    header_path = Path(header_path)
    data_path = header_path.with_suffix(".raw")
    np.asarray(labels, dtype=np.uint8).ravel(order="F").tofile(data_path)
    nx, ny, nz = labels.shape
    header_path.write_text(f"dims {nx} {ny} {nz}\nspacing {spacing!r}\ndata {data_path.name}\n")


def read_material_table(path: PathLike) -> Dict[int, Material]:
    """
    Read `label,mu_a,mu_s,g` rows.

    Raises:
        VolumeFormatError: On unreadable files or malformed rows.
        MaterialError: On non-positive mu_a, negative mu_s or |g| >= 1.
    """
    table: Dict[int, Material] = {}
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"label", "mu_a", "mu_s", "g"} <= set(reader.fieldnames):
                raise VolumeFormatError(f"{path}: expected columns label,mu_a,mu_s,g")
            for number, row in enumerate(reader, start=2):
                try:
                    label = int(row["label"])
                    mu_a, mu_s, g = float(row["mu_a"]), float(row["mu_s"]), float(row["g"])
                except (TypeError, ValueError):
                    raise VolumeFormatError(f"{path}:{number}: malformed row")
                if mu_a <= 0.0:
                    raise MaterialError(f"{path}:{number}: non-positive mu_a for label {label}")
                if mu_s < 0.0:
                    raise MaterialError(f"{path}:{number}: negative mu_s for label {label}")
                if not -1.0 < g < 1.0:
                    raise MaterialError(f"{path}:{number}: g outside (-1, 1) for label {label}")
                table[label] = (mu_a, mu_s, g)
    except OSError as e:
        raise VolumeFormatError(f"cannot read {path}: {e}")
    return table


def write_fluence(fluence: np.ndarray, spacing: float, header_path: PathLike) -> None:
    """Float64 raw volume, x-fastest, plus a header naming it."""
    header_path = Path(header_path)
    data_path = header_path.with_suffix(".raw")
    np.asarray(fluence, dtype="<f8").ravel(order="F").tofile(data_path)
    nx, ny, nz = fluence.shape
    header_path.write_text(
        f"dims {nx} {ny} {nz}\nspacing {spacing!r}\ndata {data_path.name}\ntype float64-le\n"
    )
    logger.info(f"Wrote fluence volume to {data_path}")


def read_fluence(header_path: PathLike) -> np.ndarray:
    dims, _, data_path = read_volume_header(header_path)
    raw = np.fromfile(data_path, dtype="<f8")
    if raw.size != dims[0] * dims[1] * dims[2]:
        raise VolumeFormatError(f"{data_path}: size does not match header")
    return raw.reshape(dims, order="F")
