"""File formats: images in and NPY/JSON/CSV artifacts out.

Array artifacts are NPY version 1.0 in single precision. Tensor files
carry a JSON sidecar with the scheduling context; trajectory stacks
carry a ``.steps.json`` sidecar listing the per-frame timestep labels,
since the stack format itself stores none.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

import numpy as np
from PIL import Image

from tss.freq_analysis import Trajectory
from tss.schedule_core import Schedule, ScheduleKind
from tss.spatial_schedule import ProjectionBounds, SpatialScheduleMap

_FRAME_NAME = re.compile(r"^frame_(\d+)\.png$")


def load_image(path: str | Path) -> np.ndarray:
    """Read a PNG, PGM, or PPM image as floats in [0, 1].

    Grayscale files load as (H, W), color files as (H, W, 3); palette
    and alpha variants are flattened to RGB.
    """
    with Image.open(path) as img:
        mode = img.mode
        if mode in ("1", "L"):
            arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        elif mode in ("I", "I;16"):
            arr = np.asarray(img, dtype=np.float64) / 65535.0
        elif mode == "RGB":
            arr = np.asarray(img, dtype=np.float64) / 255.0
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    return np.clip(arr, 0.0, 1.0)


def save_image_png(path: str | Path, arr: np.ndarray) -> None:
    """Write floats in [0, 1] as an 8-bit PNG (gray or RGB by shape)."""
    data = np.asarray(arr, dtype=np.float64)
    if data.ndim not in (2, 3):
        raise ValueError("expected a 2-D or 3-D array")
    scaled = np.floor(np.clip(data, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(scaled).save(path, format="PNG")


def npy_bytes(arr: np.ndarray, dtype=np.float32) -> bytes:
    """Serialize an array as NPY v1.0 bytes in the given precision."""
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(np.asarray(arr).astype(dtype)))
    return buf.getvalue()


def save_npy(path: str | Path, arr: np.ndarray, dtype=np.float32) -> None:
    Path(path).write_bytes(npy_bytes(arr, dtype))


def load_npy(path: str | Path) -> np.ndarray:
    return np.load(path, allow_pickle=False)


def save_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path: str | Path):
    return json.loads(Path(path).read_text())


def write_schedule_json(schedule: Schedule, path: str | Path) -> None:
    save_json(path, schedule.to_dict())


def write_schedule_csv(schedule: Schedule, path: str | Path) -> None:
    """Columns index, step_real, step_int with a 1-based index."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "step_real", "step_int"])
        for i, (real, quant) in enumerate(
            zip(schedule.steps, schedule.quantized_steps), start=1
        ):
            writer.writerow([i, repr(float(real)), int(quant)])


def _sidecar_path(npy_path: Path) -> Path:
    return npy_path.with_suffix(".json")


def save_spatial(smap: SpatialScheduleMap, npy_path: str | Path) -> None:
    """Write the (H, W, T_prime) tensor plus its JSON sidecar."""
    npy_path = Path(npy_path)
    save_npy(npy_path, smap.data, dtype=np.float32)
    sidecar = {
        "T": smap.total_train_steps,
        "T_prime": smap.steps_per_pixel,
        "bounds": smap.bounds.to_dict(),
        "kind": smap.kind.value,
    }
    save_json(_sidecar_path(npy_path), sidecar)


def load_spatial(npy_path: str | Path) -> SpatialScheduleMap:
    npy_path = Path(npy_path)
    data = load_npy(npy_path).astype(np.float64)
    meta = load_json(_sidecar_path(npy_path))
    bounds = ProjectionBounds(**meta["bounds"])
    smap = SpatialScheduleMap(data, int(meta["T"]), bounds, ScheduleKind(meta["kind"]))
    if smap.steps_per_pixel != int(meta["T_prime"]):
        raise ValueError("sidecar T_prime does not match the tensor shape")
    return smap


def _steps_sidecar(npy_path: Path) -> Path:
    return npy_path.with_name(npy_path.stem + ".steps.json")


def save_trajectory(traj: Trajectory, npy_path: str | Path) -> None:
    """Write frames as an (N, H, W) stack plus the steps sidecar."""
    npy_path = Path(npy_path)
    save_npy(npy_path, traj.frames, dtype=np.float32)
    save_json(_steps_sidecar(npy_path), {"steps": list(traj.steps)})


def load_trajectory(path: str | Path, steps_file: str | Path | None = None) -> Trajectory:
    """Load frames from a ``frame_<t>.png`` directory or an NPY stack.

    Stacks take their timestep labels from ``steps_file`` when given,
    otherwise from the ``<stem>.steps.json`` sidecar next to the stack.
    """
    path = Path(path)
    if path.is_dir():
        return _load_frame_dir(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file or directory: {path}")
    data = load_npy(path).astype(np.float64)
    if data.ndim != 3:
        raise ValueError(f"expected an (N, H, W) stack, got shape {data.shape}")
    sidecar = Path(steps_file) if steps_file is not None else _steps_sidecar(path)
    if not sidecar.exists():
        raise FileNotFoundError(
            f"stack {path.name} needs a steps sidecar ({sidecar.name}) "
            "listing one timestep label per frame"
        )
    payload = load_json(sidecar)
    if not isinstance(payload, dict) or not isinstance(payload.get("steps"), list):
        raise ValueError(
            f"{sidecar.name} must be a JSON object with a 'steps' list"
        )
    return Trajectory(data, tuple(int(s) for s in payload["steps"]))


def _load_frame_dir(dirpath: Path) -> Trajectory:
    found = []
    for entry in dirpath.iterdir():
        m = _FRAME_NAME.match(entry.name)
        if m:
            found.append((int(m.group(1)), entry))
    if len(found) < 2:
        raise ValueError(
            f"{dirpath} holds {len(found)} frame_<timestep>.png file(s); need at least 2"
        )
    found.sort(key=lambda item: -item[0])
    frames = []
    shape = None
    for _, entry in found:
        img = load_image(entry)
        if img.ndim == 3:
            raise ValueError(f"{entry.name}: trajectory frames must be grayscale")
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise ValueError("trajectory frames differ in size")
        frames.append(img)
    return Trajectory(np.stack(frames), tuple(step for step, _ in found))


def write_rows_csv(path: str | Path, fieldnames: list[str], rows: list[dict]) -> None:
    """Write report rows with floats rendered to full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
            )
