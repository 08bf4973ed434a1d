"""Recording and annotation file ingestion and serialization.

Recording CSV: line 1 ``#subject=<id>,fs=<hz>,channels=<a|b|...>``, then one
sample instant per row with comma-separated channel values. Annotation CSV:
header ``onset_s,offset_s`` and one interval per row.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from ..utils.errors import AnnotationError, IngestionError
from .recording import INGEST_RATES_HZ, AnnotationSet, Recording


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

ANNOTATION_HEADER = "onset_s,offset_s"
RECORDING_FILE = "recording.csv"
SEIZURES_FILE = "seizures.csv"
VALUE_FORMAT = "%.10g"


def _parse_header(line: str, path: str) -> Tuple[str, float, List[str]]:
    if not line.startswith("#"):
        raise IngestionError("header must start with '#subject='", path, 1)

    fields = {}
    for part in line[1:].strip().split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise IngestionError(f"malformed header field '{part}'", path, 1)
        fields[key.strip()] = value.strip()

    missing = [k for k in ("subject", "fs", "channels") if k not in fields]
    if missing:
        raise IngestionError(f"header is missing {', '.join(missing)}", path, 1)

    try:
        fs_hz = float(fields["fs"])
    except ValueError:
        raise IngestionError(f"sampling rate '{fields['fs']}' is not a number", path, 1)
    if fs_hz not in INGEST_RATES_HZ:
        raise IngestionError(
            f"sampling rate {fields['fs']} Hz not supported (expected 200 or 500)", path, 1
        )

    channels = [c for c in fields["channels"].split("|") if c]
    if not channels:
        raise IngestionError("header declares no channels", path, 1)

    return fields["subject"], fs_hz, channels


def _locate_bad_row(lines: List[str], n_channels: int, path: str) -> None:
    for offset, row in enumerate(lines):
        line_no = offset + 2
        cells = row.strip().split(",")
        if len(cells) != n_channels:
            raise IngestionError(
                f"row has {len(cells)} values, header declares {n_channels} channels", path, line_no
            )
        for cell in cells:
            try:
                value = float(cell)
            except ValueError:
                raise IngestionError(f"non-numeric cell '{cell}'", path, line_no)
            if not np.isfinite(value):
                raise IngestionError(f"non-finite cell '{cell}'", path, line_no)


def load_recording(path: PathLike) -> Recording:
    """Read a recording CSV.

    Args:
        path: Recording file

    Returns:
        Recording with samples in file order

    Raises:
        IngestionError: Malformed header, ragged row, non-numeric cell or
            unsupported sampling rate; the message names the line
    """
    path_str = str(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise IngestionError(f"cannot read file: {e}", path_str)

    lines = text.splitlines()
    if not lines:
        raise IngestionError("file is empty", path_str, 1)

    subject_id, fs_hz, channels = _parse_header(lines[0], path_str)
    rows = [row for row in lines[1:] if row.strip()]
    if not rows:
        raise IngestionError("recording has no samples", path_str, 2)

    try:
        data = np.loadtxt(rows, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError:
        data = None
    if data is None or data.shape[1] != len(channels) or not np.all(np.isfinite(data)):
        _locate_bad_row(rows, len(channels), path_str)
        raise IngestionError("unreadable sample rows", path_str)

    logger.debug("Loaded %s: %d channels x %d samples", path_str, data.shape[1], data.shape[0])
    return Recording(subject_id=subject_id, fs_hz=fs_hz, channel_names=channels, samples=data.T)


def save_recording(rec: Recording, path: PathLike) -> None:
    """Write a recording CSV that load_recording reads back.

    Args:
        rec: Recording to write
        path: Output file; parent directories are created
    """
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = f"#subject={rec.subject_id},fs={rec.fs_hz:g},channels={'|'.join(rec.channel_names)}"
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        np.savetxt(f, rec.samples.T, fmt=VALUE_FORMAT, delimiter=",")


def load_annotations(path: PathLike, duration_s: Optional[float] = None) -> AnnotationSet:
    """Read a seizure annotation CSV.

    Args:
        path: Annotation file
        duration_s: Recording duration for range validation, if known

    Returns:
        Sorted, validated AnnotationSet (empty for an empty file)

    Raises:
        IngestionError: Unparseable row
        AnnotationError: Overlap, inversion or out-of-range interval
    """
    path_str = str(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise IngestionError(f"cannot read file: {e}", path_str)

    intervals = []
    for idx, line in enumerate(lines):
        row = line.strip()
        if not row:
            continue
        if idx == 0 and row.replace(" ", "") == ANNOTATION_HEADER:
            continue
        cells = row.split(",")
        if len(cells) != 2:
            raise IngestionError(f"expected onset_s,offset_s, got '{row}'", path_str, idx + 1)
        try:
            onset, offset = float(cells[0]), float(cells[1])
        except ValueError:
            raise IngestionError(f"non-numeric interval '{row}'", path_str, idx + 1)
        if not (np.isfinite(onset) and np.isfinite(offset)):
            raise IngestionError(f"non-finite interval '{row}'", path_str, idx + 1)
        intervals.append((onset, offset))

    try:
        return AnnotationSet.from_intervals(intervals, duration_s)
    except AnnotationError as e:
        raise AnnotationError(f"{path_str}: {e}")


def save_annotations(annotations: AnnotationSet, path: PathLike) -> None:
    """Write an annotation CSV."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(ANNOTATION_HEADER + "\n")
        for onset, offset in annotations:
            f.write(f"{VALUE_FORMAT % onset},{VALUE_FORMAT % offset}\n")


def save_dataset(dataset: List[Tuple[Recording, AnnotationSet]], root: PathLike) -> List[Path]:
    """Write ``<root>/<subject_id>/{recording,seizures}.csv`` for every subject.

    Returns:
        Subject directories written, in dataset order
    """
    written = []
    for rec, annotations in dataset:
        subject_dir = Path(root) / rec.subject_id
        save_recording(rec, subject_dir / RECORDING_FILE)
        save_annotations(annotations, subject_dir / SEIZURES_FILE)
        written.append(subject_dir)
    return written


def load_dataset(root: PathLike) -> List[Tuple[Recording, AnnotationSet]]:
    """Read every subject directory under root, sorted by directory name.

    Raises:
        IngestionError: Root missing or without subject directories
    """
    root_path = Path(root)
    if not root_path.is_dir():
        raise IngestionError("dataset root does not exist", str(root_path))

    subject_dirs = sorted(p for p in root_path.iterdir() if (p / RECORDING_FILE).exists())
    if not subject_dirs:
        raise IngestionError(f"no <subject>/{RECORDING_FILE} found", str(root_path))

    dataset = []
    for subject_dir in subject_dirs:
        rec = load_recording(subject_dir / RECORDING_FILE)
        seizures_path = subject_dir / SEIZURES_FILE
        if seizures_path.exists():
            annotations = load_annotations(seizures_path, rec.duration_s)
        else:
            logger.warning("%s has no %s; treating as seizure-free", subject_dir.name, SEIZURES_FILE)
            annotations = AnnotationSet()
        dataset.append((rec, annotations))
    return dataset
