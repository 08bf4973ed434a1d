"""Pattern dumps: CSV per filter, a summary CSV and monochrome SVG plots."""

import csv
from pathlib import Path
from typing import List, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..eeg.recording import TARGET_RATE_HZ  # noqa: E402
from .activation_maximization import AmResult  # noqa: E402


SUMMARY_COLUMNS = ["layer", "filter", "activation", "dominant_hz"]

# Fixed SVG ids and no date stamp keep reruns byte-identical; labels stay as text.
matplotlib.rcParams["svg.hashsalt"] = "seiznet-decode"
matplotlib.rcParams["svg.fonttype"] = "none"


def pattern_stem(result: AmResult) -> str:
    return f"layer{result.layer_index}_filter{result.filter_index:02d}"


def save_pattern_csv(result: AmResult, path: Union[str, Path]) -> None:
    """One row per channel, one column per sample."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(out, result.pattern, delimiter=",", fmt="%.10g")


def write_am_summary(results: Sequence[AmResult], path: Union[str, Path]) -> None:
    """``layer,filter,activation,dominant_hz``; dominant_hz lists every channel separated by ``|``."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for result in results:
            hz = "|".join(f"{v:g}" for v in result.dominant_hz)
            writer.writerow([result.layer_index, result.filter_index, repr(result.activation), hz])


def plot_pattern_svg(result: AmResult, path: Union[str, Path],
                     channel_names: Sequence[str] = (), fs: float = TARGET_RATE_HZ) -> None:
    """Line plot of every channel of the pattern, stacked vertically."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    n_channels, n_samples = result.pattern.shape
    t = np.arange(n_samples) / fs

    fig, axes = plt.subplots(n_channels, 1, figsize=(8, 1.2 + 1.1 * n_channels), sharex=True, squeeze=False)
    for ch, ax in enumerate(axes[:, 0]):
        ax.plot(t, result.pattern[ch], color="black", linewidth=0.6)
        label = channel_names[ch] if ch < len(channel_names) else f"ch{ch + 1}"
        ax.set_ylabel(label)
    axes[-1, 0].set_xlabel("Time (s)")
    axes[0, 0].set_title(
        f"Layer {result.layer_index} filter {result.filter_index} "
        f"(activation {result.activation:.3f}, {result.dominant_hz[0]:.1f} Hz)"
    )
    fig.tight_layout()
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)


def export_results(results: Sequence[AmResult], out_dir: Union[str, Path], plots: bool = True,
                   channel_names: Sequence[str] = ()) -> List[Path]:
    """Write every pattern CSV (and SVG), plus ``am_summary.csv``; returns the pattern CSV paths."""
    root = Path(out_dir)
    paths = []
    for result in results:
        csv_path = root / f"{pattern_stem(result)}.csv"
        save_pattern_csv(result, csv_path)
        paths.append(csv_path)
        if plots:
            plot_pattern_svg(result, root / f"{pattern_stem(result)}.svg", channel_names)
    write_am_summary(results, root / "am_summary.csv")
    return paths
