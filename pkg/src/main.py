"""Main CLI application for seizure-onset detection."""

import argparse
import csv
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn
from rich.table import Table

# Load environment variables from .env file
load_dotenv()

from .decoding import AmConfig, decode_filters, export_results
from .decoding.activation_maximization import filter_count
from .detectors import SeizNetDetector, create_detector, load_detector
from .eeg import AnnotationSet, SynthConfig, load_dataset, load_recording, save_dataset, synth_subject
from .evaluation import LosoEvaluator, RunResult, results_table, write_run_reports, write_summary_csv
from .evaluation.loso import base_policy
from .evaluation.reports import subject_table
from .evaluation.scoring import EpochPrediction, alarm_events
from .pipeline import EPOCH_LEN_S, EpochingAgent, Label, SignalProcessor, WindowingPolicy, class_counts, extract_epochs
from .utils.config import RunConfig, apply_overrides, load_config
from .utils.console import console, setup_logging
from .utils.errors import ChannelError, ConfigError, DecodingError, ToolkitError
from .utils.formatting import format_duration, parse_index_list, slugify


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

COMMANDS = ("synth", "train", "eval", "detect", "decode", "compare")


class SeizureToolkit:
    """Main application class tying data, detectors, evaluation and decoding together."""

    def __init__(self, config: Dict[str, Any]):
        """Initialize the toolkit.

        Args:
            config: Fully merged configuration (defaults, YAML, flags)
        """
        self.config = config
        self.run = RunConfig.from_config(config)
        self._dataset = []

    def _progress(self) -> Progress:
        return Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            console=console,
        )

    def _out(self, *parts: str) -> Path:
        path = self.run.output_dir.joinpath(*parts)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _load_dataset(self):
        dataset = load_dataset(self.run.dataset_root)
        total_s = sum(rec.duration_s for rec, _ in dataset)
        n_seizures = sum(len(ann) for _, ann in dataset)
        console.print(
            f"[green]✓[/green] Loaded [cyan]{len(dataset)}[/cyan] subjects "
            f"([cyan]{format_duration(total_s)}[/cyan], [cyan]{n_seizures}[/cyan] seizures)"
        )
        return dataset

    def synth(self) -> List[Path]:
        """Generate the synthetic dataset and write it under the data root."""
        cfg = SynthConfig(seed=self.run.seed, **self.config["synth"])
        dataset = []
        with self._progress() as progress:
            task = progress.add_task("[cyan]Synthesizing subjects...", total=cfg.n_subjects)
            for index in range(cfg.n_subjects):
                dataset.append(synth_subject(cfg, index))
                progress.update(task, advance=1)

        written = save_dataset(dataset, self.run.dataset_root)
        n_seizures = sum(len(ann) for _, ann in dataset)
        console.print(
            f"[green]✓[/green] Wrote [cyan]{len(written)}[/cyan] subjects with "
            f"[cyan]{n_seizures}[/cyan] seizures to [cyan]{self.run.dataset_root}[/cyan]"
        )
        return written

    def train(self) -> Path:
        """Train one model on every subject and save it with its history."""
        dataset = self._load_dataset()
        channels = self.run.channels
        n_channels = SignalProcessor.prepare(dataset[0][0], channels).n_channels
        detector = create_detector(self.run.method, n_channels, self.config, seed=self.run.seed)

        agent = EpochingAgent(detector.training_policy(base_policy(self.config)), channels)
        epochs = agent.epochs_for_all(dataset)
        counts = class_counts(epochs)
        console.print(
            f"[green]✓[/green] [cyan]{counts[Label.ICTAL]}[/cyan] ictal / "
            f"[cyan]{counts[Label.INTERICTAL]}[/cyan] interictal training epochs, "
            f"[cyan]{n_channels}[/cyan] channels"
        )

        if isinstance(detector, SeizNetDetector):
            console.print(self.architecture_table(detector))
            passes = detector.train_config.epochs
            with self._progress() as progress:
                task = progress.add_task("[cyan]Training SeizNet...", total=passes)
                detector.fit(epochs, on_epoch=lambda *_: progress.update(task, advance=1))
            history_path = self._out(f"{detector.name}_history.csv")
            self.save_history(detector, history_path)
            console.print(f"[green]✓[/green] History saved to: [cyan]{history_path}[/cyan]")
        else:
            with console.status("[cyan]Training BPsvm..."):
                detector.fit(epochs)

        model_path = self._out(f"{detector.name}_model.txt")
        detector.save(model_path)
        console.print(f"[green]✓[/green] Model saved to: [cyan]{model_path}[/cyan]")
        return model_path

    @staticmethod
    def architecture_table(detector: SeizNetDetector) -> Table:
        table = Table(title="SeizNet architecture")
        table.add_column("Layer", style="cyan")
        table.add_column("Type")
        table.add_column("Output", justify="right")
        table.add_column("Parameters", justify="right")
        for name, kind, shape, count in detector.model.layer_table():
            table.add_row(name, kind, " x ".join(str(s) for s in shape), f"{count:,}")
        trainable, non_trainable = detector.model.param_count()
        table.caption = (
            f"total {trainable + non_trainable:,} "
            f"(trainable {trainable:,}, non-trainable {non_trainable:,})"
        )
        return table

    @staticmethod
    def save_history(detector: SeizNetDetector, path: Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["epoch", "loss", "accuracy", "val_loss", "val_accuracy"])
            for row in detector.history.rows():
                writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])

    def _evaluate(self, method: str, channels, label: str) -> RunResult:
        evaluator = LosoEvaluator(self._dataset, method, channels, self.config)
        repeats = 1 if evaluator.deterministic else self.run.repeats
        with self._progress() as progress:
            task = progress.add_task(f"[cyan]{label} folds...", total=repeats * len(self._dataset))
            result = evaluator.run_repeats(repeats, self.run.seed,
                                           on_fold=lambda *_: progress.update(task, advance=1))
        if repeats > 1:
            console.print(f"[green]✓[/green] {label}: mode of [cyan]{repeats}[/cyan] runs")
        else:
            console.print(f"[green]✓[/green] {label}: single run")
        return result

    def evaluate(self) -> RunResult:
        """Leave-one-subject-out evaluation of the configured method."""
        self._dataset = self._load_dataset()
        method = self.run.method
        result = self._evaluate(method, self.run.channels, method)
        subjects_path, summary_path = write_run_reports(method, result, self.run.output_dir)

        console.print(results_table({method: result}))
        console.print(subject_table(result))
        console.print(f"[green]✓[/green] Reports saved to: [cyan]{subjects_path}[/cyan], [cyan]{summary_path}[/cyan]")
        return result

    def compare(self) -> Dict[str, RunResult]:
        """The four settings: each method with the 2-channel subset and with all channels."""
        self._dataset = self._load_dataset()
        subset = list(self.config["preprocessing"]["two_channel_subset"])
        settings = [
            ("BPsvm 2ch", "bpsvm", subset),
            ("SeizNet 2ch", "seiznet", subset),
            ("BPsvm all", "bpsvm", "all"),
            ("SeizNet all", "seiznet", "all"),
        ]
        columns = {}
        for label, method, channels in settings:
            columns[label] = self._evaluate(method, channels, label)
            write_run_reports(slugify(label), columns[label], self.run.output_dir)

        summary_path = self._out("compare_summary.csv")
        write_summary_csv(columns, summary_path)
        console.print(results_table(columns, title="Comparison"))
        console.print(f"[green]✓[/green] Comparison saved to: [cyan]{summary_path}[/cyan]")
        return columns

    def detect(self, model_path: str, recording_path: str) -> List[tuple]:
        """Flag a recording's 5-second tiles and group them into alarm events."""
        detector = load_detector(model_path, threshold=self.config["evaluation"]["threshold"])
        rec = load_recording(recording_path)
        detections_path = self._out("detections.csv")

        events: List[tuple] = []
        rows = []
        if rec.duration_s < EPOCH_LEN_S:
            console.print(
                f"[yellow]⚠ Recording is {rec.duration_s:.2f} s, shorter than one "
                f"{EPOCH_LEN_S:g} s epoch; no detections[/yellow]"
            )
        else:
            prepared = SignalProcessor.prepare(rec, self.run.channels)
            if prepared.n_channels != detector.n_channels:
                raise ChannelError(
                    f"Model expects {detector.n_channels} channels, recording provides "
                    f"{prepared.n_channels} ({', '.join(prepared.channel_names)})"
                )
            epochs = extract_epochs(prepared, AnnotationSet(), WindowingPolicy(mode="eval"))
            scores = detector.decision(epochs)
            flags = detector.is_ictal(scores)
            preds = [EpochPrediction(e.start_s, e.end_s, bool(f)) for e, f in zip(epochs, flags)]
            events = alarm_events(preds)
            rows = [(p.start_s, p.end_s, float(s), p.flagged) for p, s in zip(preds, scores)]

        with open(detections_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["event", "start_s", "end_s", "n_epochs"])
            for idx, (start, end) in enumerate(events, start=1):
                writer.writerow([idx, f"{start:g}", f"{end:g}", int(round((end - start) / EPOCH_LEN_S))])

        with open(self._out("detection_epochs.csv"), "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["start_s", "end_s", "score", "flagged"])
            for start, end, score, flagged in rows:
                writer.writerow([f"{start:g}", f"{end:g}", repr(score), int(flagged)])

        console.print(
            f"[green]✓[/green] [cyan]{len(events)}[/cyan] alarm events saved to: [cyan]{detections_path}[/cyan]"
        )
        return events

    def _decode_channel_names(self, n_channels: int) -> List[str]:
        """Plot labels from --channels; "all" leaves the generic ch1..chN labels."""
        channels = self.run.channels
        if channels == "all":
            return []
        if len(channels) != n_channels:
            raise ChannelError(f"Model has {n_channels} input channels, --channels names {len(channels)}")
        return list(channels)

    def decode(self, model_path: str) -> list:
        """Activation maximization for the configured layer and filters."""
        detector = load_detector(model_path)
        if not isinstance(detector, SeizNetDetector):
            raise DecodingError("decode needs a SeizNet weights file, got an SVM model")
        model = detector.model
        channel_names = self._decode_channel_names(model.input_shape[0])

        section = self.config["decoding"]
        base = AmConfig(
            layer_index=int(section["layer"]),
            filter_index=0,
            steps=int(section["steps"]),
            step_size=float(section["step_size"]),
            tv_weight=float(section["tv_weight"]),
            lp_weight=float(section["lp_weight"]),
            lp_p=float(section["lp_p"]),
            input_range=tuple(section["input_range"]),
            seed=self.run.seed,
        )
        filters = parse_index_list(section["filters"])
        total = filter_count(model, base.layer_index) if filters is None else len(filters)

        with self._progress() as progress:
            task = progress.add_task(f"[cyan]Decoding layer {base.layer_index}...", total=total)
            results = decode_filters(model, base, filters, on_filter=lambda _: progress.update(task, advance=1))

        out_dir = self.run.output_dir / "decode"
        paths = export_results(results, out_dir, plots=bool(self.config["output"]["plots"]),
                               channel_names=channel_names)
        console.print(f"[green]✓[/green] [cyan]{len(paths)}[/cyan] patterns saved to: [cyan]{out_dir}[/cyan]")
        return results


class ToolkitArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return number


def build_parser() -> ToolkitArgumentParser:
    common = ToolkitArgumentParser(add_help=False)
    common.add_argument("--data", help="Dataset root (one directory per subject)")
    common.add_argument("--channels", help='Comma list of channel names or "all"')
    common.add_argument("--method", choices=["seiznet", "bpsvm"], help="Detector (default: seiznet)")
    common.add_argument("--seed", type=int, help="Run seed")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--config", help="YAML manifest; flat keys mirror the long flags")
    common.add_argument("-v", "--verbose", action="store_true", help="Log progress details")

    training = ToolkitArgumentParser(add_help=False)
    training.add_argument("--epochs", type=positive_int, help="SeizNet training passes")
    training.add_argument("--lr", type=float, help="Adam learning rate")
    training.add_argument("--batch-size", dest="batch_size", type=positive_int, help="Mini-batch size")
    training.add_argument("--validation-fraction", dest="validation_fraction", type=float,
                          help="Held-out share of training epochs, monitored only")
    training.add_argument("--C", dest="C", type=float, help="SVM box constraint")
    training.add_argument("--gamma", type=float, help="SVM RBF width")

    parser = ToolkitArgumentParser(
        prog="python -m src.main",
        description="Seizure-onset detection with SeizNet and a band-power SVM baseline",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthetic dataset
  python -m src.main synth --subjects 6 --seed 7 --data data

  # Train SeizNet on two channels
  python -m src.main train --data data --channels C3,C4 --out runs

  # Leave-one-subject-out evaluation, mode of 10 runs
  python -m src.main eval --data data --method seiznet --repeats 10

  # Flag a recording with a trained model
  python -m src.main detect --model runs/seiznet_model.txt --recording data/S01/recording.csv

  # Decode every conv-4 filter
  python -m src.main decode --model runs/seiznet_model.txt --layer 4 --filters all
        """,
    )
    commands = parser.add_subparsers(dest="command", metavar="command")

    synth = commands.add_parser("synth", parents=[common], help="Write a synthetic dataset")
    synth.add_argument("--subjects", type=positive_int, help="Number of subjects")
    synth.add_argument("--duration", type=float, help="Seconds per recording")
    synth.add_argument("--n-channels", dest="n_channels", type=positive_int, help="Channels per recording")

    commands.add_parser("train", parents=[common, training], help="Train a model on every subject")

    for name, help_text in (("eval", "Leave-one-subject-out evaluation"),
                            ("compare", "Evaluate both methods on 2 and all channels")):
        sub = commands.add_parser(name, parents=[common, training], help=help_text)
        sub.add_argument("--repeats", type=positive_int, help="Runs whose mode is reported")
        sub.add_argument("--threshold", type=float, help="Ictal probability threshold")

    detect = commands.add_parser("detect", parents=[common], help="Flag seizures in a recording")
    detect.add_argument("--model", required=True, help="Weights or SVM model file")
    detect.add_argument("--recording", required=True, help="Recording CSV")
    detect.add_argument("--threshold", type=float, help="Ictal probability threshold")

    decode = commands.add_parser("decode", parents=[common], help="Activation maximization of filters")
    decode.add_argument("--model", required=True, help="SeizNet weights file")
    decode.add_argument("--layer", type=int, help="Conv block 1-4, or 5 for the output units")
    decode.add_argument("--filters", help='"all" or a comma list of filter indices')
    decode.add_argument("--steps", type=positive_int, help="Ascent steps")
    decode.add_argument("--step-size", dest="step_size", type=float, help="Step length")
    decode.add_argument("--tv-weight", dest="tv_weight", type=float, help="Total-variation weight")
    decode.add_argument("--lp-weight", dest="lp_weight", type=float, help="Lp-norm weight")
    decode.add_argument("--no-plots", dest="plots", action="store_const", const=False, help="Skip SVG plots")

    return parser


def run_command(args: argparse.Namespace) -> None:
    config = apply_overrides(load_config(args.config), vars(args))
    app = SeizureToolkit(config)
    if args.command == "synth":
        app.synth()
    elif args.command == "train":
        app.train()
    elif args.command == "eval":
        app.evaluate()
    elif args.command == "compare":
        app.compare()
    elif args.command == "detect":
        app.detect(args.model, args.recording)
    elif args.command == "decode":
        app.decode(args.model)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error(f"a command is required ({', '.join(COMMANDS)})")

    setup_logging("INFO" if args.verbose else None)

    console.print(Panel.fit(
        "[bold cyan]SeizNet Seizure Detection[/bold cyan]\n"
        f"[dim]{args.command}[/dim]",
        border_style="cyan"
    ))

    try:
        run_command(args)
    except KeyboardInterrupt:
        console.print("\n[yellow]⚠ Cancelled by user[/yellow]")
        return EXIT_USAGE
    except ConfigError as e:
        console.print(f"[red]❌ Usage error: {e}[/red]")
        return EXIT_USAGE
    except ToolkitError as e:
        console.print(f"[red]❌ {type(e).__name__}: {e}[/red]")
        return EXIT_DATA
    except OSError as e:
        console.print(f"[red]❌ I/O error: {e}[/red]")
        return EXIT_DATA

    console.print("[green]✓ Done[/green]")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
