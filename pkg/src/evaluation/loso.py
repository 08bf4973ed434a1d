"""Leave-one-subject-out orchestration and repeated runs."""

import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..detectors import create_detector
from ..eeg.recording import AnnotationSet, Recording
from ..pipeline.epoching import Epoch, EpochingAgent, Label, WindowingPolicy, class_counts
from ..utils.config import DEFAULT_CONFIG
from ..utils.errors import DataContractError, TrainingError
from .scoring import EpochPrediction, FoldRecord, RunResult, aggregate, mode_of_runs, score_events


logger = logging.getLogger(__name__)

Dataset = Sequence[Tuple[Recording, AnnotationSet]]
FoldCallback = Callable[[int, int, str], None]


def derive_seed(seed: int, *indices: int) -> int:
    """Independent 63-bit sub-seed for a fold, repeat or retry."""
    return int(np.random.SeedSequence([seed, *indices]).generate_state(1, np.uint64)[0]) >> 1


def base_policy(config: Dict[str, Any]) -> WindowingPolicy:
    section = config.get("preprocessing", DEFAULT_CONFIG["preprocessing"])
    return WindowingPolicy(
        mode="train",
        interictal_stride_s=section.get("interictal_stride_s", 5.0),
        ictal_stride_s=section.get("ictal_stride_s", 0.075),
    )


class LosoEvaluator:
    """Runs leave-one-subject-out folds for one method and channel set.

    Epochs are cut once per subject (eval tiling and the method's training
    windowing) and reused by every fold and repeat.
    """

    def __init__(
        self,
        dataset: Dataset,
        method: str,
        channels: Union[str, Sequence[str]] = "all",
        config: Optional[Dict[str, Any]] = None,
    ):
        """Initialize LOSO evaluator.

        Args:
            dataset: (Recording, AnnotationSet) per subject
            method: "seiznet" or "bpsvm"
            channels: Channel names or "all"
            config: Loaded configuration
        """
        if len(dataset) < 2:
            raise DataContractError(f"Leave-one-subject-out needs at least 2 subjects, got {len(dataset)}")
        ids = [rec.subject_id for rec, _ in dataset]
        if len(set(ids)) != len(ids):
            raise DataContractError(f"Subject IDs must be unique, got {ids}")

        self.dataset = list(dataset)
        self.method = method
        self.channels = channels
        self.config = config or DEFAULT_CONFIG

        eval_agent = EpochingAgent(WindowingPolicy(mode="eval"), channels)
        self.eval_epochs: Dict[str, List[Epoch]] = {
            rec.subject_id: eval_agent.epochs_for(rec, ann) for rec, ann in self.dataset
        }
        self.n_channels = next(iter(self.eval_epochs.values()))[0].n_channels

        probe = create_detector(method, self.n_channels, self.config)
        train_agent = EpochingAgent(probe.training_policy(base_policy(self.config)), channels)
        self.train_epochs: Dict[str, List[Epoch]] = {}
        for rec, ann in self.dataset:
            epochs = train_agent.epochs_for(rec, ann)
            counts = class_counts(epochs)
            logger.info("%s: %d ictal / %d interictal training epochs",
                        rec.subject_id, counts[Label.ICTAL], counts[Label.INTERICTAL])
            self.train_epochs[rec.subject_id] = epochs

    @property
    def deterministic(self) -> bool:
        return create_detector(self.method, self.n_channels, self.config).is_deterministic

    def run(self, seed: int = 0, on_fold: Optional[FoldCallback] = None) -> RunResult:
        """One full LOSO pass.

        Args:
            seed: Run seed; fold k trains with a sub-seed of (seed, k)
            on_fold: Called with (fold index, fold count, held-out subject)

        Returns:
            RunResult with a fold audit

        Raises:
            TrainingError: A training fold without ictal epochs
        """
        scores = {}
        folds = []
        n_folds = len(self.dataset)
        for fold, (rec, ann) in enumerate(self.dataset):
            held_out = rec.subject_id
            train_subjects = [r.subject_id for r, _ in self.dataset if r.subject_id != held_out]
            train_set = [e for sid in train_subjects for e in self.train_epochs[sid]]
            if class_counts(train_set)[Label.ICTAL] == 0:
                raise TrainingError(f"Training fold without {held_out} has no ictal epochs")

            detector = create_detector(self.method, self.n_channels, self.config, seed=derive_seed(seed, fold))
            detector.fit(train_set)

            eval_epochs = self.eval_epochs[held_out]
            flags = detector.flag(eval_epochs)
            preds = [EpochPrediction(e.start_s, e.end_s, bool(f)) for e, f in zip(eval_epochs, flags)]
            scores[held_out] = score_events(preds, ann, rec.duration_s)
            folds.append(FoldRecord(held_out, train_subjects, len(train_set)))

            logger.info("fold %d/%d (%s): %d/%d seizures, %d false alarms", fold + 1, n_folds, held_out,
                        scores[held_out].n_detected, scores[held_out].n_seizures,
                        scores[held_out].false_alarm_events)
            if on_fold is not None:
                on_fold(fold, n_folds, held_out)

        return aggregate(scores, folds)

    def run_repeats(self, repeats: int, seed: int = 0, on_fold: Optional[FoldCallback] = None) -> RunResult:
        """Mode of ``repeats`` LOSO runs; a deterministic method runs once."""
        if repeats < 1:
            raise DataContractError(f"repeats must be >= 1, got {repeats}")
        if self.deterministic:
            return self.run(seed, on_fold)

        runs = [self.run(derive_seed(seed, 1_000_000 + r), on_fold) for r in range(repeats)]
        result = aggregate(mode_of_runs([r.per_subject for r in runs]), runs[0].folds)
        result.n_runs = repeats
        return result


def loso_run(
    dataset: Dataset,
    method: str,
    channels: Union[str, Sequence[str]] = "all",
    config: Optional[Dict[str, Any]] = None,
    seed: int = 0,
) -> RunResult:
    """Single leave-one-subject-out run of ``method`` on ``dataset``."""
    return LosoEvaluator(dataset, method, channels, config).run(seed)
