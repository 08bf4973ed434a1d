"""EEG data model, file ingestion and the synthetic generator."""

from .io import load_annotations, load_dataset, load_recording, save_annotations, save_dataset, save_recording
from .recording import INGEST_RATES_HZ, TARGET_RATE_HZ, AnnotationSet, Recording
from .synthetic import SynthConfig, synth_dataset, synth_subject

__all__ = [
    "AnnotationSet",
    "INGEST_RATES_HZ",
    "Recording",
    "SynthConfig",
    "TARGET_RATE_HZ",
    "load_annotations",
    "load_dataset",
    "load_recording",
    "save_annotations",
    "save_dataset",
    "save_recording",
    "synth_dataset",
    "synth_subject",
]
