"""Seizure-onset detection toolkit: SeizNet, a band-power SVM baseline and filter decoding."""

__version__ = "1.0.0"
