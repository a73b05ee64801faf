"""Doppler phasicity classification: DSP, synthesis, dataset, CNN, service."""

from .dataset import (AugmentConfig, DatasetEntry, DatasetManifest,
                      DatasetStore, PhasicityLabel, assign_split,
                      load_training_pairs, parse_label, random_zoom)
from .dsp import (AudioClip, Spectrogram, StftParams, clip_to_input,
                  decode_wav, encode_wav, peak_normalize, resample,
                  spectrogram_to_png)
from .errors import PhasicError
from .nn import Model, build_model, forward, gradient_check
from .synth import SynthParams, generate_corpus, synthesize_clip
from .trainer import (ConfusionMatrix, Metrics, TrainConfig, TrainingHistory,
                      evaluate, load_model, save_model, train)

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "AugmentConfig", "ConfusionMatrix", "DatasetEntry",
    "DatasetManifest", "DatasetStore", "Metrics", "Model", "PhasicError",
    "PhasicityLabel", "Spectrogram", "StftParams", "SynthParams",
    "TrainConfig", "TrainingHistory", "assign_split", "build_model",
    "clip_to_input", "decode_wav", "encode_wav", "evaluate", "forward",
    "generate_corpus", "gradient_check", "load_model", "load_training_pairs",
    "parse_label", "peak_normalize", "random_zoom", "resample", "save_model",
    "spectrogram_to_png", "synthesize_clip", "train",
]
