"""SCVCNet: sliding cross-vector convolution network for EEG workload recognition.

Pipeline: raw EEG -> theta/alpha PSD matrices (``signal_prep``) -> random SCVC
feature map (``scvc``) -> closed-form ridge readout (``model``), evaluated with
the cross-database protocol in ``harness``.
"""
from .backend import BACKEND
from .model import KernelBank, RidgeModel, TrainConfig, predict, train
from .scvc import forward, ifpfi, scvc
from .signal_prep import EpochFeatures, RawRecording

__all__ = [
    "BACKEND",
    "EpochFeatures",
    "KernelBank",
    "RawRecording",
    "RidgeModel",
    "TrainConfig",
    "forward",
    "ifpfi",
    "predict",
    "scvc",
    "train",
]
__version__ = "0.1.0"
