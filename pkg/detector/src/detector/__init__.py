"""BLSTM feature-fusion detector over gadget/attention vector files."""
import os

# Must be set before TensorFlow loads: quiet logs, determinism-friendly kernels.
os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")
os.environ.setdefault("TF_ENABLE_ONEDNN_OPTS", "0")

__version__ = "0.1.0"
