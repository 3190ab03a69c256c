"""Desk-scale pipeline for sexism detection: text normalization, MLM further
pre-training, multi-task training with a shared encoder, and macro-F1 reporting.
"""

__version__ = "0.1.0"
