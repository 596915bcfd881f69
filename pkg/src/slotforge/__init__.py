"""Diversity-ranked seq2seq data augmentation for slot-filling corpora."""

__version__ = "0.1.0"
