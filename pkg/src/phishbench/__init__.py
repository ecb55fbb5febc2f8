"""Phishing website detection workbench: 48-feature extraction, nine from-scratch
classifiers including a hybrid dense/LSTM network, evaluation and a scoring service."""

__version__ = "0.1.0"
