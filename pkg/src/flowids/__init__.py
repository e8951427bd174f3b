"""Malicious-flow detection pipeline for IoT-style intrusion datasets.

The package chains stratified k-fold splitting, randomized truncated SVD,
chi-squared / network-ablation feature selection, and an LSTM classifier,
then reports confusion-based detection metrics.
"""

__version__ = "0.1.0"
