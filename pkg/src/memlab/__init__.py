"""Optimizer laboratory for a one-layer linear associative memory.

Compares gradient descent, sign descent (Adam without EMAs) and Muon on
imbalanced fact distributions, with closed-form oracles for the two-class case.
"""

__version__ = "0.1.0"
