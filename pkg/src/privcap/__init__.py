"""Privacy accounting and Bayes'-capacity leakage for VMF and Gaussian DP-SGD."""

__version__ = "0.1.0"
