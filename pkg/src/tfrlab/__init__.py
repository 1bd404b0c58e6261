"""Time-frequency analysis with windowed Fourier and wavelet transforms."""

__version__ = "0.1.0"
