"""Polar differential-form wavelets and a Fourier-side exterior calculus."""
__version__ = "0.1.0"
