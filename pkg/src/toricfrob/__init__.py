"""Exact genus-zero open/closed invariants of toric Calabi-Yau 3-folds with an outer brane,
and the formal Frobenius and F-manifold structures they define."""

__version__ = "0.1.0"
