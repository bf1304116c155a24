"""Numerical verification of twisted first moments of Rankin-Selberg
central values in the weight aspect: approximate functional equation,
Petersson trace formula, Kloosterman sums over totally real fields of
degree <= 2, and the diagonal/off-diagonal moment decomposition, all with
propagated truncation certificates."""

__version__ = "0.1.0"
