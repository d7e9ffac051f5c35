"""LCK potentials on linear Hopf manifolds with sampled numerical certification."""
__version__ = "0.1.0"
