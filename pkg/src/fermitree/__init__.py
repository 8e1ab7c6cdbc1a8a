"""Tree expansions of Grassmann Gaussian integrals, exterior-algebra amplitude recursions and their bounds."""

__version__ = "0.1.0"
