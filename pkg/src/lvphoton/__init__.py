"""Covariant Fock-space quantization of non-birefringent Lorentz-violating
electrodynamics: tensor parameterization, plane-wave dispersion, indefinite
metric Fock space, the mode Hamiltonian and its block decomposition, the
weak gauge condition on states, and leading-order matter couplings."""

__version__ = "0.1.0"
