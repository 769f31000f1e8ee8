"""Supersymmetric lattice models as cochain complexes."""
