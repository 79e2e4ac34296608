"""Lattice orbits on X_{2,3}."""
