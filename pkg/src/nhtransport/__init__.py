"""Wave-packet transport in lattices with random non-Hermitian on-site potentials."""

__version__ = "0.1.0"
