"""Mean-field and exact dynamics of a dissipative anisotropic Dicke model."""

__version__ = "0.1.0"
