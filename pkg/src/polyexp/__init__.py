"""Online linear optimization on the {0,1}^n hypercube with PolyExp."""

__version__ = "0.1.0"
