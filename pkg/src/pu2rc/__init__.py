"""Monte Carlo simulator for PU2RC (orthogonal-beam SDMA with limited feedback)."""

__version__ = "0.1.0"
