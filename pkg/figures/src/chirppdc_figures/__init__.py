"""Figure rendering for the chirppdc simulator's CSV artifacts.

Display only: these scripts never recompute physics, they plot what the
CSV files contain.
"""

__version__ = "0.1.0"
