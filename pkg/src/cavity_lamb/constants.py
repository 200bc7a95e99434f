"""SI physical constants (CODATA 2018 recommended values).

Fixed here rather than taken from ``scipy.constants`` so results do not
drift when scipy moves to a newer CODATA release.
"""

HBAR = 1.054571817e-34  # J s
EPS0 = 8.8541878128e-12  # F / m
C = 2.99792458e8  # m / s
