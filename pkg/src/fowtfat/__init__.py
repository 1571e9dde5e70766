"""Long-term fatigue damage estimation for a floating offshore wind turbine.

Couples a 7-DoF frequency-domain response model with Dirlik spectral fatigue
and accelerates the sea-state sweep with an actively learned Gaussian-process
surrogate per wind-speed bin.
"""

__version__ = "0.1.0"
