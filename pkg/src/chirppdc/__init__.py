"""Forward simulator for high-gain PDC in aperiodically poled MgO:LiNbO3.

Pipeline: extraordinary-wave dispersion -> poling profile -> coupled-mode
integration of the two-mode squeezing coefficients -> observables (spectrum,
photon-number covariance, gain curves, SFG cross-correlation).
"""

__version__ = "0.1.0"
