"""Conservative, unconditionally positivity-preserving modified Patankar
time integrators coupled to bound-preserving discontinuous Galerkin
discretizations of the 1D/2D reactive Euler equations."""

__version__ = "0.1.0"
