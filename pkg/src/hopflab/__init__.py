"""Numerical laboratory for stationary Dirichlet-energy maps in the plane.

The package implements, at desk scale and against analytic oracles: explicit
stationary deformations with their Hopf products, discrete Wirtinger
calculus, trajectory tracing of quadratic differentials, discrete harmonic
replacement with dyadic refinement, the radial obstacle problem between
annuli, and a verification suite for the quantitative inequalities these
objects satisfy.
"""

__version__ = "0.1.0"
