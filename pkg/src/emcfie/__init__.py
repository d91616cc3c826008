"""Boundary-element solver for time-harmonic electromagnetic scattering.

Dense Galerkin discretization of a regularized combined field integral
equation on closed PEC surfaces, with div-conforming Raviart-Thomas
elements on the primal mesh and a dual div-conforming space on its
barycentric refinement.
"""

__version__ = "0.1.0"
