"""
Boundary-model blowup laboratory

Pseudospectral solver and diagnostics for the 1D boundary model of the 3D
axisymmetric Euler equations, with the CLM / De Gregorio / CCF / OSW scalar family.
"""

__version__ = "0.1.0"
