"""Numerical laboratory for Poincaré–Sobolev type quotients on bounded domains.

Submodules: ``radial_gns`` (whole-space ground state and G(d)), ``domains``
(domain specs and P1 meshes), ``quotient_solver`` (discrete quotient and its
gradient flow), ``thresholds``, ``variational_1d``, ``triangle_symmetry``,
``scaling_lab``, and the ``cli`` front end.
"""

__version__ = "0.1.0"
