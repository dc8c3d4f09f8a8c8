"""Scattering of scalar waves by one or many small bodies.

Modules: ``geometry`` (meshes and lattices), ``potentials`` (discrete layer
and volume operators), ``shapes`` (capacitance, polarizability),
``one_body`` (closed-form amplitudes), ``bem`` (boundary-element reference
solutions), ``many_body`` (particle clouds and their linear systems),
``effective`` (continuum limits, material design, background Green's
function) and ``cli``.
"""

__version__ = "0.1.0"
