"""Schwarz P surface, its twisted quotient in RP^3(1/2), and the smoothing body."""

from ._core import (
    Error,
    Mesh,
    catenoid_spectrum,
    certify,
    classify,
    compose,
    detect_lines,
    fnv1a,
    group_elements,
    import_mesh,
    pullback,
    schwarz_p,
    seed_p_surface,
    singular_net,
    smoothing,
    spectrum,
    symmetry_deviation,
    twisted_quotient,
)

__version__ = "0.1.0"
