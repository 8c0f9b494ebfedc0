"""Exact spherical-harmonic constructions on S^2."""

from .beams import (
    GRAM_RANGE,
    BeamFrame,
    Ensemble,
    EnsembleSpec,
    GramCheckError,
    beam_evaluator,
    beam_sup,
    build_ensemble,
    calibrate_separation,
    ensemble_beams,
    ensemble_gram,
    gaussian_beam,
    gram_in_range,
    gram_matrix,
    log_beam_constant,
    phase_coherence_margin,
    place_poles,
    superpose_ensemble,
)
from .harmonics import (
    QuadratureError,
    SphericalField,
    ensemble_region,
    equator_slab,
    eval_harmonic,
    lp_norm_sphere,
    normalized_legendre,
    polar_cap,
    product,
    region_floor,
    surface_laplacian,
    zonal,
)
from .jacobi import hermitian_eigenvalues, jacobi_eigenvalues
from .quadrature import SphereQuadrature, product_quadrature, sized_for
