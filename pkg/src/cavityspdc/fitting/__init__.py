"""Nonlinear least squares and the model fitters used across the toolkit."""

from .models import (
    fit_detector_rate,
    fit_fringe,
    fit_g2_histogram,
    fit_lorentzian_scan,
    fit_visibility_decay,
    fringe,
    fringe_jacobian,
    g2_histogram_model,
    lorentz_jacobian,
    lorentz_peak,
    visibility_decay,
)
from .solver import FitError, FitProblem, FitResult, UnderdeterminedFit, least_squares, numerical_jacobian

__all__ = [
    "FitError",
    "FitProblem",
    "FitResult",
    "UnderdeterminedFit",
    "fit_detector_rate",
    "fit_fringe",
    "fit_g2_histogram",
    "fit_lorentzian_scan",
    "fit_visibility_decay",
    "fringe",
    "fringe_jacobian",
    "g2_histogram_model",
    "least_squares",
    "lorentz_jacobian",
    "lorentz_peak",
    "numerical_jacobian",
    "visibility_decay",
]
