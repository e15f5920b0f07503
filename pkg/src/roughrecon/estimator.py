"""Estimator-style wrapper around the multi-frequency reconstruction."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .experiments import MeasurementSet, reconstruction_error
from .forward import IncidentWave, Medium
from .inverse import InverseConfig, _Problem, multi_frequency_reconstruct
from .surface import SurfaceModel


class RoughSurfaceReconstructor(BaseEstimator):
    """Recover a rough interface profile from multi-frequency scattered fields.

    ``fit`` takes a :class:`~roughrecon.experiments.MeasurementSet` and
    marches through its frequencies in ascending order, warm-starting each
    Newton loop from the previous one. ``predict`` evaluates the fitted
    profile at abscissas.

    Parameters
    ----------
    tau : float
        Tikhonov weight on the normal equations.
    threshold : float
        Stop when the coefficient step norm falls to this value.
    max_iterations : int
        Newton iterations allowed per frequency.
    n_splines, spline_order : int
        Size and order of the B-spline profile basis.
    points_per_wavelength : float
        Mesh density in the lower medium.
    jacobian : {"exact", "frozen"}
        Full derivative of the discrete field, or the fixed-field kernel
        derivative.
    upper, lower : Medium
        Media above and below the interface.
    wave : IncidentWave
        Incident tapered plane wave.
    domain_length : float
        Length of the truncated surface (m).

    Attributes
    ----------
    coef_ : ndarray of shape (n_splines,)
        Final spline coefficients.
    model_ : SurfaceModel
    results_ : list of FrequencyResult
        Per-frequency summaries.
    history_ : list of IterationRecord
    failure_ : str or None
        Diagnostic if a forward solve aborted the march.
    """

    def __init__(
        self,
        tau=0.75e-5,
        threshold=5e-3,
        max_iterations=30,
        n_splines=25,
        spline_order=3,
        points_per_wavelength=10.0,
        jacobian="exact",
        upper=None,
        lower=None,
        wave=None,
        domain_length=16.0,
    ):
        self.tau = tau
        self.threshold = threshold
        self.max_iterations = max_iterations
        self.n_splines = n_splines
        self.spline_order = spline_order
        self.points_per_wavelength = points_per_wavelength
        self.jacobian = jacobian
        self.upper = upper
        self.lower = lower
        self.wave = wave
        self.domain_length = domain_length

    def _problem(self, receivers):
        config = InverseConfig(
            tau=self.tau,
            threshold=self.threshold,
            max_iterations=self.max_iterations,
            n_splines=self.n_splines,
            spline_order=self.spline_order,
            points_per_wavelength=self.points_per_wavelength,
            jacobian=self.jacobian,
        )
        return _Problem(
            self.upper if self.upper is not None else Medium(),
            self.lower if self.lower is not None else Medium(4.0, 1.0, 1e-5),
            self.wave if self.wave is not None else IncidentWave(0.0, self.domain_length / 2),
            receivers,
            config,
            self.domain_length,
        )

    def fit(self, X: MeasurementSet, y=None, reference=None, initial=None):
        """Reconstruct from measurements.

        Parameters
        ----------
        X : MeasurementSet
        y : ignored
        reference : callable, optional
            True profile; when given, each iteration records ``err``.
        initial : array-like, optional
            Starting coefficients (flat surface by default).
        """
        if not isinstance(X, MeasurementSet):
            raise TypeError(f"expected a MeasurementSet, got {type(X).__name__}")
        problem = self._problem(X.receivers)
        if initial is not None:
            initial = check_array(np.atleast_2d(initial), ensure_2d=True).ravel()
            if initial.size != problem.basis.count:
                raise ValueError(f"initial has {initial.size} coefficients, expected {problem.basis.count}")
        state = multi_frequency_reconstruct(X.frequencies, X.fields, problem, reference=reference, initial=initial)
        self.basis_ = problem.basis
        self.coef_ = state.coeffs.copy()
        self.model_ = SurfaceModel(problem.basis, self.coef_)
        self.results_ = state.results
        self.history_ = state.history
        self.failure_ = state.failed
        self.n_features_in_ = X.receivers.count
        return self

    def predict(self, x):
        """Profile heights at abscissas ``x`` (m)."""
        check_is_fitted(self, "coef_")
        x = check_array(np.atleast_1d(np.asarray(x, dtype=float)), ensure_2d=False)
        return self.model_(x)

    def score(self, x, heights):
        """Negative relative L2 error of the fitted profile against ``heights``."""
        return -reconstruction_error(self.predict(x), heights)
