"""Scikit-learn style wrapper around the key-rate pipeline.

``KeyRateEstimator`` maps a column of Werner weights p to the columns
``p, P_E, I_AB, I_BE_bound, K_raw, K``, so the analysis can sit inside a
``Pipeline`` or be tuned with ``get_params``/``set_params``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from nsqkd.keyrate import LOCAL_BOUNDARY, evaluate_point, find_threshold
from nsqkd.protocol import werner_correlations
from nsqkd.sweep import CSV_COLUMNS


class KeyRateEstimator(TransformerMixin, BaseEstimator):
    """Key-rate analysis for a correlation model parameterised by p.

    Parameters
    ----------
    form : {"reduced", "full"}
        Which LP formulation to solve.
    model : callable or None
        ``p -> CorrelationTable``; defaults to the Werner model.
    threshold_tol : float
        Bisection tolerance used by ``fit`` to locate the key threshold.
    """

    def __init__(self, form="reduced", model=None, threshold_tol=1e-6):
        self.form = form
        self.model = model
        self.threshold_tol = threshold_tol

    def _model(self):
        return self.model if self.model is not None else werner_correlations

    def _validate_p(self, X):
        X = check_array(X, ensure_2d=False, dtype=float)
        X = X.reshape(-1) if X.ndim == 1 or X.shape[1] == 1 else None
        if X is None:
            raise ValueError("expected a single column of p values")
        if np.any((X < 0) | (X > 1)):
            raise ValueError("p values must lie in [0, 1]")
        return X

    def fit(self, X=None, y=None):
        """Locate the positive-key threshold ``threshold_``; ``X`` is accepted and ignored."""
        if self.form not in ("reduced", "full"):
            raise ValueError(f"form must be 'reduced' or 'full', got {self.form!r}")
        res = find_threshold(
            model=self._model(), tol=self.threshold_tol, bracket=(LOCAL_BOUNDARY, 1.0), form=self.form
        )
        self.threshold_ = res.p_star
        self.threshold_bracket_ = (res.lo, res.hi)
        self.feature_names_out_ = np.array(CSV_COLUMNS, dtype=object)
        return self

    def reports(self, X):
        ps = self._validate_p(X)
        return [evaluate_point(float(p), form=self.form, model=self._model()) for p in ps]

    def transform(self, X):
        check_is_fitted(self, "threshold_")
        return np.array([r.row() for r in self.reports(X)]).reshape(-1, len(CSV_COLUMNS))

    def predict(self, X):
        """Clamped key rate K for each p."""
        return self.transform(X)[:, -1]

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "threshold_")
        return self.feature_names_out_
