"""scikit-learn style wrappers around modulation, Bäcklund descent and time stepping.

Every estimator works on arrays of shape ``(n_samples, 2N)``: each row is a
field pair ``(f, f_t)`` sampled on ``Grid(L, N)``, the two halves concatenated.
"""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .backlund import (
    ascend_2soliton,
    ascend_breather_chain,
    constraint_value,
    descend_2soliton,
    descend_breather,
    descend_kink_to_zero,
)
from .evolution import EvolvingState, evolve
from .modulation import modulate_static
from .numerics import FieldPair, Grid
from .profiles import TWO_SOLITONS, ExactSolution, ProfileKind, SolitonParams, shift_derivatives

__all__ = ["ShiftModulator", "BacklundDescent", "SGIntegrator"]


def _split(row, N):
    return row[:N], row[N:]


class _GridMixin:
    def _grid(self):
        return Grid(self.L, self.N)

    def _check(self, X, dtype=np.float64):
        X = check_array(X, dtype=dtype)
        if X.shape[1] != 2 * self.N:
            raise ValueError(f"expected {2 * self.N} columns (phi and phi_t on N = {self.N} nodes), "
                             f"got {X.shape[1]}")
        return X

    def _kind(self):
        kind = ProfileKind.parse(self.kind)
        if kind not in TWO_SOLITONS:
            raise ValueError(f"kind must be a 2-soliton, got {kind}")
        return kind


class ShiftModulator(_GridMixin, TransformerMixin, BaseEstimator):
    """Map full states near the 2-soliton family to their fitted shifts ``(x1, x2)``.

    ``fit`` only validates the grid. ``transform`` returns an ``(n, 2)`` array;
    the remainders of the last call are kept in ``remainders_``.
    """

    def __init__(self, kind="breather", beta=0.5, L=40.0, N=4096, guess=(0.0, 0.0), pairing="l2",
                 tol=1e-10):
        self.kind = kind
        self.beta = beta
        self.L = L
        self.N = N
        self.guess = guess
        self.pairing = pairing
        self.tol = tol

    def fit(self, X, y=None):
        self._kind()
        X = self._check(X)
        self.grid_ = self._grid()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = self._check(X)
        kind = self._kind()
        out = np.empty((X.shape[0], 2))
        self.remainders_ = []
        for i, row in enumerate(X):
            fit = modulate_static(_split(row, self.N), kind, self.beta, tuple(self.guess), self.tol,
                                  self.grid_, self.pairing)
            out[i] = fit.x1, fit.x2
            self.remainders_.append(fit.pair)
        return out


class BacklundDescent(_GridMixin, TransformerMixin, BaseEstimator):
    """Send perturbations of a 2-soliton to perturbations of the vacuum and back.

    ``transform`` descends each perturbation ``(z0, w0)`` of ``D(·; β, x1, x2)``
    twice and returns the real vacuum datum ``(y0, v0)``. The parameter
    corrections and constraint values of that call are stored in
    ``corrections_`` so that ``inverse_transform`` can ascend the same rows
    back (round-trip mode).
    """

    def __init__(self, kind="breather", beta=0.5, x1=0.0, x2=0.0, L=40.0, N=4096, tol=1e-10):
        self.kind = kind
        self.beta = beta
        self.x1 = x1
        self.x2 = x2
        self.L = L
        self.N = N
        self.tol = tol

    def fit(self, X, y=None):
        self._kind()
        X = self._check(X)
        self.grid_ = self._grid()
        self.params_ = SolitonParams(self.beta, self.x1, self.x2)
        self.n_features_in_ = X.shape[1]
        return self

    def _descend(self, z0, w0, kind):
        p, g = self.params_, self.grid_
        target = constraint_value((z0, w0), tuple(shift_derivatives(kind, p, g, 1)), g)
        if kind is ProfileKind.BREATHER:
            top = descend_breather(z0, w0, p, self.tol, g)
            bottom = descend_kink_to_zero(top.u, top.s, p, self.tol, g)
        else:
            top, bottom = descend_2soliton(z0, w0, kind, p, self.tol, g)
        corr = (bottom.param_correction, top.param_correction, top.constraint, target)
        return np.real(bottom.u), np.real(bottom.s), corr

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = self._check(X)
        kind = self._kind()
        out = np.empty_like(X)
        self.corrections_ = []
        for i, row in enumerate(X):
            y0, v0, corr = self._descend(*_split(row, self.N), kind)
            out[i] = np.concatenate([y0, v0])
            self.corrections_.append(corr)
        return out

    def inverse_transform(self, Y):
        check_is_fitted(self, "corrections_")
        Y = self._check(Y)
        if Y.shape[0] != len(self.corrections_):
            raise ValueError("inverse_transform needs the rows of the last transform call")
        kind = self._kind()
        p, g = self.params_, self.grid_
        out = np.empty_like(Y)
        for i, row in enumerate(Y):
            y, v = _split(row, self.N)
            b_tilde, b, c, target = self.corrections_[i]
            if kind is ProfileKind.BREATHER:
                _, top = ascend_breather_chain(y, v, b_tilde, b, p, self.tol, g, constraint_c=c, target=target)
            else:
                _, top = ascend_2soliton(y, v, b_tilde, b, kind, p, self.tol, g, constraint_c=c, target=target)
            out[i] = np.concatenate([np.real(top.u), np.real(top.s)])
        return out


class SGIntegrator(_GridMixin, BaseEstimator):
    """Evolve perturbations of an exact background for a time ``horizon``.

    ``kind=None`` evolves around the zero solution. ``predict`` returns the
    perturbations at ``t = horizon``.
    """

    def __init__(self, kind=None, beta=0.5, x1=0.0, x2=0.0, L=40.0, N=4096, horizon=1.0, dt=None):
        self.kind = kind
        self.beta = beta
        self.x1 = x1
        self.x2 = x2
        self.L = L
        self.N = N
        self.horizon = horizon
        self.dt = dt

    def fit(self, X=None, y=None):
        if X is not None:
            X = self._check(X)
            self.n_features_in_ = X.shape[1]
        self.grid_ = self._grid()
        if self.kind is None:
            self.background_ = ExactSolution()
        else:
            self.background_ = ExactSolution(self.kind, SolitonParams(self.beta, self.x1, self.x2))
        if self.background_.is_complex:
            raise ValueError("SGIntegrator handles real backgrounds only; use evolve for complex ones")
        return self

    def predict(self, X):
        check_is_fitted(self, "grid_")
        X = self._check(X)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            state = EvolvingState(self.background_, FieldPair(*_split(row, self.N)), self.grid_)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                traj = evolve(state, self.horizon, self.dt)
            if traj.blew_up:
                raise FloatingPointError(f"row {i} blew up at t = {traj.blowup.t:.6g}")
            z, w = traj.states[-1]
            out[i] = np.concatenate([np.real(z), np.real(w)])
        return out
