"""Exact dense-matrix analysis of small chains.

Everything here is ground truth for the statistical machinery: stationary
distributions, second absolute eigenvalues, relaxation times, stationary-lag
autocovariances, and the exact inter-trace variance

    v_T = v_pi / T + (2 / T^2) * sum_{i=1}^{T-1} (T - i) C_i.

Desk scale only: dense solvers, hard size cap.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Optional, Union

import numpy as np

from .chains import ScalarFunction, TransitionKernel, make_cycle, make_cycle_function
from .errors import GuardError, NotErgodicError

MATRIX_CAP = 4096
_UNIT_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class SpectralSummary:
    """Stationary law, second absolute eigenvalue, and moments of an attached function."""

    stationary: np.ndarray
    second_eigenvalue: float
    relaxation_time: float
    mean: float
    stationary_variance: float
    pi_min: float

    def to_json(self) -> dict:
        return {
            "stationary": [float(p) for p in self.stationary],
            "second_eigenvalue": self.second_eigenvalue,
            "relaxation_time": self.relaxation_time,
            "mean": self.mean,
            "stationary_variance": self.stationary_variance,
            "pi_min": self.pi_min,
        }


@dataclasses.dataclass(frozen=True)
class VarianceProfile:
    """Exact trace variance at one horizon plus the autocovariances behind it."""

    horizon: int
    autocovariances: np.ndarray  # C_1 .. C_{T-1}
    trace_variance: float

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "autocovariances": [float(c) for c in self.autocovariances],
            "trace_variance": self.trace_variance,
        }


@dataclasses.dataclass(frozen=True)
class SandwichVerdict:
    horizon: int
    lower: float
    trace_variance: float
    upper: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "lower": self.lower,
            "trace_variance": self.trace_variance,
            "upper": self.upper,
            "passed": self.passed,
        }


def _as_matrix(chain: Union[TransitionKernel, np.ndarray]) -> np.ndarray:
    if isinstance(chain, TransitionKernel):
        if chain.matrix is None:
            raise ValueError(f"kernel {chain.name!r} has no explicit matrix to analyse")
        return chain.matrix
    m = np.asarray(chain, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _function_values(f: Union[ScalarFunction, np.ndarray], n: int) -> np.ndarray:
    if isinstance(f, ScalarFunction):
        return f.values(np.arange(n))
    vals = np.asarray(f, dtype=float)
    if vals.shape != (n,):
        raise ValueError(f"function values must have shape ({n},), got {vals.shape}")
    return vals


def _stationary(m: np.ndarray) -> np.ndarray:
    w, vecs = np.linalg.eig(m.T)
    idx = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[idx] - 1.0) > 1e-6:
        raise NotErgodicError("not ergodic: no unit eigenvalue found")
    pi = np.real(vecs[:, idx])
    pi = pi / pi.sum()
    if np.min(pi) < -1e-8:
        raise NotErgodicError("not ergodic: stationary vector has negative mass")
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    residual = np.max(np.abs(pi @ m - pi))
    if residual > _UNIT_TOL:
        raise NotErgodicError(f"not ergodic: stationary residual {residual:.3e}")
    return pi


def summarize(chain, f) -> SpectralSummary:
    """Full spectral summary of a small chain with an attached bounded function.

    The second eigenvalue is the largest absolute eigenvalue once the single
    unit eigenvalue is removed; two eigenvalues on the unit circle mean the
    chain is reducible or periodic and the analysis refuses.  Reversible
    chains are symmetrised by similarity with sqrt(pi) before the eigensolve,
    which keeps the spectrum real and the computation well conditioned.
    """
    m = _as_matrix(chain)
    n = m.shape[0]
    if n > MATRIX_CAP:
        raise GuardError(f"dense analysis capped at {MATRIX_CAP} states, got {n}")
    if n < 2:
        raise NotErgodicError("not ergodic: a single-state chain has no second eigenvalue")
    pi = _stationary(m)

    reversible = bool(
        np.min(pi) > 0
        and np.max(np.abs(pi[:, None] * m - (pi[:, None] * m).T)) < 1e-10
    )
    if reversible:
        d = np.sqrt(pi)
        sym = (d[:, None] * m) / d[None, :]
        eigs = np.linalg.eigvalsh(0.5 * (sym + sym.T))
        mags = np.sort(np.abs(eigs))[::-1]
    else:
        mags = np.sort(np.abs(np.linalg.eigvals(m)))[::-1]
    if mags[1] >= 1.0 - _UNIT_TOL:
        raise NotErgodicError(
            f"not ergodic: |eigenvalue| = {mags[1]:.12f} with multiplicity beyond the unit one"
        )
    lam = float(min(max(mags[1], 0.0), 1.0 - 1e-15))

    vals = _function_values(f, n)
    mean = float(pi @ vals)
    variance = float(pi @ (vals - mean) ** 2)
    return SpectralSummary(
        stationary=pi,
        second_eigenvalue=lam,
        relaxation_time=1.0 / (1.0 - lam),
        mean=mean,
        stationary_variance=variance,
        pi_min=float(np.min(pi)),
    )


def autocovariance(chain, f, lag: int, summary: Optional[SpectralSummary] = None) -> float:
    """Exact stationary autocovariance C_lag = Cov(f(X_1), f(X_{1+lag}))."""
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    m = _as_matrix(chain)
    vals = _function_values(f, m.shape[0])
    s = summary if summary is not None else summarize(chain, vals)
    centered = vals - s.mean
    if lag == 0:
        return float((s.stationary * centered) @ centered)
    power = np.linalg.matrix_power(m, lag)
    return float((s.stationary * centered) @ power @ centered)


def exact_trace_variance(chain, f, T: int, summary: Optional[SpectralSummary] = None) -> VarianceProfile:
    """Closed-form inter-trace variance from the autocovariance decomposition."""
    if T < 1:
        raise ValueError(f"horizon T must be >= 1, got {T}")
    m = _as_matrix(chain)
    vals = _function_values(f, m.shape[0])
    s = summary if summary is not None else summarize(chain, vals)
    centered = vals - s.mean
    weighted = s.stationary * centered
    covs = np.empty(max(T - 1, 0))
    power = np.eye(m.shape[0])
    acc = 0.0
    for i in range(1, T):
        power = power @ m
        c = float(weighted @ power @ centered)
        covs[i - 1] = c
        acc += (T - i) * c
    v = s.stationary_variance / T + 2.0 * acc / (T * T)
    return VarianceProfile(horizon=T, autocovariances=covs, trace_variance=float(v))


def check_sandwich(chain, f, T: int, summary: Optional[SpectralSummary] = None) -> SandwichVerdict:
    """Check v_pi/T <= v_T <= 2 tau_rel v_pi / T on a lazy reversible chain."""
    if isinstance(chain, TransitionKernel) and not (chain.is_lazy and chain.is_reversible):
        raise ValueError(f"sandwich bound needs a lazy reversible chain, got {chain.name!r}")
    m = _as_matrix(chain)
    vals = _function_values(f, m.shape[0])
    s = summary if summary is not None else summarize(chain, vals)
    profile = exact_trace_variance(m, vals, T, summary=s)
    lower = s.stationary_variance / T
    upper = 2.0 * s.relaxation_time * s.stationary_variance / T
    slack = 1e-10
    ok = (lower - slack <= profile.trace_variance <= upper + slack)
    return SandwichVerdict(
        horizon=T,
        lower=float(lower),
        trace_variance=profile.trace_variance,
        upper=float(upper),
        passed=bool(ok),
    )


def cycle_separation_profile(n: int, T: int):
    """Exact v_T for every admissible block function on the n-cycle.

    Returns a list of (i, trace_variance) sorted by block half-width i; the
    admissible i are exactly those with 2i | n.
    """
    kernel = make_cycle(n)
    rows = []
    for i in range(1, n // 2 + 1):
        if n % (2 * i) != 0:
            continue
        f = make_cycle_function(n, i)
        s = summarize(kernel, f)
        prof = exact_trace_variance(kernel, f, T, summary=s)
        rows.append((i, prof.trace_variance))
    return rows
