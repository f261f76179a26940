"""Statistical accept/reject testers on empirical samples.

Five testers, all pure functions of (points, parameters):

* ``spectral_test``      -- eigenvalue bounds on an empirical second-moment
  matrix (accepts iff min eig > theta/2, resp. max eig < 2 theta);
* ``strip_probability``  -- empirical mass of the slab |<w, x>| <= sigma;
* ``local_disagreement_test`` -- certifies that every halfspace within
  angle theta of w disagrees with w on at most 5 C1 theta lambda^C1 of the
  sample, via a strip test plus the operator norm of an inverse-square
  band-weighted projected second-moment matrix;
* ``weak_anticoncentration_test`` -- strip mass upper bound, conditional
  spectral lower bound, and the SOS hypercontractivity certificate; on
  acceptance, Paley-Zygmund gives every direction orthogonal to w a
  constant conditional probability of constant correlation inside the slab;
* ``stationary_point_test`` -- two-sided strip tests at widths sigma/6 and
  sigma/2, spectral bounds on the corresponding projected second-moment
  matrices, and the hypercontractivity certificate on the sigma-slab; on
  acceptance, approximate stationarity of the surrogate loss at w forces
  +-w to be angularly close to the empirical risk minimizer.

All thresholds are controlled by two calibration knobs in
:class:`TesterConfig`: ``c1`` (the strip/spectral constant, entering as
``c1 * lam ** c1``) and ``c_hyper`` (the hypercontractivity constant).
Enlarging either only loosens thresholds, so an Accept can never flip to
Reject when they grow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError
from .numerics import (check_finite, is_unit, min_eigenvalue, operator_norm,
                       project_orthogonal, symmetrize)
from .sos_hyper import empirical_fourth_moment_tensor, solve_relaxation


@dataclass
class TesterVerdict:
    __test__ = False  # keep pytest from collecting this as a test class

    accepted: bool
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, val in self.diagnostics.items():
            if isinstance(val, float) and not math.isfinite(val):
                raise ValueError(f"diagnostic {key} is not finite")

    def to_json(self) -> str:
        return json.dumps({"accepted": self.accepted,
                           "diagnostics": self.diagnostics}, sort_keys=True)


@dataclass(frozen=True)
class TesterConfig:
    """Niceness / Poincare parameters plus the two calibration constants."""

    __test__ = False  # keep pytest from collecting this as a test class

    lam: float = 3.0
    gamma: float = 1.0
    delta: float = 0.25
    c1: float = 4.0
    c_hyper: float = 10.0

    def __post_init__(self):
        if self.lam < 1.0:
            raise ValueError("lam must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.c1 <= 0 or self.c_hyper <= 0:
            raise ValueError("constants must be positive")

    @property
    def strip_constant(self) -> float:
        """c1 * lam^c1, the compound constant in every strip threshold."""
        return self.c1 * self.lam ** self.c1


def _as_points(data) -> np.ndarray:
    pts = data.points if hasattr(data, "points") else np.asarray(data, dtype=float)
    return check_finite(pts)


def _require_unit(w: np.ndarray) -> np.ndarray:
    w = check_finite(w)
    if not is_unit(w, tol=1e-9):
        raise PreconditionError("w must be a unit vector")
    return w


def spectral_test_on_matrix(m: np.ndarray, theta: float, mode: str,
                            extra: Optional[dict] = None) -> TesterVerdict:
    """Accept iff min eig > theta/2 (mode='min') or max eig < 2 theta ('max')."""
    if theta <= 0:
        raise PreconditionError("theta must be positive")
    m = symmetrize(m)
    diag = dict(extra or {})
    diag["theta"] = float(theta)
    if mode == "min":
        val = min_eigenvalue(m)
        diag["min_eigenvalue"] = val
        return TesterVerdict(accepted=val > theta / 2.0, diagnostics=diag)
    if mode == "max":
        val = operator_norm(m)
        diag["operator_norm"] = val
        return TesterVerdict(accepted=val < 2.0 * theta, diagnostics=diag)
    raise ValueError(f"unknown mode {mode!r}")


def spectral_test(points, theta: float, mode: str,
                  cfg: Optional[TesterConfig] = None) -> TesterVerdict:
    """Spectral tester on M_S = E_S[z z^T]."""
    pts = _as_points(points)
    m = pts.T @ pts / pts.shape[0]
    return spectral_test_on_matrix(m, theta, mode, extra={"n": pts.shape[0]})


def strip_probability(data, w: np.ndarray, sigma: float) -> float:
    """Exact empirical fraction with |<w, x>| <= sigma."""
    pts = _as_points(data)
    w = _require_unit(w)
    return float(np.mean(np.abs(pts @ w) <= sigma))


def strip_second_moment(points: np.ndarray, w: np.ndarray,
                        sigma: float) -> tuple[np.ndarray, int]:
    """M = E_S[(proj x)(proj x)^T 1{|<w,x>| <= sigma}] and the strip count.

    The average is over the full sample; only in-strip points contribute.
    """
    pts = _as_points(points)
    w = _require_unit(w)
    mask = np.abs(pts @ w) <= sigma
    z = project_orthogonal(w, pts[mask])
    d1 = pts.shape[1] - 1
    if z.shape[0] == 0:
        return np.zeros((d1, d1)), 0
    return z.T @ z / pts.shape[0], int(mask.sum())


def banded_second_moment(points: np.ndarray, w: np.ndarray,
                         theta: float) -> np.ndarray:
    """Inverse-square band weighting of the projected second moments.

    Band i >= 2 holds |<w,x>| in [(i-1) theta, i theta) with weight
    1/(i-1)^2; points below theta carry no weight (the strip test covers
    them).  Only the finitely many populated bands are materialized.
    """
    pts = _as_points(points)
    w = _require_unit(w)
    margins = np.abs(pts @ w)
    band = np.floor(margins / theta).astype(np.int64) + 1
    weights = np.where(band >= 2, 1.0 / np.maximum(band - 1, 1) ** 2, 0.0)
    z = project_orthogonal(w, pts)
    zw = z * weights[:, None]
    return z.T @ zw / pts.shape[0]


def hypercontractivity_test(points, gamma: float, c_hyper: float = 10.0,
                            tol: Optional[float] = None) -> TesterVerdict:
    """Accept iff the certified degree-4 SOS relaxation value of the maximum
    directional fourth moment is <= (c_hyper - 1) * gamma^4."""
    pts = _as_points(points)
    if gamma <= 0:
        raise PreconditionError("gamma must be positive")
    if pts.shape[0] < 1:
        raise PreconditionError("need at least one point")
    if tol is None:
        tol = min(1e-8, gamma**4)
    if tol > gamma**4:
        raise PreconditionError("solver accuracy must be at most gamma^4")
    threshold = (c_hyper - 1.0) * gamma**4
    tensor = empirical_fourth_moment_tensor(pts)
    try:
        value, _, sol = solve_relaxation(tensor, tol=tol)
    except Exception:
        return TesterVerdict(accepted=False,
                             diagnostics={"solver_failure": 1.0,
                                          "threshold": threshold})
    if not sol.optimal or not math.isfinite(value):
        return TesterVerdict(accepted=False,
                             diagnostics={"solver_failure": 1.0,
                                          "solver_status_reject": 1.0,
                                          "threshold": threshold})
    return TesterVerdict(
        accepted=value <= threshold,
        diagnostics={"sdp_value": value, "threshold": threshold,
                     "duality_gap": sol.gap, "n": pts.shape[0]})


def local_disagreement_test(points, w: np.ndarray, theta: float,
                            cfg: TesterConfig) -> TesterVerdict:
    """On Accept, every unit w' with angle(w, w') <= theta empirically
    disagrees with w on at most 5 c1 theta lam^c1 of the sample."""
    if not 0.0 < theta <= math.pi / 4.0:
        raise PreconditionError("theta must lie in (0, pi/4]")
    pts = _as_points(points)
    w = _require_unit(w)
    k = cfg.strip_constant
    bound = k * theta
    diag = {"theta": theta, "threshold": bound, "n": pts.shape[0]}

    p_strip = strip_probability(pts, w, theta)
    diag["strip_probability"] = p_strip
    if p_strip > bound:
        diag["rejected_by"] = 1.0  # strip stage
        return TesterVerdict(accepted=False, diagnostics=diag)

    m = banded_second_moment(pts, w, theta)
    op = operator_norm(m)
    diag["band_operator_norm"] = op
    if op > bound:
        diag["rejected_by"] = 2.0  # spectral stage
        return TesterVerdict(accepted=False, diagnostics=diag)
    diag["disagreement_bound"] = 5.0 * bound
    return TesterVerdict(accepted=True, diagnostics=diag)


def weak_anticoncentration_test(points, w: np.ndarray, sigma: float,
                                cfg: TesterConfig) -> TesterVerdict:
    """On Accept, for every unit v orthogonal to w,
    Pr[|<v,x>| >= 1/(c1 lam^c1) | |<w,x>| <= sigma] >= 1/(c1 lam^c1 gamma^4)."""
    pts = _as_points(points)
    w = _require_unit(w)
    if not 0.0 < sigma <= 1.0 / (2.0 * cfg.lam):
        raise PreconditionError("sigma must lie in (0, 1/(2 lam)]")
    if pts.shape[1] < 2:
        raise PreconditionError("need ambient dimension >= 2")
    k = cfg.strip_constant
    diag = {"sigma": sigma, "n": pts.shape[0]}

    p_strip = strip_probability(pts, w, sigma)
    diag["strip_probability"] = p_strip
    diag["strip_upper_threshold"] = 2.0 * sigma * k
    if p_strip > 2.0 * sigma * k:
        diag["rejected_by"] = 1.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    m, count = strip_second_moment(pts, w, sigma)
    diag["strip_count"] = float(count)
    if count == 0:
        diag["empty_strip"] = 1.0
        diag["rejected_by"] = 2.0
        return TesterVerdict(accepted=False, diagnostics=diag)
    spectral = spectral_test_on_matrix(m, 2.0 * sigma / k, "min")
    diag["conditional_min_eigenvalue"] = spectral.diagnostics["min_eigenvalue"]
    diag["spectral_threshold"] = sigma / k
    if not spectral.accepted:
        diag["rejected_by"] = 2.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    mask = np.abs(pts @ w) <= sigma
    projected = project_orthogonal(w, pts[mask])
    hyper = hypercontractivity_test(projected, cfg.gamma, cfg.c_hyper)
    diag.update({f"hyper_{k2}": v for k2, v in hyper.diagnostics.items()})
    if not hyper.accepted:
        diag["rejected_by"] = 3.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    diag["correlation_threshold"] = 1.0 / k
    diag["conditional_probability_bound"] = 1.0 / (k * cfg.gamma**4)
    return TesterVerdict(accepted=True, diagnostics=diag)


def stationary_point_test(data, w: np.ndarray, sigma: float,
                          eta: Optional[float], cfg: TesterConfig) -> TesterVerdict:
    """On Accept, a small surrogate-loss gradient at w bounds the angle from
    +-w to the empirical risk minimizer (Massart rate eta, or agnostic when
    eta is None)."""
    pts = _as_points(data)
    w = _require_unit(w)
    if not 0.0 < sigma <= 1.0 / (2.0 * cfg.lam):
        raise PreconditionError("sigma must lie in (0, 1/(2 lam)]")
    if pts.shape[1] < 2:
        raise PreconditionError("need ambient dimension >= 2")
    if eta is not None and not 0.0 <= eta < 0.5:
        raise PreconditionError("eta must lie in [0, 1/2) or be None")
    k = cfg.strip_constant
    diag = {"sigma": sigma, "n": pts.shape[0],
            "eta": -1.0 if eta is None else float(eta)}

    p_low = strip_probability(pts, w, sigma / 6.0)
    p_high = strip_probability(pts, w, sigma / 2.0)
    diag["strip_probability_sixth"] = p_low
    diag["strip_probability_half"] = p_high
    diag["strip_lower_threshold"] = sigma / k
    diag["strip_upper_threshold"] = sigma * k
    if p_low <= sigma / k or p_high > sigma * k:
        diag["rejected_by"] = 1.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    m_plus, count_plus = strip_second_moment(pts, w, sigma / 2.0)
    m_minus, count_minus = strip_second_moment(pts, w, sigma / 6.0)
    diag["strip_count_half"] = float(count_plus)
    diag["strip_count_sixth"] = float(count_minus)
    if count_minus == 0:
        diag["empty_strip"] = 1.0
        diag["rejected_by"] = 2.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    upper = spectral_test_on_matrix(m_plus, k * sigma / 2.0, "max")
    diag["half_strip_operator_norm"] = upper.diagnostics["operator_norm"]
    diag["spectral_upper_threshold"] = sigma * k
    if not upper.accepted:
        diag["rejected_by"] = 2.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    lower = spectral_test_on_matrix(m_minus, 2.0 * sigma / k, "min")
    diag["sixth_strip_min_eigenvalue"] = lower.diagnostics["min_eigenvalue"]
    diag["spectral_lower_threshold"] = sigma / k
    if not lower.accepted:
        diag["rejected_by"] = 3.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    mask = np.abs(pts @ w) <= sigma
    projected = project_orthogonal(w, pts[mask])
    hyper = hypercontractivity_test(projected, cfg.gamma, cfg.c_hyper)
    diag.update({f"hyper_{k2}": v for k2, v in hyper.diagnostics.items()})
    if not hyper.accepted:
        diag["rejected_by"] = 4.0
        return TesterVerdict(accepted=False, diagnostics=diag)

    scale = 1.0 if eta is None else 1.0 - 2.0 * eta
    diag["gradient_threshold"] = scale / (k * cfg.gamma**4)
    diag["angle_bound"] = k * (1.0 + cfg.gamma**4) * sigma / scale
    return TesterVerdict(accepted=True, diagnostics=diag)


def paley_zygmund_holds(samples: np.ndarray) -> bool:
    """Exact Paley-Zygmund check on an empirical nonnegative sample:
    Pr[Z > E[Z]/2] >= E[Z]^2 / (4 E[Z^2])."""
    z = check_finite(np.asarray(samples, dtype=float))
    if np.any(z < 0):
        raise ValueError("Paley-Zygmund needs a nonnegative sample")
    mean = float(np.mean(z))
    second = float(np.mean(z**2))
    lhs = float(np.mean(z > mean / 2.0))
    rhs = 0.0 if second == 0.0 else mean**2 / (4.0 * second)
    return lhs >= rhs
