"""Independent brute-force verifiers.

These deliberately avoid the code paths they check: the fourth-moment
maximizer uses sphere grids plus tensor power iteration, gradients come
from central finite differences in a tangent basis, ERM is an exhaustive
sweep at d <= 2 (pair normals at d = 3, random search above), and the
surrogate-loss structural inequality is evaluated from first principles
with the ramp's own derived constants (derivative exactly 1/sigma on the
linear piece, at most 3/sigma everywhere):

    A1 = (alpha / sigma) Pr[|<v,x>| >= alpha and |<w,x>| <= sigma/6]
    A2 = (3 / (2 tan theta)) Pr[|<w,x>| <= sigma/2]
    A3 = (6 / sigma) sqrt(opt) sqrt(E[<v,x>^2 1{|<w,x>| <= sigma/2}])

so ||grad L_sigma|| >= A1 - A2 - A3 for arbitrary labels, and
>= (1 - 2 eta) A1 - A2 under Massart noise (gradient taken against the
conditional label expectation).
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Optional

import numpy as np

from . import rng
from .distributions import Dataset, NoiseModel, sign_pm1
from .errors import DegenerateAngleError, DimTooLargeError
from .numerics import householder_basis, unit
from .sos_hyper import empirical_fourth_moment_tensor
from .surrogate import (RAMP_DERIV_BOUND, RampParams, smooth_ramp_derivative,
                        surrogate_gradient)

GRID_RESOLUTION = 0.01
COARSE_RESOLUTION_D4 = 0.15
POWER_RESTARTS = 64


def _power_iterate(dense: np.ndarray, v: np.ndarray,
                   iters: int = 200) -> tuple[float, np.ndarray]:
    """Symmetric tensor power iteration; monotone for these convex quartics."""
    v = unit(v)
    contracted = np.tensordot(np.tensordot(dense, v, axes=1), v, axes=1)  # (d, d)
    val = float(v @ contracted @ v)
    for _ in range(iters):
        g = contracted @ v
        norm = np.linalg.norm(g)
        if norm < 1e-300:
            break
        v_new = g / norm
        contracted = np.tensordot(np.tensordot(dense, v_new, axes=1), v_new, axes=1)
        val_new = float(v_new @ contracted @ v_new)
        converged = val_new <= val + 1e-15
        v, val = v_new, val_new
        if converged:
            break
    return val, v


def _sphere_grid(dim: int, resolution: float) -> np.ndarray:
    """Angular grid over half the sphere (the quartic is even)."""
    if dim == 1:
        return np.array([[1.0]])
    if dim == 2:
        angles = np.arange(0.0, math.pi, resolution)
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if dim == 3:
        thetas = np.arange(0.0, math.pi + resolution, resolution)
        points = []
        for th in thetas:
            ring = max(1, int(math.ceil(2.0 * math.pi * math.sin(th) / resolution)))
            phis = np.arange(ring) * 2.0 * math.pi / ring
            points.append(np.stack([np.sin(th) * np.cos(phis),
                                    np.sin(th) * np.sin(phis),
                                    np.full(ring, math.cos(th))], axis=1))
        return np.concatenate(points)
    if dim == 4:
        res = max(resolution, COARSE_RESOLUTION_D4)
        axes = [np.arange(0.0, math.pi + res, res)] * 2 + [
            np.arange(0.0, 2.0 * math.pi, res)]
        pts = []
        for t1, t2, t3 in itertools.product(*axes):
            pts.append([math.cos(t1),
                        math.sin(t1) * math.cos(t2),
                        math.sin(t1) * math.sin(t2) * math.cos(t3),
                        math.sin(t1) * math.sin(t2) * math.sin(t3)])
        return np.asarray(pts)
    raise DimTooLargeError("grid mode supports d <= 4")


def brute_force_max_fourth_moment(points: np.ndarray, mode: str = "auto",
                                  resolution: float = GRID_RESOLUTION,
                                  seed: int = 0) -> tuple[float, np.ndarray]:
    """Maximize E_S[<v, x>^4] over the unit sphere.

    Grid mode (d <= 4): sphere grid at the angular resolution, then power
    iteration refinement from the best grid points and random restarts.
    Ascent mode (any d): multi-start power iteration only — a certified
    lower bound rather than the global maximum.
    """
    points = np.asarray(points, dtype=float)
    d = points.shape[1]
    dense = empirical_fourth_moment_tensor(points).dense()
    if mode not in ("auto", "grid", "ascent"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "grid" and d > 4:
        raise DimTooLargeError("grid mode supports d <= 4")
    use_grid = d <= 4 and mode != "ascent"

    best_val, best_v = -math.inf, None
    starts = []
    if use_grid:
        grid = _sphere_grid(d, resolution)
        means = np.mean((points @ grid.T) ** 4, axis=0)
        order = np.argsort(means)[::-1]
        best_val, best_v = float(means[order[0]]), grid[order[0]]
        starts.extend(grid[order[:32]])
    gen = rng.stream(seed, rng.STREAM_ORACLE)
    starts.extend(rng.unit_sphere(gen, d) for _ in range(POWER_RESTARTS))
    starts.extend(np.eye(d))
    for v0 in starts:
        val, v = _power_iterate(dense, np.asarray(v0, dtype=float))
        if val > best_val:
            best_val, best_v = val, v
    return float(best_val), best_v


def finite_difference_gradient(f: Callable[[np.ndarray], float],
                               w: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a sphere function along a tangent basis at w."""
    if not 1e-8 <= h <= 1e-4:
        raise ValueError("h must lie in [1e-8, 1e-4]")
    w = unit(np.asarray(w, dtype=float))
    basis = householder_basis(w)
    grad = np.zeros_like(w)
    for tangent in basis:
        up = f(unit(w + h * tangent))
        down = f(unit(w - h * tangent))
        grad += (up - down) / (2.0 * h) * tangent
    return grad


def _halfspace_errors(points: np.ndarray, labels: np.ndarray,
                      candidates: np.ndarray, chunk: int = 2048) -> np.ndarray:
    out = np.empty(candidates.shape[0])
    for start in range(0, candidates.shape[0], chunk):
        block = candidates[start:start + chunk]
        preds = np.where(points @ block.T >= 0, 1, -1)
        out[start:start + chunk] = np.mean(preds != labels[:, None], axis=0)
    return out


def erm_halfspace(ds: Dataset, mode: str = "auto", seed: int = 0,
                  search_budget: int = 20000,
                  pair_budget: int = 100_000) -> tuple[np.ndarray, float]:
    """Minimum empirical 0-1 error over origin-centered halfspaces.

    d = 1: both orientations.  d = 2: exact sweep over the point-induced
    boundary angles and their midpoints.  d = 3: candidate normals from
    point pairs, all of them when there are at most ``pair_budget`` and a
    seeded subsample otherwise (near-exact).  d <= 8 with mode='search':
    random search plus shrinking local perturbation — an upper bound on
    opt_S.
    """
    x, y = ds.points, ds.labels
    d = ds.dim
    if mode == "auto":
        mode = "exact" if d <= 3 else "search"
    if mode == "exact":
        if d > 3:
            raise DimTooLargeError("exact ERM supports d <= 3")
        if d == 1:
            cands = np.array([[1.0], [-1.0]])
        elif d == 2:
            # boundary normals: exact 90-degree rotations of the data points
            # (so <rot90(x_i), x_i> is exactly zero and the sign convention
            # is exercised), plus midpoints of consecutive boundary angles
            norms = np.linalg.norm(x, axis=1)
            good = norms > 0
            rot = np.stack([-x[good, 1], x[good, 0]], axis=1) / norms[good][:, None]
            base = np.arctan2(x[good, 1], x[good, 0])
            events = np.sort(np.mod(np.concatenate(
                [base + math.pi / 2.0, base - math.pi / 2.0]), 2.0 * math.pi))
            gaps = np.diff(np.concatenate([events, [events[0] + 2 * math.pi]]))
            mids = events + gaps / 2.0
            cands = np.concatenate([
                rot, -rot,
                np.stack([np.cos(mids), np.sin(mids)], axis=1)])
        else:
            idx_i, idx_j = np.triu_indices(ds.n, k=1)
            if idx_i.size > pair_budget:
                gen = rng.stream(seed, rng.STREAM_ORACLE + 9)
                keep = gen.choice(idx_i.size, size=pair_budget, replace=False)
                idx_i, idx_j = idx_i[keep], idx_j[keep]
            normals = np.cross(x[idx_i], x[idx_j])
            norms = np.linalg.norm(normals, axis=1)
            good = norms > 1e-12
            cands = normals[good] / norms[good][:, None]
            cands = np.concatenate([cands, -cands, np.eye(3)])
    else:
        if d > 8:
            raise DimTooLargeError("random-search ERM supports d <= 8")
        gen = rng.stream(seed, rng.STREAM_ORACLE + 1)
        cands = np.stack([rng.unit_sphere(gen, d) for _ in range(search_budget)])
    errs = _halfspace_errors(x, y, cands)
    best = int(np.argmin(errs))
    w_best, err_best = cands[best], float(errs[best])
    if mode == "search":
        radius = 0.5
        for _ in range(12):
            local = w_best[None, :] + radius * rng.standard_normal(
                rng.stream(seed, rng.STREAM_ORACLE + 2), (256, d))
            local /= np.linalg.norm(local, axis=1, keepdims=True)
            errs = _halfspace_errors(x, y, local)
            i = int(np.argmin(errs))
            if errs[i] < err_best:
                w_best, err_best = local[i], float(errs[i])
            radius *= 0.5
    return w_best, err_best


def reference_direction(w: np.ndarray, w_star: np.ndarray) -> np.ndarray:
    """Unit v in span(w, w*) with <v, w> = 0 and <v, w*> < 0."""
    w = unit(np.asarray(w, dtype=float))
    w_star = unit(np.asarray(w_star, dtype=float))
    residual = w_star - (w_star @ w) * w
    norm = np.linalg.norm(residual)
    if norm < 1e-12:
        raise DegenerateAngleError("w and w* are (anti)parallel")
    return -residual / norm


def gradient_lower_bound_terms(ds: Dataset, w: np.ndarray, w_star: np.ndarray,
                               sigma: float, alpha: float
                               ) -> tuple[float, float, float]:
    """The A1, A2, A3 of the surrogate-loss gradient lower bound, evaluated
    on the empirical distribution with the ramp's derived constants."""
    w = unit(np.asarray(w, dtype=float))
    w_star = unit(np.asarray(w_star, dtype=float))
    theta = math.acos(np.clip(w @ w_star, -1.0, 1.0))
    if not 0.0 < theta < math.pi / 2.0:
        raise DegenerateAngleError("angle(w, w*) must lie in (0, pi/2)")
    if alpha < sigma / (2.0 * math.tan(theta)) - 1e-12:
        raise ValueError("alpha must be at least sigma / (2 tan theta)")
    v = reference_direction(w, w_star)
    xw = ds.points @ w
    xv = ds.points @ v
    a1 = (alpha / sigma) * float(np.mean((np.abs(xv) >= alpha)
                                         & (np.abs(xw) <= sigma / 6.0)))
    half = np.abs(xw) <= sigma / 2.0
    a2 = (RAMP_DERIV_BOUND / (2.0 * math.tan(theta))) * float(np.mean(half))
    opt = float(np.mean(sign_pm1(ds.points @ w_star) != ds.labels))
    second = float(np.mean(xv**2 * half))
    a3 = (2.0 * RAMP_DERIV_BOUND / sigma) * math.sqrt(opt) * math.sqrt(second)
    return a1, a2, a3


def massart_expected_gradient(points: np.ndarray, noise: NoiseModel,
                              w: np.ndarray, p: RampParams) -> np.ndarray:
    """Gradient of the surrogate loss against the conditional label
    expectation E[y | x] = (1 - 2 eta(x)) sign(<w*, x>)."""
    w = unit(np.asarray(w, dtype=float))
    etas = noise.flip_probabilities(points)
    expected_y = (1.0 - 2.0 * etas) * sign_pm1(points @ noise.target_vector())
    proj = points @ w
    weights = smooth_ramp_derivative(np.abs(proj), p) * expected_y
    tangents = points - np.outer(proj, w)
    return -(weights @ tangents) / points.shape[0]


def structural_check(ds: Dataset, w: np.ndarray, w_star: np.ndarray,
                     sigma: float, alpha: float,
                     noise: Optional[NoiseModel] = None) -> dict:
    """Both sides of the structural inequality on one empirical instance.

    Agnostic form (realized labels): ||grad|| >= A1 - A2 - A3.
    Massart form (noise given):      ||grad_expected|| >= (1-2 eta) A1 - A2,
    with the gradient taken against the conditional label expectation.
    """
    p = RampParams(sigma)
    a1, a2, a3 = gradient_lower_bound_terms(ds, w, w_star, sigma, alpha)
    out = {"a1": a1, "a2": a2, "a3": a3, "sigma": sigma, "alpha": alpha}
    if noise is None:
        grad_norm = float(np.linalg.norm(surrogate_gradient(w, ds, p)))
        out["grad_norm"] = grad_norm
        out["lower_bound"] = a1 - a2 - a3
    else:
        grad = massart_expected_gradient(ds.points, noise, w, p)
        grad_norm = float(np.linalg.norm(grad))
        out["grad_norm"] = grad_norm
        out["lower_bound"] = (1.0 - 2.0 * noise.eta) * a1 - a2
    out["holds"] = grad_norm >= out["lower_bound"] - 1e-12
    return out


# ---------------------------------------------------------------------------
# analytic standard-Gaussian strip statistics

def gaussian_cdf(t: float) -> float:
    return 0.5 * (1.0 + math.erf(t / math.sqrt(2.0)))


def gaussian_strip_stats(sigma: float, c: float, uu_inner: float) -> dict:
    """Exact values of the four strip statistics for the standard Gaussian:

    (i)   Pr[|<w,x>| <= sigma]
    (ii)  E[<v,x>^2 1{|<w,x>| <= sigma}]                  (v orthogonal to w)
    (iii) E[<u,x>^2 <u',x>^2] = 1 + 2 <u,u'>^2
    (iv)  E[<v,x>^2 1{|<w,x>| in [c, c+sigma]}]           (v orthogonal to w)
    """
    p_strip = 2.0 * gaussian_cdf(sigma) - 1.0
    p_band = 2.0 * (gaussian_cdf(c + sigma) - gaussian_cdf(c))
    return {"strip_probability": p_strip,
            "strip_second_moment": p_strip,
            "cross_fourth_moment": 1.0 + 2.0 * uu_inner**2,
            "offset_strip_second_moment": p_band}
