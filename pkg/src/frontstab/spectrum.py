"""Dispersion relations, essential-spectrum curves, and spatial eigenvalues.

Everything here works with the limiting symbols of the linearization about a
front: the quadratic matrix pencils

    A_pm[nu] = d nu^2 + (Jf(U_pm) + c) nu + Jg(U_pm),

their exponentially weighted counterpart L_plus[nu] = A_plus[nu - kappa] on
the + side, the curves xi -> eig(L[i xi]) traced by the essential spectrum,
and the spatial roots nu of det(lambda - L[nu]) with the gap rate
r(lambda) = C (1 + |lambda|^{1/2}).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .model import SystemModel

__all__ = [
    "LambdaRegion",
    "MarginalData",
    "SpatialEigenData",
    "ModeClassification",
    "dispersion",
    "symbol_matrix",
    "essential_curves",
    "check_essential_assumptions",
    "spatial_eigenvalues",
    "rate_calibration",
    "nearest_jordan",
    "nu_expansion",
    "projection",
    "classify_marginal_modes",
    "save_curves",
    "format_marginal",
    "parse_marginal",
]

_SIDES = {"+": +1, "-": -1, +1: +1, -1: -1}


def _side_sign(side) -> int:
    try:
        return _SIDES[side]
    except (KeyError, TypeError):
        raise ValueError(f"side must be '+' or '-', got {side!r}") from None


def _limit_state(model: SystemModel, sign: int) -> np.ndarray:
    return model.U_plus if sign > 0 else model.U_minus


# ---------------------------------------------------------------------------
# symbols and dispersion
# ---------------------------------------------------------------------------

def symbol_matrix(model: SystemModel, side, kappa: float, nu: complex) -> np.ndarray:
    """Weighted limiting symbol L_pm[nu] as an n x n complex matrix.

    L_plus[nu] = A_plus[nu - kappa] and L_minus[nu] = A_minus[nu], where
    A_pm[nu] = d nu^2 + (Jf(U_pm) + c) nu + Jg(U_pm).
    """
    sign = _side_sign(side)
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if sign < 0 and kappa != 0:
        raise ValueError("the weight is inactive on the - side; pass kappa=0")
    shift = nu - kappa if sign > 0 else nu
    U = _limit_state(model, sign)
    Jf = np.atleast_2d(model.Jf(U)).astype(complex)
    Jg = np.atleast_2d(model.Jg(U)).astype(complex)
    n = model.n
    return (
        np.diag(model.d).astype(complex) * shift**2
        + (Jf + model.c * np.eye(n)) * shift
        + Jg
    )


def dispersion(model: SystemModel, side, kappa: float, lam: complex, nu: complex) -> complex:
    """det(lambda - L_pm[nu]) for the weighted limiting symbol."""
    L = symbol_matrix(model, side, kappa, nu)
    return complex(np.linalg.det(lam * np.eye(model.n) - L))


# ---------------------------------------------------------------------------
# essential-spectrum curves
# ---------------------------------------------------------------------------

@dataclass
class EssentialCurves:
    xi: np.ndarray           # (M,) frequencies
    curves: np.ndarray       # (n, M) eigenvalue curves, continued in xi
    crossings: np.ndarray    # (M,) bool: two eigenvalues closer than 1e-8

    @property
    def has_crossing(self) -> bool:
        return bool(self.crossings.any())


def essential_curves(model: SystemModel, side, kappa: float, xi_grid: np.ndarray) -> EssentialCurves:
    """Eigenvalue curves xi -> eig L_pm[i xi], matched node-to-node.

    Labels are continued by nearest-neighbour assignment to the previous
    node; nodes where two eigenvalues come within 1e-8 are flagged, since
    the labels are locally arbitrary there.
    """
    xi = np.asarray(xi_grid, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise ValueError("xi_grid must be a 1-d array with at least two nodes")
    n = model.n
    curves = np.empty((n, xi.size), dtype=complex)
    crossings = np.zeros(xi.size, dtype=bool)
    prev = None
    for j, x in enumerate(xi):
        vals = np.linalg.eigvals(symbol_matrix(model, side, kappa, 1j * x))
        if n > 1:
            dists = np.abs(vals[:, None] - vals[None, :])
            np.fill_diagonal(dists, np.inf)
            if dists.min() < 1e-8:
                crossings[j] = True
        if prev is None:
            order = np.argsort(-vals.real)
        else:
            cost = np.abs(prev[:, None] - vals[None, :])
            _, order = linear_sum_assignment(cost)
        curves[:, j] = vals[order]
        prev = curves[:, j]
    return EssentialCurves(xi=xi, curves=curves, crossings=crossings)


# ---------------------------------------------------------------------------
# marginal data (Assumption-style checks)
# ---------------------------------------------------------------------------

@dataclass
class MarginalData:
    xi0: float
    Xi: float
    eta: float
    alpha1: float
    alpha2: complex
    kappa: float


def _curve_value(model: SystemModel, kappa: float, xi: float, guide: complex) -> complex:
    """Eigenvalue of L_plus[i xi] closest to a guide value."""
    vals = np.linalg.eigvals(symbol_matrix(model, "+", kappa, 1j * xi))
    return vals[int(np.argmin(np.abs(vals - guide)))]


def check_essential_assumptions(
    model: SystemModel,
    kappa: float,
    xi0_hint: float = 0.0,
    profile=None,
    Xi: float = 1.0,
) -> MarginalData | list[str]:
    """Locate the marginal contact of the weighted + curves and certify gaps.

    Returns MarginalData on success, otherwise the list of violated items.
    The weighted curve family must touch the imaginary axis at a single
    frequency xi0 (quadratically), every other curve value must stay a
    distance eta to the left, and the weight must be optimal in the sense
    that e^{kappa x} ubar'(x) stays bounded on [0, L].
    """
    violations: list[str] = []
    span = 5.0
    grid = np.linspace(xi0_hint - span, xi0_hint + span, 2001)
    plus = essential_curves(model, "+", kappa, grid)
    minus = essential_curves(model, "-", 0.0, grid)

    # the candidate marginal curve attains the global max of Re lambda
    flat = plus.curves.real
    k_star, j_star = np.unravel_index(np.argmax(flat), flat.shape)
    guide = plus.curves[k_star, j_star]

    # refine the maximiser of Re lambda_1^+ off the grid
    bracket_lo = grid[max(j_star - 1, 0)]
    bracket_hi = grid[min(j_star + 1, grid.size - 1)]
    opt = minimize_scalar(
        lambda s: -_curve_value(model, kappa, s, guide).real,
        bounds=(bracket_lo, bracket_hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    xi0 = float(opt.x)
    lam_star = _curve_value(model, kappa, xi0, guide)

    if lam_star.real > 1e-6:
        violations.append(
            f"essential spectrum unstable: Re lambda_1^+({xi0:.6g}) = {lam_star.real:.6g} > 0"
        )
    elif lam_star.real < -1e-6:
        violations.append(
            "no marginal contact: the weighted curves stay strictly to the left "
            f"(max Re lambda_1^+ = {lam_star.real:.6g}); the weight overshoots the front rate"
        )
    if violations:
        return violations

    # gap eta: curve 1 outside the window, all other + curves, all - curves
    dist = np.abs(grid - xi0)
    outside = dist >= Xi
    others = np.delete(plus.curves.real, k_star, axis=0)
    bounds = []
    if outside.any():
        bounds.append(-plus.curves.real[k_star, outside].max())
    if others.size:
        bounds.append(-others.max())
    bounds.append(-minus.curves.real.max())
    eta = 0.99 * min(bounds)
    if eta <= 0:
        which = "another + curve" if others.size and -others.max() <= 0 else "a - curve"
        if outside.any() and -plus.curves.real[k_star, outside].max() <= 0:
            which = "the marginal curve outside the window"
        violations.append(f"spectral gap violated: {which} reaches Re >= 0")

    # single contact: on the marginal curve, Re ~ 0 only near xi0
    near_zero = plus.curves.real[k_star] > -0.5 * max(eta, 1e-6)
    if near_zero.any():
        idx = np.where(near_zero)[0]
        if np.any(np.diff(idx) > 1) or dist[idx].max() > Xi:
            violations.append("multiple marginal contacts (single-contact assumption fails)")

    # local expansion lambda = i alpha1 (xi - xi0) - alpha2 (xi - xi0)^2
    window = dist <= Xi / 4.0
    delta = (grid - xi0)[window]
    lam_w = np.array([_curve_value(model, kappa, s, guide) for s in grid[window]])
    basis = np.vstack([np.ones_like(delta), delta, delta**2]).T.astype(complex)
    coef, *_ = np.linalg.lstsq(basis, lam_w, rcond=None)
    alpha1 = float(coef[1].imag)
    alpha2 = complex(-coef[2])
    fit = basis @ coef
    res_quarter = float(np.max(np.abs(lam_w - fit)))
    # cubic remainder: the same fit restricted to half the window must shrink ~8x
    inner = np.abs(delta) <= Xi / 8.0
    if inner.sum() >= 8:
        res_eighth = float(np.max(np.abs((lam_w - fit)[inner])))
        if res_quarter > 1e-10 and res_eighth > 0.35 * res_quarter:
            violations.append(
                "marginal expansion is not quadratic-with-cubic-remainder "
                f"(residual ratio {res_eighth / res_quarter:.3g})"
            )
    if abs(coef[1].real) > 1e-6:
        violations.append(
            f"marginal drift not purely imaginary: Re d(lambda)/d(xi) = {coef[1].real:.3g}"
        )
    if alpha1 <= 0:
        violations.append(f"alpha1 = {alpha1:.6g} <= 0 (marginal drift points the wrong way)")
    if alpha2.real <= 0:
        violations.append(f"Re alpha2 = {alpha2.real:.6g} <= 0 (contact not quadratic)")

    # optimal weight: e^{kappa x} ubar' bounded on [0, L]
    if profile is None:
        from .profile import default_profile

        try:
            profile = default_profile(model)
        except Exception:
            profile = None
    if profile is not None:
        x = profile.grid
        du = np.linalg.norm(np.atleast_2d(profile.derivative), axis=0)
        sel = (x >= 0) & (du > 1e-250)
        logs = np.log(du[sel]) + kappa * x[sel]
        half = x[sel] >= 0.5 * x[sel].max()
        if half.sum() >= 10:
            xs = x[sel][half]
            A = np.vstack([xs, np.ones_like(xs)]).T
            (slope, _), *_ = np.linalg.lstsq(A, logs[half], rcond=None)
            if slope > 0.02:
                violations.append(
                    f"weight not optimal: e^(kappa x) ubar' grows at rate {slope:.3g}"
                )

    if violations:
        return violations
    return MarginalData(
        xi0=xi0, Xi=float(Xi), eta=float(eta), alpha1=alpha1, alpha2=alpha2, kappa=float(kappa)
    )


# ---------------------------------------------------------------------------
# spatial eigenvalues
# ---------------------------------------------------------------------------

@dataclass
class LambdaRegion:
    """Sector Lambda = {Re lambda >= -theta (1 + |Im lambda|)}, scanned in B(0, radius)."""

    theta: float
    radius: float = 50.0

    def __post_init__(self) -> None:
        if self.theta <= 0:
            raise ValueError("theta must be positive")

    def contains(self, lam: complex) -> bool:
        return lam.real >= -self.theta * (1.0 + abs(lam.imag))

    def boundary_samples(self, count: int = 200) -> np.ndarray:
        """Points on the boundary Re lambda = -theta (1 + |Im lambda|) inside B(0, radius).

        |Im lambda| is log-spaced so the samples cluster near the origin,
        where the marginal root makes the gap tightest.
        """
        th, r = self.theta, self.radius
        # |t| solving theta^2 (1+t)^2 + t^2 = r^2
        a = th**2 + 1.0
        b = 2.0 * th**2
        c0 = th**2 - r**2
        t_max = (-b + np.sqrt(b**2 - 4.0 * a * c0)) / (2.0 * a)
        half = np.geomspace(1e-3, t_max, count // 2)
        t = np.concatenate([-half[::-1], half])
        return -th * (1.0 + np.abs(t)) + 1j * t


@dataclass
class SpatialEigenData:
    lam: complex
    nus: np.ndarray          # 2n roots, ordered nu_{-n},...,nu_{-1},nu_1,...,nu_n
    rate: float
    jordan_flag: bool
    side: str = "+"


def _companion_matrix(model: SystemModel, side, kappa: float, lam: complex) -> np.ndarray:
    """First-order linearization whose eigenvalues are the spatial roots."""
    sign = _side_sign(side)
    U = _limit_state(model, sign)
    n = model.n
    Jf = np.atleast_2d(model.Jf(U)).astype(complex)
    Jg = np.atleast_2d(model.Jg(U)).astype(complex)
    d_inv = 1.0 / model.d
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    M[:n, n:] = np.eye(n)
    M[n:, :n] = d_inv[:, None] * (lam * np.eye(n) - Jg)
    M[n:, n:] = -d_inv[:, None] * (Jf + model.c * np.eye(n))
    return M


def _spatial_roots(model: SystemModel, side, kappa: float, lam: complex) -> np.ndarray:
    """Unlabeled roots of det(lambda - L_pm[nu]) = 0."""
    sign = _side_sign(side)
    nus = np.linalg.eigvals(_companion_matrix(model, side, kappa, lam))
    if sign > 0:
        nus = nus + kappa
    return nus


def spatial_eigenvalues(
    model: SystemModel,
    kappa: float,
    lam: complex,
    side="+",
    prev: SpatialEigenData | None = None,
    rate_constant: float | None = None,
) -> SpatialEigenData:
    """Roots nu of the weighted dispersion relation at lambda, with labels.

    Roots come from the eigenvalues of the 2n x 2n companion linearization.
    By default they are ordered by real part (nu_{-n} <= ... <= nu_n); pass
    the previous result along a path as ``prev`` to keep labels by
    nearest-neighbour matching through crossings of the real-part order.
    """
    lam = complex(lam)
    nus = _spatial_roots(model, side, kappa, lam)
    n = model.n
    if prev is not None:
        cost = np.abs(prev.nus[:, None] - nus[None, :])
        _, order = linear_sum_assignment(cost)
        nus = nus[order]
    else:
        nus = nus[np.argsort(nus.real)]

    scale = 1e-10 * (1.0 + abs(lam)) ** n
    for nu in nus:
        res = abs(dispersion(model, side, kappa, lam, nu))
        if res > scale:
            coeffs = np.round(nus, 12)
            raise RuntimeError(
                f"spatial root residual {res:.3e} exceeds tolerance at lambda={lam}; "
                f"roots {coeffs}"
            )

    dists = np.abs(nus[:, None] - nus[None, :])
    np.fill_diagonal(dists, np.inf)
    jordan = bool(dists.min() < 1e-7)

    if rate_constant is None:
        rate_constant = rate_calibration(model, kappa).C
    rate = float(rate_constant * (1.0 + np.sqrt(abs(lam))))
    return SpatialEigenData(
        lam=lam, nus=nus, rate=rate, jordan_flag=jordan, side="+" if _side_sign(side) > 0 else "-"
    )


# ---------------------------------------------------------------------------
# Jordan points and the projection ball
# ---------------------------------------------------------------------------

def _nu_poly_coeffs(model: SystemModel, side, kappa: float, lam: complex) -> np.ndarray:
    """Coefficients (highest first) of nu -> det(lambda - L_pm[nu])."""
    deg = 2 * model.n
    samples = np.exp(2j * np.pi * np.arange(deg + 1) / (deg + 1))
    vals = np.array([dispersion(model, side, kappa, lam, s) for s in samples])
    # exact interpolation on roots of unity
    V = np.vander(samples, deg + 1, increasing=False)
    return np.linalg.solve(V, vals)


def _sylvester_det(p: np.ndarray, q: np.ndarray) -> complex:
    dp, dq = p.size - 1, q.size - 1
    size = dp + dq
    S = np.zeros((size, size), dtype=complex)
    for i in range(dq):
        S[i, i : i + dp + 1] = p
    for i in range(dp):
        S[dq + i, i : i + dq + 1] = q
    return complex(np.linalg.det(S))


def _discriminant_resultant(model: SystemModel, side, kappa: float, lam: complex) -> complex:
    p = _nu_poly_coeffs(model, side, kappa, lam)
    dp = p[:-1] * np.arange(p.size - 1, 0, -1)
    return _sylvester_det(p, dp)


def nearest_jordan(model: SystemModel, kappa: float, side="+", scan_radius: float = 5.0) -> complex | None:
    """Nearest lambda to the origin where two spatial roots collide.

    The collision locus is the zero set of the resultant of the dispersion
    polynomial and its nu-derivative, a polynomial in lambda; its
    coefficients are recovered from samples on a circle and its roots
    verified against the actual root spacing.
    """
    n = model.n
    deg_bound = 2 * n * (4 * n - 1)  # generous degree bound for the resultant
    count = 2 * (deg_bound + 1)
    unit = np.exp(2j * np.pi * np.arange(count) / count)
    vals = np.array(
        [_discriminant_resultant(model, side, kappa, scan_radius * z) for z in unit]
    )
    # fit in the scaled variable z = lambda / scan_radius: unit-circle
    # Vandermonde columns all have modulus one, so small coefficients survive
    V = np.vander(unit, deg_bound + 1, increasing=False)
    coef, *_ = np.linalg.lstsq(V, vals, rcond=None)
    lead = np.max(np.abs(coef))
    if lead == 0:
        return None
    trimmed = np.trim_zeros(np.where(np.abs(coef) > 1e-10 * lead, coef, 0.0), "f")
    if trimmed.size <= 1:
        return None
    roots = scan_radius * np.roots(trimmed)
    verified = []
    for r in roots:
        if abs(r) > scan_radius:
            continue
        nus = _spatial_roots(model, side, kappa, complex(r))
        dists = np.abs(nus[:, None] - nus[None, :])
        np.fill_diagonal(dists, np.inf)
        if dists.min() < 1e-4:
            verified.append(complex(r))
    if not verified:
        return None
    return min(verified, key=abs)


def projection_ball(model: SystemModel, kappa: float) -> float:
    """Radius m of the Jordan-free ball: half the distance to the nearest Jordan point."""
    jordan = nearest_jordan(model, kappa)
    if jordan is None:
        return 2.5
    return 0.5 * abs(jordan)


# ---------------------------------------------------------------------------
# rate calibration
# ---------------------------------------------------------------------------

@dataclass
class RateCalibration:
    C: float
    theta: float
    m: float
    region: LambdaRegion
    samples: int = 200


def _tracked_nu1(model: SystemModel, kappa: float, lam: complex, steps: int = 8) -> complex:
    """nu_1^+(lambda) continued from its value at lambda = 0."""
    # at lambda = 0 the marginal root sits at nu = i xi0; for the real weights
    # used here it is the root of smallest magnitude
    nus = _spatial_roots(model, "+", kappa, 0.0)
    nu = nus[int(np.argmin(np.abs(nus)))]
    for k in range(1, steps + 1):
        target = lam * (k / steps)
        roots = _spatial_roots(model, "+", kappa, target)
        nu = roots[int(np.argmin(np.abs(roots - nu)))]
    return nu


def _calibration_once(model: SystemModel, kappa: float, theta: float, m: float,
                      radius: float, count: int) -> float | None:
    """Min of gap/(1+sqrt|lambda|) over the sector boundary; None if a gap closes."""
    region = LambdaRegion(theta=theta, radius=radius)
    worst = np.inf
    n = model.n
    for lam in region.boundary_samples(count):
        lam = complex(lam)
        gaps = []
        for side in ("+", "-"):
            kap = kappa if side == "+" else 0.0
            nus = _spatial_roots(model, side, kap, lam)
            nus = nus[np.argsort(nus.real)]
            excl = None
            if side == "+" and abs(lam) <= m:
                # inside the Jordan-free ball the marginal root nu_1^+ may
                # legitimately sit on either side of the axis; drop it
                nu1 = _tracked_nu1(model, kappa, lam)
                excl = int(np.argmin(np.abs(nus - nu1)))
            for j, nu in enumerate(nus):
                if j == excl:
                    continue
                gaps.append(-nu.real if j < n else nu.real)
        gap = min(gaps)
        if gap <= 0:
            return None
        worst = min(worst, gap / (1.0 + np.sqrt(abs(lam))))
    return float(worst)


@lru_cache(maxsize=32)
def _rate_calibration_cached(model: SystemModel, kappa: float) -> RateCalibration:
    m = projection_ball(model, kappa)
    theta = 0.05
    for _ in range(7):
        worst = _calibration_once(model, kappa, theta, m, radius=50.0, count=200)
        if worst is not None:
            return RateCalibration(
                C=0.9 * worst, theta=theta, m=m, region=LambdaRegion(theta=theta)
            )
        theta *= 0.5
    raise RuntimeError(
        "rate calibration failed: a spatial gap stays closed on the sector "
        "boundary even after shrinking theta six times"
    )


def rate_calibration(model: SystemModel, kappa: float) -> RateCalibration:
    """Certified C for r(lambda) = C (1 + |lambda|^{1/2}), with theta and m.

    C = 0.9 * min over 200 boundary samples of Lambda_theta within B(0,50)
    of (smallest real-part gap)/(1 + |lambda|^{1/2}); the marginal root
    nu_1^+ is excluded inside the Jordan-free ball |lambda| <= m, where it
    legitimately crosses the axis.  theta starts at 0.05 and is halved (up
    to six times) until every gap on the boundary is positive.
    """
    return _rate_calibration_cached(model, float(kappa))


# ---------------------------------------------------------------------------
# marginal root expansion and projection
# ---------------------------------------------------------------------------

def _kernel_pair(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right and left kernel vectors of a (nearly) singular matrix."""
    U, s, Vh = np.linalg.svd(matrix)
    if matrix.shape[0] > 1 and s[-2] < 1e6 * max(s[-1], 1e-300):
        raise RuntimeError(
            "kernel dimension != 1: two singular values vanish "
            f"(sigma = {s[-2]:.3e}, {s[-1]:.3e})"
        )
    v = Vh[-1].conj()
    w = U[:, -1].conj()
    return v, w


def _nu1_and_vectors(model: SystemModel, kappa: float, lam: complex) -> tuple[complex, np.ndarray, np.ndarray]:
    nu1 = _tracked_nu1(model, kappa, lam)
    M = lam * np.eye(model.n) - symbol_matrix(model, "+", kappa, nu1)
    v, w = _kernel_pair(M)
    # normalize w . v = 1 (right/left eigenvector duality)
    inner = w @ v
    if abs(inner) < 1e-12:
        raise RuntimeError("left/right kernel vectors are orthogonal (defective root)")
    return nu1, v, w / inner


def _nu1_derivative(model: SystemModel, kappa: float, lam: complex) -> complex:
    """d nu_1^+/d lambda by eigen-perturbation: 1 / (w . dL/dnu . v)."""
    nu1, v, w = _nu1_and_vectors(model, kappa, lam)
    eps = 1e-6
    dL = (
        symbol_matrix(model, "+", kappa, nu1 + eps)
        - symbol_matrix(model, "+", kappa, nu1 - eps)
    ) / (2.0 * eps)
    slope = w @ dL @ v
    if abs(slope) < 1e-12:
        raise RuntimeError("d lambda/d nu vanishes at nu_1^+ (Jordan contact)")
    return 1.0 / complex(slope)


def nu_expansion(
    model: SystemModel,
    kappa: float,
    marginal: MarginalData,
    alpha_contour: float,
) -> tuple[complex, float, complex]:
    """Expansion of nu_1^+ along the parabola gamma(xi) = i a1 (xi-xi0) - alpha (xi-xi0)^2.

    Returns (beta0, sigma, beta2) with
    nu_1^+(gamma(xi)) = beta0 + i (alpha1/sigma)(xi - xi0) + beta2 (xi - xi0)^2 + O(^3).
    """
    if not 0.0 <= alpha_contour < 0.5 * marginal.alpha2.real:
        raise ValueError(
            f"alpha_contour must lie in [0, Re(alpha2)/2) = [0, {0.5 * marginal.alpha2.real:.6g})"
        )
    beta0 = _tracked_nu1(model, kappa, 0.0)
    if abs(beta0.real) > 1e-9:
        raise RuntimeError(f"nu_1^+(0) = {beta0} is not purely imaginary")

    slope = _nu1_derivative(model, kappa, 0.0)
    if abs(slope.imag) > 1e-8 or slope.real <= 0:
        raise RuntimeError(
            f"(nu_1^+)'(0) = {slope} violates the positive-slope condition"
        )
    sigma = 1.0 / slope.real

    a1 = marginal.alpha1

    def path(t: float) -> complex:
        return _tracked_nu1(model, kappa, 1j * a1 * t - alpha_contour * t * t)

    # second derivative along the path, two Richardson levels on central FD
    def second(h: float) -> complex:
        return (path(h) - 2.0 * path(0.0) + path(-h)) / (h * h)

    h = 1e-2
    r1a = (4.0 * second(h / 2.0) - second(h)) / 3.0
    r1b = (4.0 * second(h / 4.0) - second(h / 2.0)) / 3.0
    d2 = (16.0 * r1b - r1a) / 15.0
    beta2 = 0.5 * d2
    if beta2.real <= 0:
        raise RuntimeError(f"Re beta2 = {beta2.real:.6g} <= 0: contour absorbs the root")
    return beta0, float(sigma), complex(beta2)


def projection(model: SystemModel, kappa: float, lam: complex, m: float | None = None) -> np.ndarray:
    """Rank-1 spectral projection pi(lambda) = v w^T onto the nu_1^+ mode.

    v and w are right/left kernel vectors of lambda - L_plus[nu_1^+(lambda)]
    normalized to w . v = 1, which makes pi independent of vector phases, so
    it is automatically continuous along paths.  Only defined in the
    Jordan-free ball |lambda| <= m.
    """
    lam = complex(lam)
    if m is None:
        m = rate_calibration(model, kappa).m
    if abs(lam) > m:
        raise ValueError(f"|lambda| = {abs(lam):.6g} outside the Jordan-free ball (m = {m:.6g})")
    _, v, w = _nu1_and_vectors(model, kappa, lam)
    return np.outer(v, w)


# ---------------------------------------------------------------------------
# mode classification
# ---------------------------------------------------------------------------

@dataclass
class MarginalContact:
    side: str
    xi0: float
    lam: complex
    group_velocity: float
    incoming: bool


@dataclass
class ModeClassification:
    contacts: list[MarginalContact]
    separation_guaranteed: bool
    evans_at_zero: complex | None
    evans_zero_at_origin: bool | None
    violations: list[str]
    notes: str = field(
        default=(
            "group velocities are Im d(lambda)/d(xi) in the xi-parametrization; "
            "the incoming condition is +velocity > 0 on the + side and "
            "-velocity > 0 on the - side"
        )
    )


def classify_marginal_modes(
    model: SystemModel,
    kappa: float,
    profile=None,
    check_evans: bool = True,
) -> ModeClassification:
    """Classify marginal essential contacts and test Fourier/Evans separation.

    For each side, curves touching the imaginary axis at some xi0 are
    located; the contact's group velocity Im d(lambda)/d(xi) must point into
    the corresponding half-line (+ side: positive, - side: negative) for the
    Fourier/Evans separation to be structural.  The Evans function at 0
    cross-checks the point spectrum: E(0) != 0 iff no eigenvalue sits at the
    origin.
    """
    contacts: list[MarginalContact] = []
    violations: list[str] = []
    grid = np.linspace(-5.0, 5.0, 2001)
    for side in ("+", "-"):
        kap = kappa if side == "+" else 0.0
        ec = essential_curves(model, side, kap, grid)
        for k in range(model.n):
            re = ec.curves[k].real
            j = int(np.argmax(re))
            if re[j] < -1e-6:
                continue
            if re[j] > 1e-6:
                violations.append(
                    f"side {side}: curve {k} is unstable (max Re = {re[j]:.6g})"
                )
                continue
            guide = ec.curves[k, j]
            opt = minimize_scalar(
                lambda s: -(
                    _side_curve_value(model, side, kap, s, guide).real
                ),
                bounds=(grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]),
                method="bounded",
                options={"xatol": 1e-12},
            )
            xi0 = float(opt.x)
            lam0 = _side_curve_value(model, side, kap, xi0, guide)
            eps = 1e-6
            dlam = (
                _side_curve_value(model, side, kap, xi0 + eps, guide)
                - _side_curve_value(model, side, kap, xi0 - eps, guide)
            ) / (2.0 * eps)
            velocity = float(dlam.imag)
            if abs(velocity) < 1e-9:
                violations.append(
                    f"side {side}: marginal contact at xi0 = {xi0:.6g} has zero group "
                    "velocity; the incoming condition is indeterminate"
                )
                incoming = False
            else:
                incoming = velocity > 0 if side == "+" else velocity < 0
            contacts.append(
                MarginalContact(
                    side=side, xi0=xi0, lam=complex(lam0),
                    group_velocity=velocity, incoming=incoming,
                )
            )

    separation = bool(contacts) and all(c.incoming for c in contacts) and not violations
    if not contacts:
        separation = not violations  # nothing marginal: separation is vacuous

    evans_value: complex | None = None
    evans_zero: bool | None = None
    if check_evans:
        from .evans import evans_at_origin

        evans_value = evans_at_origin(model, kappa, profile=profile)
        evans_zero = bool(abs(evans_value) < 1e-8)

    return ModeClassification(
        contacts=contacts,
        separation_guaranteed=separation,
        evans_at_zero=evans_value,
        evans_zero_at_origin=evans_zero,
        violations=violations,
    )


def _side_curve_value(model: SystemModel, side, kappa: float, xi: float, guide: complex) -> complex:
    vals = np.linalg.eigvals(symbol_matrix(model, side, kappa, 1j * xi))
    return vals[int(np.argmin(np.abs(vals - guide)))]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_curves(curves: EssentialCurves, path: str | Path) -> None:
    """CSV with xi and Re/Im of each curve."""
    n = curves.curves.shape[0]
    cols = ["xi"]
    for k in range(n):
        cols += [f"re_lambda_{k + 1}", f"im_lambda_{k + 1}"]
    data = [curves.xi]
    for k in range(n):
        data += [curves.curves[k].real, curves.curves[k].imag]
    table = np.column_stack(data)
    buf = io.StringIO()
    np.savetxt(buf, table, delimiter=",", fmt="%.17g", header=",".join(cols), comments="")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def format_marginal(md: MarginalData) -> str:
    return (
        "marginal data\n"
        f"  xi0    = {md.xi0!r}\n"
        f"  Xi     = {md.Xi!r}\n"
        f"  eta    = {md.eta!r}\n"
        f"  alpha1 = {md.alpha1!r}\n"
        f"  alpha2 = {md.alpha2!r}\n"
        f"  kappa  = {md.kappa!r}\n"
    )


def parse_marginal(text: str) -> MarginalData:
    fields: dict[str, complex] = {}
    for line in text.splitlines():
        if "=" not in line:
            continue
        key, _, val = line.partition("=")
        fields[key.strip()] = complex(val.strip().strip("()"))
    return MarginalData(
        xi0=fields["xi0"].real,
        Xi=fields["Xi"].real,
        eta=fields["eta"].real,
        alpha1=fields["alpha1"].real,
        alpha2=fields["alpha2"],
        kappa=fields["kappa"].real,
    )
