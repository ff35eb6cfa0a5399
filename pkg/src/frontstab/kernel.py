"""Pointwise resolvent kernels, temporal contours, and the linear semigroup.

The weighted operator L v = ell2 v'' + ell1(x) v' + ell0(x) v has a pointwise
resolvent kernel assembled from the decaying first-order frames: with
F = [phi-plus block | continued block] and R = (S F)^{-1},

    K(x, y) = - sum_j Psi_j(x) R_{n+j}(y)        for x < y,
    K(x, y) = + sum_j Phi^+_j(x) R_j(y)          for y <= x,

so the 2n x 2n kernel jumps by S(y)^{-1} across the diagonal while its n x n
top-left block is continuous and solves (lambda - L) u = f,
u(x) = int K_tl(x, y) f(y) dy.

The top-left block is split into four parts.  With nu_1 the tracked slow
spatial root, pi(lambda) the rank-one symbol projection, nu_1'(lambda) its
eigenvalue derivative, and k1(lambda, x, y) = e^{-nu_1 (y - x)} 1_{y > x}:

    K1 = nu_1'(0) pi(0) k1               (marginal transport),
    K2 = (nu_1' pi - nu_1'(0) pi(0)) k1  (lambda correction),
    K3 = -Psi_1(x) R_{n+1,u}(y) - nu_1' pi k1   (boundary layer, x < y),
    K4 = K - K1 - K2 - K3                (exponentially decaying rest).

Temporal Green's functions integrate e^{lambda t} times these parts over
truncated contours hugging the essential spectrum: a central parabola
gamma(xi) = i alpha1 (xi - xi0) - alpha (xi - xi0)^2 on |xi - xi0| <= Xi
joined to straight legs of slope theta/2, cut off once e^{Re gamma t} drops
below a tolerance.  Contours are conjugate-symmetric, so real data only
needs the upper half: I = (1/pi) Im sum of the upper-half trapezoid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .evans import (
    _essential_rightmost,
    _field_for,
    _fit_slope,
    _seed_pair,
    _sweep,
    dual_bases,
    integrate_bases,
)
from .model import SystemModel
from .profile import WaveProfile, default_profile
from .spectrum import (
    MarginalData,
    _nu1_and_vectors,
    _nu1_derivative,
    check_essential_assumptions,
    nearest_jordan,
    projection,
    rate_calibration,
)

__all__ = [
    "Contour",
    "GreenParts",
    "KernelBoundReport",
    "KernelParts",
    "SemigroupParts",
    "TransportedDecayReport",
    "apply_semigroup",
    "build_contour",
    "contour_equivalence",
    "g1_scan",
    "gaussian_envelope",
    "green_kernel",
    "kernel_jump",
    "load_green_kernel",
    "resolvent_kernel",
    "s_matrix",
    "save_green_kernel",
    "transported_decay_check",
    "verify_kernel_bounds",
    "vertical_contour",
    "wedge_contour",
]

# default grid for temporal kernels: propagation over t <= O(100) stays well
# inside the window while the sweeps remain cheap
_GREEN_L = 40.0
_GREEN_H = 0.04

_JORDAN_CLEARANCE = 1e-4
_CHUNK = {1: 256, 2: 128}

_green_profiles: dict[int, WaveProfile] = {}
_resolvent_profiles: dict[int, WaveProfile] = {}
_marginals: dict[tuple[int, float], MarginalData] = {}
_pi0_cache: dict[tuple[int, float], tuple[complex, np.ndarray, float]] = {}


def _green_profile(model: SystemModel) -> WaveProfile:
    key = id(model)
    if key not in _green_profiles:
        _green_profiles[key] = default_profile(model, L=_GREEN_L, h=_GREEN_H)
    return _green_profiles[key]


def _resolvent_profile(model: SystemModel) -> WaveProfile:
    key = id(model)
    if key not in _resolvent_profiles:
        _resolvent_profiles[key] = default_profile(model)
    return _resolvent_profiles[key]


def _marginal_for(model: SystemModel, kappa: float) -> MarginalData:
    key = (id(model), float(kappa))
    if key not in _marginals:
        data = check_essential_assumptions(model, kappa)
        if isinstance(data, list):
            raise RuntimeError(
                "essential-spectrum assumptions fail: " + "; ".join(data)
            )
        _marginals[key] = data
    return _marginals[key]


def _pi0_pack(model: SystemModel, kappa: float) -> tuple[complex, np.ndarray, float]:
    """(nu_1'(0), nu_1'(0) pi(0), sigma = 1/Re nu_1'(0))."""
    key = (id(model), float(kappa))
    if key not in _pi0_cache:
        _, v, w = _nu1_and_vectors(model, kappa, 0.0)
        dp = _nu1_derivative(model, kappa, 0.0)
        _pi0_cache[key] = (dp, dp * np.outer(v, w), 1.0 / dp.real)
    return _pi0_cache[key]


# ---------------------------------------------------------------------------
# pairing matrix
# ---------------------------------------------------------------------------

def s_matrix(model: SystemModel, kappa: float, x, *, profile: WaveProfile | None = None):
    """Pairing matrix S = [[-ell1, -ell2], [ell2, 0]] and its inverse.

    The inverse is closed-form, S^{-1} = [[0, ell2^{-1}],
    [-ell2^{-1}, -ell2^{-1} ell1 ell2^{-1}]].  Returns (S, S_inv); for array
    ``x`` both are stacked along the leading axis.
    """
    field = _field_for(model, kappa, profile)
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    _, ell1, _ = field.coefficients(arr)
    n = field.n
    d = np.asarray(model.d, dtype=complex)
    inv_d = 1.0 / d
    m = arr.size
    s = np.zeros((m, 2 * n, 2 * n), dtype=complex)
    s[:, :n, :n] = -ell1
    s[:, :n, n:] = -np.diag(d)
    s[:, n:, :n] = np.diag(d)
    s_inv = np.zeros_like(s)
    s_inv[:, :n, n:] = np.diag(inv_d)
    s_inv[:, n:, :n] = -np.diag(inv_d)
    s_inv[:, n:, n:] = -inv_d[:, None] * ell1 * inv_d[None, :]
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return s[0], s_inv[0]
    return s, s_inv


# ---------------------------------------------------------------------------
# pointwise resolvent kernel
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class KernelParts:
    """Resolvent kernel at one (lambda, x, y) with its four-part splitting.

    ``K`` and the parts are the n x n top-left (u-to-u) blocks; ``frame`` is
    the full 2n x 2n first-order kernel, which jumps by S(y)^{-1} across the
    diagonal.  K = K1 + K2 + K3 + K4 holds exactly (K4 is the remainder by
    construction).  On and below the diagonal (y <= x) the split parts
    vanish and K4 = K.  True values are the stored arrays times
    e^{log_scale}; the scale stays 0 throughout the supported range.
    """

    lam: complex
    x: float
    y: float
    K: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray
    K4: np.ndarray
    frame: np.ndarray
    log_scale: float = 0.0


def _frame_kernel_from_bundle(bundle, i_x: int, dual) -> np.ndarray:
    """Full 2n x 2n kernel with columns at node i_x and dual rows at dual.y."""
    n = bundle.n
    x = float(bundle.x_grid[i_x])
    if x < dual.y:
        cols, clogs = bundle.psi_block(i_x)
        rows, rlogs = dual.phi_plus_rows()
        sign = -1.0
    else:
        cols, clogs = bundle.frame_plus(i_x)
        rows, rlogs = dual.psi_plus_rows()
        sign = 1.0
    scale = np.exp(clogs + rlogs)
    return sign * (cols * scale[None, :]) @ rows


def resolvent_kernel(
    model: SystemModel,
    kappa: float,
    lam: complex,
    x: float,
    y: float,
    *,
    profile: WaveProfile | None = None,
    bundle=None,
) -> KernelParts:
    """Pointwise resolvent kernel (lambda - L)^{-1} at (x, y), split in parts.

    x and y snap to the nearest grid nodes of the bundle.  Pass ``bundle``
    (from :func:`frontstab.evans.integrate_bases` at the same lambda) to
    amortize the frame integration over many evaluation points.
    """
    lam = complex(lam)
    if bundle is None:
        if profile is None:
            profile = _resolvent_profile(model)
        bundle = integrate_bases(model, kappa, lam, profile=profile)
    n = bundle.n
    i_x = bundle.node_index(float(x))
    i_y = bundle.node_index(float(y))
    xs = float(bundle.x_grid[i_x])
    ys = float(bundle.x_grid[i_y])
    dual = dual_bases(bundle, ys)
    frame = _frame_kernel_from_bundle(bundle, i_x, dual)
    K = frame[:n, :n].copy()
    zero = np.zeros((n, n), dtype=complex)
    if xs >= ys:
        return KernelParts(
            lam, xs, ys, K, zero, zero.copy(), zero.copy(), K.copy(), frame
        )

    nu1, v, w = _nu1_and_vectors(model, kappa, lam)
    pi_t = _nu1_derivative(model, kappa, lam) * np.outer(v, w)
    _, pi0_t, _ = _pi0_pack(model, kappa)
    k1 = np.exp(-nu1 * (ys - xs))
    K1 = pi0_t * k1
    K2 = (pi_t - pi0_t) * k1

    nus_u = bundle._psi_mix()[2]
    j1 = int(np.argmin(np.abs(nus_u - nu1)))
    cols, clogs = bundle.psi_block(i_x)
    rows, rlogs = dual.phi_plus_rows()
    amp = np.exp(clogs[j1] + rlogs[j1])
    T1 = -amp * np.outer(cols[:n, j1], rows[j1, :n])
    K3 = T1 - pi_t * k1
    K4 = K - K1 - K2 - K3
    return KernelParts(lam, xs, ys, K, K1, K2, K3, K4, frame)


def kernel_jump(
    model: SystemModel,
    kappa: float,
    lam: complex,
    y: float,
    *,
    profile: WaveProfile | None = None,
    bundle=None,
) -> np.ndarray:
    """Diagonal jump K(y+, y) - K(y-, y) of the 2n x 2n kernel.

    Equals F(y) (S(y) F(y))^{-1} = S(y)^{-1} exactly, so the discrepancy
    against :func:`s_matrix` measures only the conditioning of the dual
    solve.
    """
    lam = complex(lam)
    if bundle is None:
        if profile is None:
            profile = _resolvent_profile(model)
        bundle = integrate_bases(model, kappa, lam, profile=profile)
    n = bundle.n
    i_y = bundle.node_index(float(y))
    dual = dual_bases(bundle, float(bundle.x_grid[i_y]))
    cols_p, logs_p = bundle.frame_plus(i_y)
    cols_q, logs_q = bundle.psi_block(i_y)
    rows_phi, rlog_phi = dual.psi_plus_rows()
    rows_psi, rlog_psi = dual.phi_plus_rows()
    above = (cols_p * np.exp(logs_p + rlog_phi)[None, :]) @ rows_phi
    below = -(cols_q * np.exp(logs_q + rlog_psi)[None, :]) @ rows_psi
    return above - below


# ---------------------------------------------------------------------------
# kernel envelope verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundFit:
    """One fitted envelope |part| <= C e^{-rate * separation}.

    ``C`` is the smallest constant covering every sampled pair; for the
    ``kernel-decay-rate`` entries C instead holds the fitted decay rate of
    |K(lambda, 0, y)| in y, to be compared against ``rate`` = r(lambda).
    """

    name: str
    lam: complex
    C: float
    rate: float
    points: int


@dataclass(eq=False)
class KernelBoundReport:
    kappa: float
    m: float
    small_cutoff: float
    entries: list[BoundFit]

    def constants(self, name: str) -> dict[complex, float]:
        return {e.lam: e.C for e in self.entries if e.name == name}

    def entry(self, name: str, lam: complex) -> BoundFit:
        for e in self.entries:
            if e.name == name and abs(e.lam - lam) < 1e-12:
                return e
        raise KeyError(f"no entry {name!r} at lambda = {lam}")


def verify_kernel_bounds(
    model: SystemModel,
    kappa: float,
    lambda_samples=(0.005, 0.01, 0.05, 10.0),
    grid=None,
    *,
    profile: WaveProfile | None = None,
) -> KernelBoundReport:
    """Fit the kernel part envelopes at sample resolvent values.

    Samples with |lambda| below three projection-ball radii use the
    small-lambda envelopes (K2 linear in |lambda|, K3 boundary-layer decay,
    K4 and the x < y < 0 combination at the calibrated rate r(lambda));
    larger samples check the whole kernel at r(lambda) plus the fitted
    spatial decay rate along y from the grid point nearest 0.
    """
    cal = rate_calibration(model, kappa)
    small_cutoff = 3.0 * cal.m
    if grid is None:
        grid = np.arange(-18.0, 18.1, 3.0)
    grid = np.asarray(grid, dtype=float)
    if profile is None:
        profile = _resolvent_profile(model)
    entries: list[BoundFit] = []
    for lam in lambda_samples:
        lam = complex(lam)
        bundle = integrate_bases(model, kappa, lam, profile=profile)
        parts = {}
        for xv in grid:
            for yv in grid:
                if xv == yv:
                    continue
                parts[(xv, yv)] = resolvent_kernel(
                    model, kappa, lam, xv, yv, bundle=bundle
                )
        rate_r = cal.C * (1.0 + math.sqrt(abs(lam)))

        def _norm(a):
            return float(np.linalg.norm(a))

        if abs(lam) <= small_cutoff:
            nu1 = _nu1_and_vectors(model, kappa, lam)[0]
            c2 = c3 = 0.0
            npair = 0
            for (xv, yv), p in parts.items():
                if xv >= yv:
                    continue
                npair += 1
                env1 = math.exp(-nu1.real * (yv - xv))
                c2 = max(c2, _norm(p.K2) / (abs(lam) * env1))
                layer = math.exp(-0.5 * kappa * max(xv, 0.0)) + math.exp(
                    -0.5 * kappa * max(yv, 0.0)
                )
                c3 = max(c3, _norm(p.K3) / (env1 * layer))
            entries.append(BoundFit("K2-small", lam, c2, nu1.real, npair))
            entries.append(BoundFit("K3-small", lam, c3, nu1.real, npair))
            c4 = max(
                _norm(p.K4) / math.exp(-rate_r * abs(xv - yv))
                for (xv, yv), p in parts.items()
            )
            entries.append(BoundFit("K4-small", lam, c4, rate_r, len(parts)))
            neg = [
                ((xv, yv), p)
                for (xv, yv), p in parts.items()
                if xv < yv < 0.0
            ]
            if neg:
                ci = max(
                    _norm(p.K1 + p.K2 + p.K3) / math.exp(-rate_r * (yv - xv))
                    for (xv, yv), p in neg
                )
                entries.append(BoundFit("improved-left", lam, ci, rate_r, len(neg)))
        else:
            ck = max(
                _norm(p.K) / math.exp(-rate_r * abs(xv - yv))
                for (xv, yv), p in parts.items()
            )
            entries.append(BoundFit("K-large", lam, ck, rate_r, len(parts)))
            x0 = float(grid[np.argmin(np.abs(grid))])
            ys = grid[grid > x0 + 0.5]
            vals = np.array([math.log(_norm(parts[(x0, yv)].K)) for yv in ys])
            fitted = -_fit_slope(ys, vals)
            entries.append(
                BoundFit("kernel-decay-rate", lam, fitted, rate_r, ys.size)
            )
    return KernelBoundReport(
        kappa=float(kappa), m=cal.m, small_cutoff=small_cutoff, entries=entries
    )


# ---------------------------------------------------------------------------
# temporal contours
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Contour:
    """Truncated spectral contour gamma(xi) with trapezoid weights.

    The center is the parabola i alpha1 u - alpha u^2 on |u| <= Xi
    (u = xi - xi0); beyond that, straight legs i alpha1 u - alpha Xi^2
    - (theta/2)(|u| - Xi), truncated once e^{Re gamma * t} < tol.  ``weights``
    are complex d-lambda trapezoid weights (the kink at the junction gets
    half-contributions from both segments), so
    integral = sum weights * F(lams) approximates the open line integral.
    Contours are conjugate-symmetric; ``half_lams``/``half_coeffs`` cover
    u >= 0 with the 1/pi reduction factor folded in, so for F with
    F(conj lam) = conj F(lam) the Cauchy integral is
    (1/2 pi i) int e^{lam t} F d lam = Im(sum half_coeffs e^{lam t} F).
    """

    alpha: float
    theta: float
    Xi: float
    xi0: float
    alpha1: float
    t: float
    tol: float
    xis: np.ndarray
    lams: np.ndarray
    weights: np.ndarray
    half_lams: np.ndarray
    half_coeffs: np.ndarray
    n_core: int
    refine: int = 0
    stabilized_core: bool = False
    _marginal: MarginalData | None = dataclass_field(default=None, repr=False)
    _model: SystemModel | None = dataclass_field(default=None, repr=False)
    _kappa: float | None = dataclass_field(default=None, repr=False)
    _gamma0_nodes: int = dataclass_field(default=801, repr=False)

    @property
    def nodes(self):
        """(xi, lambda, weight) triples along the full contour."""
        return list(zip(self.xis, self.lams, self.weights))

    def xi_max(self, t: float) -> float:
        """Truncation frequency: largest xi kept when integrating e^{lam t}."""
        extra = max(
            0.0,
            (math.log(1.0 / self.tol) / t - self.alpha * self.Xi**2) * 2.0 / self.theta,
        )
        return self.xi0 + self.Xi + extra

    def refined(self, k: int = 1) -> "Contour":
        """Same geometry with every node density doubled k times."""
        c = build_contour(
            self._marginal,
            self.alpha,
            self.theta,
            self.t,
            tol=self.tol,
            model=self._model,
            kappa=self._kappa,
            refine=self.refine + k,
            gamma0_nodes=self._gamma0_nodes,
        )
        if self.stabilized_core:
            c = c.stabilized()
        return c

    def stabilized(self) -> "Contour":
        """Contour with the central parabola flattened to the chord depth.

        The parabola is replaced by the horizontal chord Re lambda =
        -alpha Xi^2.  The chord may cross the essential contact -- it is
        admissible only for kernel parts that continue analytically through
        it -- so it skips the spectral wall certification; the frame
        continuation stays single-valued only while the chord depth remains
        inside the Jordan-free ball, which is enforced when the model is
        known.  For alpha = 0 the chord coincides with the parabola and
        self is returned.
        """
        if self.alpha == 0.0 or self.stabilized_core:
            return self
        if self._model is not None:
            m = rate_calibration(self._model, self._kappa).m
            depth = self.alpha * self.Xi**2
            if depth > m:
                raise ValueError(
                    f"stabilized chord depth alpha Xi^2 = {depth:.6g} leaves "
                    f"the Jordan-free ball (m = {m:.6g}); the analytic "
                    "continuation of the kernel parts is not tracked there"
                )
        return _assemble_contour(
            self._marginal,
            self.alpha,
            self.theta,
            self.t,
            self.tol,
            self._model,
            self._kappa,
            self.refine,
            self._gamma0_nodes,
            stabilized=True,
        )


def _leg_offsets(du0: float, dmax: float, U: float) -> np.ndarray:
    """Leg nodes measured from the junction: spacing grows from the core
    density du0 toward dmax, ending at or just past U."""
    if U <= 0.0:
        return np.empty(0)
    out = []
    u = 0.0
    while u < U:
        step = min(du0 * (1.0 + u / 0.5), dmax)
        u += step
        out.append(u)
    return np.asarray(out)


def _certify_nodes(model: SystemModel, kappa: float, lams: np.ndarray) -> None:
    """Every node must sit strictly right of the essential spectrum and
    clear of Jordan points; the marginal contact at lambda = 0 is exempt."""
    live = np.abs(lams) > 1e-12
    if np.any(live):
        pts = lams[live]
        hs = np.unique(np.round(np.abs(pts.imag), 6))
        if hs.size > 160:
            hs = hs[np.linspace(0, hs.size - 1, 160).astype(int)]
        depth = float(-min(np.min(pts.real), 0.0)) + 5.0
        walls = _essential_rightmost(model, kappa, hs, depth)
        wall_at = np.interp(np.abs(pts.imag), hs, walls)
        bad = pts.real <= wall_at
        if np.any(bad):
            k = int(np.argmax(bad))
            raise ValueError(
                f"Gamma enters spectrum: node lambda = {pts[k]:.6g} is not "
                f"strictly right of the essential curve (Re wall = {wall_at[k]:.6g})"
            )
    jd = nearest_jordan(model, kappa)
    if jd is not None:
        dist = np.minimum(np.abs(lams - jd), np.abs(lams - np.conj(jd)))
        if np.min(dist) < _JORDAN_CLEARANCE:
            raise ValueError(
                f"contour passes within {_JORDAN_CLEARANCE:g} of the Jordan "
                f"point {jd:.6g}"
            )


def _assemble_contour(
    marginal: MarginalData,
    alpha: float,
    theta: float,
    t: float,
    tol: float,
    model: SystemModel | None,
    kappa: float | None,
    refine: int,
    gamma0_nodes: int,
    *,
    stabilized: bool = False,
) -> Contour:
    a1 = marginal.alpha1
    Xi = marginal.Xi
    xi0 = marginal.xi0
    scale = 2**refine
    n0 = int(gamma0_nodes) * scale
    if n0 % 2 == 0:
        n0 += 1
    n0h = (n0 - 1) // 2
    du0 = Xi / n0h
    dmax = min(0.25, (2.0 * math.pi / 12.0) / max(a1 * t, 1e-9)) / scale
    U = max(0.0, (math.log(1.0 / tol) / t - alpha * Xi**2) * 2.0 / theta)

    u_core = np.linspace(0.0, Xi, n0h + 1)
    u_leg = Xi + _leg_offsets(du0, dmax, U)
    u_half = np.concatenate([u_core, u_leg])
    u_full = np.concatenate([-u_half[:0:-1], u_half])

    depth = -alpha * u_full**2 if not stabilized else np.full(u_full.size, -alpha * Xi**2)
    core = np.abs(u_full) <= Xi + 1e-15
    re = np.where(core, depth, -alpha * Xi**2 - 0.5 * theta * (np.abs(u_full) - Xi))
    lams = 1j * a1 * u_full + re

    # per-segment d-lambda trapezoid weights; the junction nodes collect half
    # contributions from both adjacent segments with their own gamma'
    def gamma_prime(u, on_core):
        if on_core:
            return 1j * a1 - (0.0 if stabilized else 2.0 * alpha * u)
        return 1j * a1 - 0.5 * theta * np.sign(u)

    weights = np.zeros(u_full.size, dtype=complex)
    idx_core_lo = len(u_leg)            # index of u = -Xi
    idx_core_hi = len(u_leg) + n0       # one past u = +Xi
    seg_bounds = [
        (0, idx_core_lo + 1, False),    # lower leg including the -Xi junction
        (idx_core_lo, idx_core_hi, True),
        (idx_core_hi - 1, u_full.size, False),
    ]
    for lo, hi, on_core in seg_bounds:
        if hi - lo < 2:
            continue
        uu = u_full[lo:hi]
        gp = gamma_prime(uu, on_core)
        h = np.diff(uu)
        w = np.zeros(uu.size)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        weights[lo:hi] += w * gp

    # upper half (u >= 0): its own open-path trapezoid, 1/pi folded in
    i0 = idx_core_lo + n0h  # index of u = 0
    u_up = u_full[i0:]
    lam_up = lams[i0:]
    core_up = np.abs(u_up) <= Xi + 1e-15
    w_up = np.zeros(u_up.size, dtype=complex)
    for lo, hi, on_core in ((0, n0h + 1, True), (n0h, u_up.size, False)):
        if hi - lo < 2:
            continue
        uu = u_up[lo:hi]
        gp = gamma_prime(uu, on_core)
        h = np.diff(uu)
        w = np.zeros(uu.size)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        w_up[lo:hi] += w * gp
    half_coeffs = w_up / math.pi

    if model is not None:
        if kappa is None:
            kappa = marginal.kappa
        _certify_nodes(model, kappa, lams)

    return Contour(
        alpha=float(alpha),
        theta=float(theta),
        Xi=float(Xi),
        xi0=float(xi0),
        alpha1=float(a1),
        t=float(t),
        tol=float(tol),
        xis=xi0 + u_full,
        lams=lams,
        weights=weights,
        half_lams=lam_up,
        half_coeffs=half_coeffs,
        n_core=n0,
        refine=refine,
        stabilized_core=stabilized,
        _marginal=marginal,
        _model=model,
        _kappa=kappa,
        _gamma0_nodes=gamma0_nodes,
    )


def build_contour(
    marginal: MarginalData,
    alpha: float = 0.0,
    theta: float = 0.5,
    t: float = 1.0,
    tol: float = 1e-12,
    *,
    model: SystemModel | None = None,
    kappa: float | None = None,
    refine: int = 0,
    gamma0_nodes: int = 801,
) -> Contour:
    """Build the truncated temporal contour for e^{lam t} quadrature.

    alpha must lie in [0, Re(alpha2)/2) so the parabola stays right of the
    essential curves near the contact; the legs fall off with slope theta/2
    per unit frequency and are truncated once e^{Re gamma t} < tol.  At
    least 400 nodes cover the central arc.  When ``model`` is given, every
    node is certified strictly right of the essential spectrum (the contact
    at lambda = 0 is exempt) and at distance >= 1e-4 from Jordan points.
    """
    if not 0.0 <= alpha < 0.5 * marginal.alpha2.real:
        raise ValueError(
            f"alpha must lie in [0, Re(alpha2)/2) = [0, {0.5 * marginal.alpha2.real:.6g})"
        )
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    if t <= 0.0:
        raise ValueError("t must be positive")
    return _assemble_contour(
        marginal, alpha, theta, t, tol, model, kappa, refine, gamma0_nodes
    )


def vertical_contour(r: float, *, im_max: float = 40.0, nodes: int = 1601) -> np.ndarray:
    """Vertical comparison path Re lambda = r, |Im lambda| <= im_max."""
    return r + 1j * np.linspace(-im_max, im_max, nodes)


def wedge_contour(
    r: float, gamma: float, *, im_max: float = 40.0, nodes: int = 1601
) -> np.ndarray:
    """Wedge path lambda = r + s e^{+/- i gamma} with |Im lambda| <= im_max."""
    if not 0.5 * math.pi < gamma < math.pi:
        raise ValueError("the wedge half-angle must lie in (pi/2, pi)")
    half = nodes // 2
    s_max = im_max / math.sin(gamma)
    s = np.linspace(0.0, s_max, half + 1)
    upper = r + s * np.exp(1j * gamma)
    lower = np.conj(upper[:0:-1])
    return np.concatenate([lower, upper])


# ---------------------------------------------------------------------------
# batched frame engine
# ---------------------------------------------------------------------------

class _ChunkFrames:
    """Frames, duals, and marginal data for one chunk of lambda nodes.

    Arrays are indexed (stored node, lambda, ...).  ``rows`` are the dual
    rows of (S F)^{-1}; row j pairs full-frame column j and carries the log
    scale -col_logs[j].
    """

    __slots__ = (
        "lams", "grid_s", "Mp", "Lp", "Pp", "Lpsi", "rows",
        "nu1", "pi_t", "j1",
    )

    def __init__(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)


def _scaled_cols_batch(q, logd, u):
    """Batched version of the per-column rescaling: true frame = M e^{logs}."""
    with np.errstate(divide="ignore"):
        lead = logd[..., :, None] + np.log(np.abs(u))
    logs = lead.max(axis=-2)
    mag = np.exp(lead - logs[..., None, :])
    absu = np.abs(u)
    phase = np.divide(u, absu, out=np.zeros_like(u), where=absu > 0)
    return q @ (mag * phase), logs


def _iter_frame_chunks(
    model: SystemModel,
    kappa: float,
    lams: np.ndarray,
    x_points,
    *,
    profile: WaveProfile | None,
    chunk: int | None = None,
):
    """Yield (_ChunkFrames, slice) over chunks of the lambda array.

    ``x_points`` is a sequence of x values whose nearest nodes are stored
    (the staircase fit node is always added), or None to store every node.
    """
    field = _field_for(model, kappa, profile)
    grid = field.crop_grid(None)
    n = field.n
    if chunk is None:
        chunk = _CHUNK.get(n, 96)

    # staircase fit abscissa (shared by the whole contour)
    if n == 1:
        x_fit = float(grid[-1]) - 5.0
    else:
        mat = field.a_limit(complex(lams[0]), +1)
        w_eig = np.linalg.eigvals(mat)
        nu_u0 = np.sort(w_eig.real)[n:]
        spread = float(nu_u0.max() - nu_u0.min())
        x_fit = min(float(grid[-1]) - 10.0, max(12.0, 30.0 / max(spread, 1e-6)))
    i_fit = int(np.argmin(np.abs(grid - x_fit)))

    if x_points is None:
        mask = np.ones(grid.size, dtype=bool)
    else:
        mask = np.zeros(grid.size, dtype=bool)
        for xv in x_points:
            mask[int(np.argmin(np.abs(grid - float(xv))))] = True
        mask[i_fit] = True
    s_grid = None

    lams = np.asarray(lams, dtype=complex)
    for lo in range(0, lams.size, chunk):
        sub = lams[lo : lo + chunk]
        B = sub.size
        seeds_p = np.empty((B, 2 * n, n), dtype=complex)
        seeds_m = np.empty((B, 2 * n, n), dtype=complex)
        numax = 0.0
        for b, lam in enumerate(sub):
            plus, minus, nmx, _ = _seed_pair(field, complex(lam))
            if not plus[2]:
                raise RuntimeError(
                    f"defective plus-side limit at lambda = {lam}; the contour "
                    "must avoid Jordan points"
                )
            seeds_p[b] = plus[1]
            seeds_m[b] = minus[1]
            numax = max(numax, float(nmx))
        idx, q_p, l_p, u_p = _sweep(field, sub, +1, grid, seeds_p, numax, 1, mask)
        _, q_m, l_m, u_m = _sweep(field, sub, -1, grid, seeds_m, numax, 1, mask)
        if s_grid is None:
            s_grid = grid[idx]
            p_fit = int(np.nonzero(idx == i_fit)[0][0])
            s_stack = field.s_stack(s_grid)
        Mp, Lp = _scaled_cols_batch(q_p, l_p, u_p)
        Mm, Lm = _scaled_cols_batch(q_m, l_m, u_m)

        # staircase re-mix of the minus frame against the +infinity modes
        mix = np.empty((B, n, n), dtype=complex)
        nus_u = np.empty((B, n), dtype=complex)
        for b, lam in enumerate(sub):
            a_mat = field.a_limit(complex(lam), +1)
            w_eig, vecs = np.linalg.eig(a_mat)
            order = np.lexsort((w_eig.imag, w_eig.real))
            nus_u[b] = w_eig[order][n:]
            rows_u = np.linalg.inv(vecs[:, order])[n:, :]
            content = rows_u @ Mm[p_fit, b]
            cond = np.linalg.cond(content)
            if not cond < 1e10:
                raise RuntimeError(
                    f"continued columns are degenerate at lambda = {lam} "
                    "(contour too close to a point eigenvalue)"
                )
            mix[b] = np.linalg.inv(content)
        logs_fit = Lm[p_fit]  # (B, n)
        with np.errstate(divide="ignore"):
            lead = (Lm - logs_fit[None])[..., :, None] + np.log(np.abs(mix))[None]
        lpsi = lead.max(axis=-2)
        mag = np.exp(lead - lpsi[..., None, :])
        absw = np.abs(mix)
        phase = np.divide(mix, absw, out=np.zeros_like(mix), where=absw > 0)[None]
        Pp = Mm @ (mag * phase)
        x_fit_val = float(s_grid[p_fit])
        Pp = Pp * np.exp(1j * nus_u.imag * x_fit_val)[None, :, None, :]
        Lpsi = lpsi + (nus_u.real * x_fit_val)[None]

        F = np.concatenate([Mp, Pp], axis=-1)
        try:
            rows = np.linalg.inv(s_stack[:, None] @ F)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                "dual frame singular along the contour (a node sits on a "
                "point eigenvalue)"
            ) from exc

        nu1 = np.empty(B, dtype=complex)
        pi_t = np.empty((B, n, n), dtype=complex)
        for b, lam in enumerate(sub):
            nu, v, w = _nu1_and_vectors(model, kappa, complex(lam))
            nu1[b] = nu
            pi_t[b] = _nu1_derivative(model, kappa, complex(lam)) * np.outer(v, w)
        j1 = np.argmin(np.abs(nus_u - nu1[:, None]), axis=1)

        yield (
            _ChunkFrames(
                lams=sub, grid_s=s_grid, Mp=Mp, Lp=Lp, Pp=Pp, Lpsi=Lpsi,
                rows=rows, nu1=nu1, pi_t=pi_t, j1=j1,
            ),
            slice(lo, lo + B),
        )


def _chunk_kernel_parts(ch: _ChunkFrames, px: int, py: int, n: int, pi0_t: np.ndarray):
    """Kernel parts at stored nodes (px, py) for every lambda of the chunk.

    Returns dict of (B, n, n) arrays K, K1..K4 plus the scalar k1 factors.
    """
    B = ch.lams.size
    xv = float(ch.grid_s[px])
    yv = float(ch.grid_s[py])
    ar = np.arange(B)
    if xv < yv:
        cols = ch.Pp[px]
        scale = np.exp(ch.Lpsi[px] - ch.Lpsi[py])
        rows = ch.rows[py][:, n:, :n]
        Kf = -np.einsum("bij,bj,bjk->bik", cols[:, :n, :], scale, rows)
        k1 = np.exp(-ch.nu1 * (yv - xv))
        K1 = pi0_t[None] * k1[:, None, None]
        K2 = (ch.pi_t - pi0_t[None]) * k1[:, None, None]
        colu = cols[:, :n, :][ar, :, ch.j1]
        rowu = ch.rows[py][ar, n + ch.j1, :n]
        amp = scale[ar, ch.j1]
        T1 = -np.einsum("b,bi,bj->bij", amp, colu, rowu)
        K3 = T1 - ch.pi_t * k1[:, None, None]
        K4 = Kf - K1 - K2 - K3
        return {"K": Kf, "K1": K1, "K2": K2, "K3": K3, "K4": K4, "k1": k1}
    cols = ch.Mp[px]
    scale = np.exp(ch.Lp[px] - ch.Lp[py])
    rows = ch.rows[py][:, :n, :n]
    Kf = np.einsum("bij,bj,bjk->bik", cols[:, :n, :], scale, rows)
    zero = np.zeros_like(Kf)
    return {
        "K": Kf, "K1": zero, "K2": zero, "K3": zero, "K4": Kf.copy(),
        "k1": np.zeros(B, dtype=complex),
    }


# ---------------------------------------------------------------------------
# rescaled running integrals
# ---------------------------------------------------------------------------

def _scaled_revcumsum(g: np.ndarray, rl: np.ndarray) -> np.ndarray:
    """C_i = sum_{m >= i} g_m e^{rl_m - rl_i}, stable for large Re spans."""
    re = rl.real
    band = np.floor((re - re.min()) / 250.0).astype(int)
    cuts = [0] + list(np.nonzero(np.diff(band) != 0)[0] + 1) + [g.size]
    out = np.empty(g.size, dtype=complex)
    carry = 0.0 + 0.0j
    carry_log = -np.inf
    for k in range(len(cuts) - 2, -1, -1):
        a, b = cuts[k], cuts[k + 1]
        ref = float(re[a:b].max())
        E = g[a:b] * np.exp(rl[a:b] - ref)
        c = np.cumsum(E[::-1])[::-1]
        tail = carry * math.exp(carry_log - ref) if np.isfinite(carry_log) else 0.0
        out[a:b] = (c + tail) * np.exp(ref - rl[a:b])
        carry = c[0] + tail
        carry_log = ref
    return out


def _scaled_cumsum(g: np.ndarray, rl: np.ndarray) -> np.ndarray:
    """C_i = sum_{m <= i} g_m e^{rl_m - rl_i}."""
    return _scaled_revcumsum(g[::-1], rl[::-1])[::-1]


def _suffix_trap(f: np.ndarray, rl: np.ndarray, h: float) -> np.ndarray:
    """Trapezoid T_i = int_{x_i}^{x_N} f_m e^{rl_m} dm, returned times e^{-rl_i}.

    f has shape (k, N); rl has shape (N, k) and holds the per-node log
    references (so products column(x) e^{-rl(x)} * T_i need no exponentials
    when the column logs equal -rl).
    """
    k, N = f.shape
    out = np.empty((k, N), dtype=complex)
    for j in range(k):
        C = _scaled_revcumsum(f[j], rl[:, j])
        tail = f[j, -1] * np.exp(rl[-1, j] - rl[:, j])
        out[j] = h * (C - 0.5 * f[j] - 0.5 * tail)
    return out


def _prefix_trap(f: np.ndarray, rl: np.ndarray, h: float) -> np.ndarray:
    """Trapezoid P_i = int_{x_0}^{x_i} f_m e^{rl_m} dm, times e^{-rl_i}."""
    k, N = f.shape
    out = np.empty((k, N), dtype=complex)
    for j in range(k):
        C = _scaled_cumsum(f[j], rl[:, j])
        head = f[j, 0] * np.exp(rl[0, j] - rl[:, j])
        out[j] = h * (C - 0.5 * f[j] - 0.5 * head)
    return out


# ---------------------------------------------------------------------------
# temporal Green's function
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GreenParts:
    """Temporal Green's function at (t, x, y), split along the kernel parts.

    ``g1`` is the scalar marginal quadrature (the e^{lam t} k1 integral);
    ``g1_pi`` = g1 * nu_1'(0) pi(0) is its rank-one matrix part.  All
    arrays are real n x n (the contours are conjugate-symmetric).
    """

    t: float
    x: float
    y: float
    g1: float
    g1_pi: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g4: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.g1_pi + self.g2 + self.g3 + self.g4


def _accumulate_green(
    model: SystemModel,
    kappa: float,
    contour: Contour,
    t: float,
    x: float,
    y: float,
    profile: WaveProfile | None,
    which: tuple[str, ...],
) -> dict[str, np.ndarray]:
    n = model.n
    _, pi0_t, _ = _pi0_pack(model, kappa)
    acc = {name: 0.0 for name in which}
    acc_g1 = 0.0
    for ch, sl in _iter_frame_chunks(
        model, kappa, contour.half_lams, [x, y], profile=profile
    ):
        coeff = contour.half_coeffs[sl] * np.exp(ch.lams * t)
        px = int(np.argmin(np.abs(ch.grid_s - x)))
        py = int(np.argmin(np.abs(ch.grid_s - y)))
        parts = _chunk_kernel_parts(ch, px, py, n, pi0_t)
        for name in which:
            acc[name] = acc[name] + np.einsum("b,bij->ij", coeff, parts[name]).imag
        acc_g1 = acc_g1 + float((coeff @ parts["k1"]).imag)
    acc["g1"] = acc_g1
    return acc


def green_kernel(
    model: SystemModel,
    kappa: float,
    t: float,
    x: float,
    y: float,
    contour: Contour | None = None,
    *,
    profile: WaveProfile | None = None,
    marginal: MarginalData | None = None,
    stabilized: bool = True,
    check: bool = False,
) -> GreenParts:
    """Pointwise temporal Green's function G(t, x, y) with its four parts.

    G_j = (1/2 pi i) int_Gamma e^{lam t} K_j(lam, x, y) d lam.  Requires
    t >= 0.1 (short times belong to the time stepper).  With alpha > 0 the
    decaying remainder G4 -- and, for x < y < 0, all parts -- integrate over
    the stabilized sub-path Gamma_s; the default alpha = 0 contour is its
    own stabilization.  ``check=True`` repeats the quadrature with doubled
    node density and raises if the Richardson error estimate exceeds 1e-6.
    """
    if t < 0.1:
        raise ValueError("t < 0.1: delegate short times to the PDE stepper")
    if profile is None:
        profile = _green_profile(model)
    if contour is None:
        if marginal is None:
            marginal = _marginal_for(model, kappa)
        contour = build_contour(marginal, 0.0, 0.5, t, model=model, kappa=kappa)
    if t < contour.t - 1e-12:
        raise ValueError(
            f"contour truncated for t = {contour.t}; it cannot be reused at "
            f"smaller t = {t}"
        )

    def _evaluate(c: Contour) -> GreenParts:
        c_s = c.stabilized() if stabilized else c
        deep_left = x < y < 0.0
        if c_s is c:
            acc = _accumulate_green(
                model, kappa, c, t, x, y, profile, ("K1", "K2", "K3", "K4")
            )
            g1_pi, g2, g3, g4 = acc["K1"], acc["K2"], acc["K3"], acc["K4"]
            g1 = acc["g1"]
        elif deep_left:
            acc = _accumulate_green(
                model, kappa, c_s, t, x, y, profile, ("K1", "K2", "K3", "K4")
            )
            g1_pi, g2, g3, g4 = acc["K1"], acc["K2"], acc["K3"], acc["K4"]
            g1 = acc["g1"]
        else:
            acc = _accumulate_green(
                model, kappa, c, t, x, y, profile, ("K1", "K2", "K3")
            )
            acc_s = _accumulate_green(model, kappa, c_s, t, x, y, profile, ("K4",))
            g1_pi, g2, g3 = acc["K1"], acc["K2"], acc["K3"]
            g4 = acc_s["K4"]
            g1 = acc["g1"]
        return GreenParts(t=t, x=x, y=y, g1=g1, g1_pi=g1_pi, g2=g2, g3=g3, g4=g4)

    coarse = _evaluate(contour)
    if not check:
        return coarse
    fine = _evaluate(contour.refined(1))
    err = float(np.linalg.norm(fine.total - coarse.total)) / 3.0
    if err > 1e-6:
        raise RuntimeError(
            f"Richardson estimate > 1e-6 (estimate {err:.3e}); refine the "
            "contour or enlarge t"
        )
    return fine


def g1_scan(
    model: SystemModel,
    kappa: float,
    t: float,
    x: float,
    ys,
    contour: Contour | None = None,
    *,
    marginal: MarginalData | None = None,
) -> np.ndarray:
    """Scalar marginal Green's factor g1(t, x, y) over an array of y.

    Needs only the tracked root nu_1 along the contour -- no frame sweeps --
    so it is cheap enough for transport scans.  g1 vanishes for y <= x.
    """
    if t < 0.1:
        raise ValueError("t < 0.1: delegate short times to the PDE stepper")
    if contour is None:
        if marginal is None:
            marginal = _marginal_for(model, kappa)
        contour = build_contour(marginal, 0.0, 0.5, t, model=model, kappa=kappa)
    ys = np.asarray(ys, dtype=float)
    nu1 = np.array(
        [_nu1_and_vectors(model, kappa, complex(l))[0] for l in contour.half_lams]
    )
    coeff = contour.half_coeffs * np.exp(contour.half_lams * t)
    dy = ys - x
    vals = (coeff @ np.exp(-np.outer(nu1, np.maximum(dy, 0.0)))).imag
    return np.where(dy > 0.0, vals, 0.0)


def gaussian_envelope(t, x, y, kappa_env: float, sigma: float):
    """Transported Gaussian envelope (t + y - x)^{-1/2}
    e^{-kappa_env (y - x - sigma t)^2 / (t + y - x)}; zero when t + y - x <= 0.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    base = t + y - x
    safe = np.where(base > 0.0, base, 1.0)
    val = safe**-0.5 * np.exp(-kappa_env * (y - x - sigma * t) ** 2 / safe)
    out = np.where(base > 0.0, val, 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# semigroup application
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SemigroupParts:
    """e^{tL} v0 on the grid, split along the kernel parts.

    ``s1_pi`` carries the marginal transport (pi-projected k1 quadrature);
    s2/s3/s4 follow K2/K3/K4.  The total equals their sum exactly: every
    part integrates over the same contour and s4 is the remainder of the
    full kernel contraction.
    """

    t: float
    grid: np.ndarray
    s1_pi: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    s4: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.s1_pi + self.s2 + self.s3 + self.s4


def apply_semigroup(
    model: SystemModel,
    kappa: float,
    t: float,
    v0,
    *,
    profile: WaveProfile | None = None,
    contour: Contour | None = None,
    marginal: MarginalData | None = None,
):
    """Apply the linear semigroup: (e^{tL} v0, SemigroupParts).

    v0 is sampled on the profile grid (shape (N,) for scalar models or
    (n, N)); the y-integrals use the trapezoid rule on that grid.  Real
    data only -- the conjugate-symmetric contour reduction assumes it.
    Raises for t < 0.1 and for initial data that oscillate at the grid
    scale (Nyquist check).
    """
    if t < 0.1:
        raise ValueError("t < 0.1: delegate short times to the PDE stepper")
    if profile is None:
        profile = _green_profile(model)
    field = _field_for(model, kappa, profile)
    grid = field.crop_grid(None)
    n = field.n

    v0 = np.asarray(v0)
    if np.iscomplexobj(v0):
        raise ValueError("apply_semigroup expects real initial data")
    squeeze = v0.ndim == 1
    v0 = np.atleast_2d(v0).astype(float)
    if v0.shape != (n, profile.grid.size) and v0.shape != (n, grid.size):
        raise ValueError(
            f"v0 must have shape ({n}, {profile.grid.size}) on the profile grid"
        )
    if v0.shape[1] != grid.size:
        lo = int(np.searchsorted(profile.grid, grid[0] - 1e-12))
        v0 = v0[:, lo : lo + grid.size]
    d2 = v0[:, 2:] - 2.0 * v0[:, 1:-1] + v0[:, :-2]
    peak = float(np.max(np.abs(v0)))
    if peak == 0.0:
        raise ValueError("v0 vanishes identically")
    if float(np.max(np.abs(d2))) / (4.0 * peak) > 0.5:
        raise ValueError("unresolved v0 (grid Nyquist check)")

    if contour is None:
        if marginal is None:
            marginal = _marginal_for(model, kappa)
        contour = build_contour(marginal, 0.0, 0.5, t, model=model, kappa=kappa)
    if t < contour.t - 1e-12:
        raise ValueError(
            f"contour truncated for t = {contour.t}; it cannot be reused at "
            f"smaller t = {t}"
        )

    h = float(grid[1] - grid[0])
    _, pi0_t, _ = _pi0_pack(model, kappa)
    out = {k: np.zeros((n, grid.size)) for k in ("s1", "s2", "s3", "s4", "tot")}
    v0c = v0.astype(complex)
    for ch, sl in _iter_frame_chunks(
        model, kappa, contour.half_lams, None, profile=profile
    ):
        coeff = contour.half_coeffs[sl] * np.exp(ch.lams * t)
        for b in range(ch.lams.size):
            rowsb = ch.rows[:, b]
            f_psi = np.einsum("Njc,cN->jN", rowsb[:, n:, :n], v0c)
            T = _suffix_trap(f_psi, -ch.Lpsi[:, b, :], h)
            colsu_psi = ch.Pp[:, b, :n, :]
            v_right = -np.einsum("Ncj,jN->cN", colsu_psi, T)
            f_phi = np.einsum("Njc,cN->jN", rowsb[:, :n, :n], v0c)
            P = _prefix_trap(f_phi, -ch.Lp[:, b, :], h)
            v_left = np.einsum("Ncj,jN->cN", ch.Mp[:, b, :n, :], P)
            total = v_right + v_left

            rl1 = np.repeat((-ch.nu1[b]) * grid[:, None], n, axis=1)
            q1 = _suffix_trap(v0c, rl1, h)
            s1 = pi0_t @ q1
            s2 = (ch.pi_t[b] - pi0_t) @ q1
            j1 = int(ch.j1[b])
            s3 = -(colsu_psi[:, :, j1].T * T[j1][None, :]) - ch.pi_t[b] @ q1
            s4 = total - s1 - s2 - s3

            c = coeff[b]
            out["s1"] += (c * s1).imag
            out["s2"] += (c * s2).imag
            out["s3"] += (c * s3).imag
            out["s4"] += (c * s4).imag
            out["tot"] += (c * total).imag

    parts = SemigroupParts(
        t=float(t), grid=grid,
        s1_pi=out["s1"], s2=out["s2"], s3=out["s3"], s4=out["s4"],
    )
    v_t = out["tot"]
    if squeeze and n == 1:
        v_t = v_t[0]
    return v_t, parts


# ---------------------------------------------------------------------------
# transported decay check
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TransportedDecayReport:
    """Fit of ||e^{tL} v0|| <= C [rho(sigma t / 4)^{-1} ||rho pi v0||
    + (1 + t)^{-1/2} ||v0||] over a list of times.

    ``C`` is the least-squares fitted constant, ``worst_ratio`` the largest
    observed lhs / (C rhs).  ``applicable`` is False when the weighted norm
    ||rho pi v0|| is dominated by the grid boundary (it has not converged on
    the window, e.g. for the marginal mode itself), in which case no
    evolution is run.
    """

    applicable: bool
    C: float
    worst_ratio: float
    sigma: float
    entries: list[tuple[float, float, float]]
    reason: str = ""


def transported_decay_check(
    model: SystemModel,
    kappa: float,
    rho,
    v0,
    t_list,
    *,
    profile: WaveProfile | None = None,
) -> TransportedDecayReport:
    """Check the transported-weight decay estimate on sampled times.

    rho is a callable subexponential weight; the estimate compares the
    sup norm of e^{tL} v0 against the transported weighted norm of the
    marginal projection plus diffusive decay of the rest.
    """
    if profile is None:
        profile = _green_profile(model)
    field = _field_for(model, kappa, profile)
    grid = field.crop_grid(None)
    n = field.n
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    if v0.shape[1] != grid.size:
        lo = int(np.searchsorted(profile.grid, grid[0] - 1e-12))
        v0 = v0[:, lo : lo + grid.size]

    dp, _, sigma = _pi0_pack(model, kappa)
    pi0 = projection(model, kappa, 0.0)
    piv0 = np.einsum("cd,dN->cN", pi0, v0.astype(complex)).real
    rho_vals = np.asarray(rho(grid), dtype=float)
    weighted = rho_vals[None, :] * np.abs(piv0)

    # the weighted norm must be carried by the interior of the window
    edge = grid >= grid[-1] - 5.0
    interior = grid <= 0.5 * grid[-1]
    edge_level = float(weighted[:, edge].max()) if np.any(edge) else 0.0
    bulk_level = float(weighted[:, interior].max())
    if edge_level > max(bulk_level, 1e-300):
        return TransportedDecayReport(
            applicable=False, C=math.inf, worst_ratio=math.inf, sigma=sigma,
            entries=[],
            reason=(
                "||rho pi v0|| is dominated by the grid boundary; the "
                "transported norm has not converged on the window"
            ),
        )

    norm_w = float(np.max(weighted))
    norm_0 = float(np.max(np.abs(v0)))
    entries = []
    for t in t_list:
        v_t, _ = apply_semigroup(model, kappa, float(t), v0, profile=profile)
        lhs = float(np.max(np.abs(v_t)))
        den = float(np.ravel(rho(np.array([sigma * t / 4.0])))[0])
        rhs = norm_w / den + norm_0 / math.sqrt(1.0 + t)
        entries.append((float(t), lhs, rhs))
    logs = [math.log(l) - math.log(r) for _, l, r in entries]
    C = math.exp(sum(logs) / len(logs))
    worst = max(l / (C * r) for _, l, r in entries)
    return TransportedDecayReport(
        applicable=True, C=C, worst_ratio=worst, sigma=sigma, entries=entries
    )


# ---------------------------------------------------------------------------
# contour equivalence
# ---------------------------------------------------------------------------

def _path_nodes(path) -> tuple[np.ndarray, np.ndarray]:
    """(lams, d-lambda trapezoid weights) of a Contour or complex polyline."""
    if isinstance(path, Contour):
        return path.lams, path.weights
    lams = np.asarray(path, dtype=complex)
    if lams.ndim != 1 or lams.size < 2:
        raise ValueError("a contour path needs at least two nodes")
    w = np.zeros(lams.size, dtype=complex)
    d = np.diff(lams)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return lams, w


def contour_equivalence(
    model: SystemModel,
    kappa: float,
    t: float,
    x: float,
    y: float,
    path_a,
    path_b,
    *,
    profile: WaveProfile | None = None,
) -> float:
    """Relative difference of int e^{lam t} K(lam, x, y) d lam on two paths.

    Both paths must be admissible: strictly right of the essential spectrum
    (the marginal contact is exempt) and clear of Jordan points; Cauchy's
    theorem then makes the integrals path-independent up to the truncated
    tails.  Returns |I_A - I_B|_F / max(|I_A|_F, 1e-30).
    """
    if profile is None:
        profile = _green_profile(model)
    vals = []
    for path in (path_a, path_b):
        lams, w = _path_nodes(path)
        if not isinstance(path, Contour):
            _certify_nodes(model, kappa, lams)
        n = model.n
        acc = np.zeros((n, n), dtype=complex)
        for ch, sl in _iter_frame_chunks(model, kappa, lams, [x, y], profile=profile):
            coeff = w[sl] * np.exp(ch.lams * t)
            px = int(np.argmin(np.abs(ch.grid_s - x)))
            py = int(np.argmin(np.abs(ch.grid_s - y)))
            parts = _chunk_kernel_parts(ch, px, py, n, np.zeros((n, n)))
            acc += np.einsum("b,bij->ij", coeff, parts["K"])
        vals.append(acc)
    ia, ib = vals
    return float(np.linalg.norm(ia - ib) / max(np.linalg.norm(ia), 1e-30))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_GREEN_FIELDS = ("g1_pi", "g2", "g3", "g4")


def save_green_kernel(path, parts) -> None:
    """Write GreenParts (one or a list) to CSV, one row per (t, x, y, i, j)."""
    if isinstance(parts, GreenParts):
        parts = [parts]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["t", "x", "y", "row", "col"]
        for name in _GREEN_FIELDS + ("total",):
            header += [f"re_{name}", f"im_{name}"]
        writer.writerow(header)
        for p in parts:
            n = p.g1_pi.shape[0]
            total = p.total
            for i in range(n):
                for j in range(n):
                    row = [repr(float(p.t)), repr(float(p.x)), repr(float(p.y)), i, j]
                    for arr in (p.g1_pi, p.g2, p.g3, p.g4, total):
                        val = complex(arr[i, j])
                        row += [repr(val.real), repr(val.imag)]
                    writer.writerow(row)


def load_green_kernel(path) -> list[dict]:
    """Read rows written by :func:`save_green_kernel` as dicts of floats."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                {
                    k: (int(v) if k in ("row", "col") else float(v))
                    for k, v in rec.items()
                }
            )
    return out
