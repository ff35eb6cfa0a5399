"""Evans-function machinery for the weighted eigenvalue problem.

The weighted linearization lambda v = Omega^{-1} A (Omega v) is recast as a
first-order system Phi' = A(lambda, x) Phi in the variable Phi = (v, v').
Bases spanning the directions that decay at each end are integrated toward
the matching point with QR rescaling (positive real diagonal), the Evans
determinant is assembled from the meeting frames, and dual bases follow
algebraically from the pairing matrix S.  Winding numbers of the Evans
function along closed contours count point spectrum; rectangle scans locate
values of lambda where the asymptotic spatial eigenvalues become defective.

Values of the Evans function are basis-relative: only its zero set and
winding numbers are invariant under the choices made here (seed
normalization, phase alignment).  The implementation fixes deterministic
conventions so that scans and reruns are reproducible.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .model import SystemModel
from .profile import WaveProfile, default_profile
from .spectrum import (
    _discriminant_resultant,
    _spatial_roots,
    essential_curves,
    nearest_jordan,
    spatial_eigenvalues,
)
from .weights import OmegaWeight, build_omega

__all__ = [
    "BasisBundle",
    "CoefficientField",
    "DualBasis",
    "EvansValue",
    "FirstOrderSystem",
    "circle_contour",
    "coefficient_matrices",
    "dual_bases",
    "evans",
    "evans_at_origin",
    "evans_scan",
    "first_order_system",
    "integrate_bases",
    "jordan_scan",
    "load_evans_scan",
    "s_matrix",
    "save_evans_scan",
    "sector_ball_contour",
    "winding_number",
]

_COEFF_TOL = 1e-13  # relative deviation from the limit states defining x_cut


# ---------------------------------------------------------------------------
# weighted coefficients and the first-order system
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CoefficientField:
    """Coefficients of the weighted operator and their asymptotic limits.

    The conjugated operator acts as ell2 v'' + ell1(x) v' + ell0(x) v with

        ell2 = d,
        ell1 = 2 d omega + Jf(ubar) + c,
        ell0 = d (omega' + omega^2) + (Jf(ubar) + c) omega + Jg(ubar)
               + d/dx Jf(ubar),

    omega = Omega'/Omega.  Beyond ``x_cut`` the profile is replaced by its
    rest states, so the returned matrices equal the limits exactly there.
    """

    model: SystemModel
    kappa: float
    profile: WaveProfile
    omega: OmegaWeight

    def __post_init__(self) -> None:
        self.n = self.model.n
        self._interp = self.profile.interpolator()
        grid = self.profile.grid
        scale = 1.0 + max(
            float(np.max(np.abs(self.model.U_plus))),
            float(np.max(np.abs(self.model.U_minus))),
        )
        dev_plus = (
            np.max(np.abs(self.profile.values - self.model.U_plus[:, None]), axis=0)
            + np.max(np.abs(self.profile.derivative), axis=0)
        ) / scale
        dev_minus = (
            np.max(np.abs(self.profile.values - self.model.U_minus[:, None]), axis=0)
            + np.max(np.abs(self.profile.derivative), axis=0)
        ) / scale
        live = np.nonzero(dev_plus > _COEFF_TOL)[0]
        idx = min(live[-1] + 1, grid.size - 1) if live.size else 0
        self.x_cut_plus = max(float(grid[idx]), 1.0)
        live = np.nonzero(dev_minus > _COEFF_TOL)[0]
        idx = max(live[0] - 1, 0) if live.size else grid.size - 1
        self.x_cut_minus = min(float(grid[idx]), -1.0)
        self._limits: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._stage_cache: dict[tuple, np.ndarray] = {}

    # -- pointwise data -------------------------------------------------------

    def _states(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Profile values/derivatives with the tails clamped to the rest states."""
        u, du = self._interp(np.clip(x, self.x_cut_minus, self.x_cut_plus))
        right = x >= self.x_cut_plus
        left = x <= self.x_cut_minus
        if np.any(right):
            u[:, right] = self.model.U_plus[:, None]
            du[:, right] = 0.0
        if np.any(left):
            u[:, left] = self.model.U_minus[:, None]
            du[:, left] = 0.0
        return u, du

    def coefficients(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(ell0, ell1, ell1') stacks of shape (len(x), n, n)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        u, du = self._states(x)
        om = np.asarray(self.omega.log_derivative(x), dtype=complex)
        omp = np.asarray(self.omega.log_derivative_dx(x), dtype=complex)
        Jf = np.moveaxis(np.asarray(self.model.Jf(u), dtype=complex), -1, 0)
        Jg = np.moveaxis(np.asarray(self.model.Jg(u), dtype=complex), -1, 0)
        Hf = np.moveaxis(np.asarray(self.model.Jf_dx(u, du), dtype=complex), -1, 0)
        eye = np.eye(self.n)
        diag_d = np.diag(self.model.d).astype(complex)
        adv = Jf + self.model.c * eye
        ell1 = 2.0 * om[:, None, None] * diag_d + adv
        ell0 = (
            (omp + om**2)[:, None, None] * diag_d
            + om[:, None, None] * adv
            + Jg
            + Hf
        )
        ell1_dx = 2.0 * omp[:, None, None] * diag_d + Hf
        return ell0, ell1, ell1_dx

    def a0_stack(self, x) -> np.ndarray:
        """A(lambda=0, x) stacks; the lambda term is rank n and added separately."""
        ell0, ell1, _ = self.coefficients(x)
        m = ell0.shape[0]
        n = self.n
        d_col = np.asarray(self.model.d, dtype=complex)[:, None]
        out = np.zeros((m, 2 * n, 2 * n), dtype=complex)
        out[:, :n, n:] = np.eye(n)
        out[:, n:, :n] = -ell0 / d_col
        out[:, n:, n:] = -ell1 / d_col
        return out

    def b_stack(self, lam: complex, x) -> np.ndarray:
        """Transport matrices for dual rows, phi~' = phi~ B(lambda, x)."""
        ell0, ell1, ell1_dx = self.coefficients(x)
        m = ell0.shape[0]
        n = self.n
        d_row = np.asarray(self.model.d, dtype=complex)[None, :]
        out = np.zeros((m, 2 * n, 2 * n), dtype=complex)
        out[:, :n, n:] = (lam * np.eye(n) - ell0 + ell1_dx) / d_row
        out[:, n:, :n] = np.eye(n)
        out[:, n:, n:] = ell1 / d_row
        return out

    def s_stack(self, x) -> np.ndarray:
        """Pairing matrices S = [[-ell1, -ell2], [ell2, 0]]."""
        _, ell1, _ = self.coefficients(x)
        m = ell1.shape[0]
        n = self.n
        diag_d = np.diag(self.model.d).astype(complex)
        out = np.zeros((m, 2 * n, 2 * n), dtype=complex)
        out[:, :n, :n] = -ell1
        out[:, :n, n:] = -diag_d
        out[:, n:, :n] = diag_d
        return out

    def s_stack_dx(self, x) -> np.ndarray:
        _, _, ell1_dx = self.coefficients(x)
        m = ell1_dx.shape[0]
        n = self.n
        out = np.zeros((m, 2 * n, 2 * n), dtype=complex)
        out[:, :n, :n] = -ell1_dx
        return out

    # -- asymptotics -----------------------------------------------------------

    def limit_coefficients(self, sign: int) -> tuple[np.ndarray, np.ndarray]:
        """(ell0, ell1) at the rest state on the given side (+1 or -1)."""
        sign = 1 if sign > 0 else -1
        if sign not in self._limits:
            x_rep = self.x_cut_plus + 5.0 if sign > 0 else self.x_cut_minus - 5.0
            ell0, ell1, _ = self.coefficients([x_rep])
            self._limits[sign] = (ell0[0], ell1[0])
        return self._limits[sign]

    def a_limit(self, lam: complex, sign: int) -> np.ndarray:
        ell0, ell1 = self.limit_coefficients(sign)
        n = self.n
        d_col = np.asarray(self.model.d, dtype=complex)[:, None]
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, n:] = np.eye(n)
        out[n:, :n] = (lam * np.eye(n) - ell0) / d_col
        out[n:, n:] = -ell1 / d_col
        return out

    def b_limit(self, lam: complex, sign: int) -> np.ndarray:
        ell0, ell1 = self.limit_coefficients(sign)
        n = self.n
        d_row = np.asarray(self.model.d, dtype=complex)[None, :]
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, n:] = (lam * np.eye(n) - ell0) / d_row
        out[n:, :n] = np.eye(n)
        out[n:, n:] = ell1 / d_row
        return out

    def crop_grid(self, L: float | None = None) -> np.ndarray:
        grid = self.profile.grid
        if L is None or L >= float(grid[-1]) - 1e-9:
            return grid
        if L < max(self.x_cut_plus, -self.x_cut_minus) + 0.5:
            raise ValueError(
                f"L = {L} does not clear the transition region "
                f"[{self.x_cut_minus}, {self.x_cut_plus}]"
            )
        hi = int(np.searchsorted(grid, L + 1e-12, side="right"))
        lo = int(np.searchsorted(grid, -L - 1e-12, side="left"))
        return grid[lo:hi]

    # -- cached integrator tables ----------------------------------------------

    def stage_tables(self, grid: np.ndarray, direction: int) -> np.ndarray:
        """A0 at the Runge-Kutta stage abscissae of every leg of ``grid``."""
        key = (float(grid[0]), float(grid[-1]), grid.size, int(direction))
        if key not in self._stage_cache:
            h = np.diff(grid)
            offs = _DP_C_UNIQUE[:, None]
            if direction > 0:  # sweep runs downward through each leg
                xs = grid[1:][None, :] - offs * h[None, :]
            else:
                xs = grid[:-1][None, :] + offs * h[None, :]
            stacks = self.a0_stack(xs.ravel())
            self._stage_cache[key] = stacks.reshape(
                len(_DP_C_UNIQUE), grid.size - 1, 2 * self.n, 2 * self.n
            )
        return self._stage_cache[key]


@dataclass(eq=False)
class FirstOrderSystem:
    """First-order form of the weighted eigenvalue problem.

    ``A(lam, x)`` propagates solution columns, ``B(lam, x)`` propagates dual
    rows, and the ``*_plus``/``*_minus`` methods return the constant
    asymptotic matrices.  Beyond ``x_cut`` the variable matrices equal the
    limits exactly.
    """

    field: CoefficientField

    def A(self, lam: complex, x: float) -> np.ndarray:
        out = self.field.a0_stack([x])[0]
        n = self.field.n
        out[n:, :n] += lam * np.eye(n) / np.asarray(self.field.model.d)[:, None]
        return out

    def B(self, lam: complex, x: float) -> np.ndarray:
        return self.field.b_stack(lam, [x])[0]

    def A_plus(self, lam: complex) -> np.ndarray:
        return self.field.a_limit(lam, +1)

    def A_minus(self, lam: complex) -> np.ndarray:
        return self.field.a_limit(lam, -1)

    def B_plus(self, lam: complex) -> np.ndarray:
        return self.field.b_limit(lam, +1)

    def B_minus(self, lam: complex) -> np.ndarray:
        return self.field.b_limit(lam, -1)

    @property
    def x_cut(self) -> tuple[float, float]:
        return (self.field.x_cut_minus, self.field.x_cut_plus)


_FIELD_CACHE: dict[tuple, tuple] = {}


def _field_for(
    model: SystemModel, kappa: float, profile: WaveProfile | None = None
) -> CoefficientField:
    key = (id(model), float(kappa), None if profile is None else id(profile))
    hit = _FIELD_CACHE.get(key)
    if hit is not None:
        return hit[0]
    prof = profile if profile is not None else default_profile(model)
    field = CoefficientField(model, float(kappa), prof, build_omega(kappa))
    if len(_FIELD_CACHE) > 32:
        _FIELD_CACHE.clear()
    _FIELD_CACHE[key] = (field, model, profile)
    return field


def first_order_system(
    model: SystemModel, kappa: float, profile: WaveProfile | None = None
) -> FirstOrderSystem:
    return FirstOrderSystem(_field_for(model, kappa, profile))


def coefficient_matrices(
    model: SystemModel, kappa: float, lam: complex, x: float, *,
    profile: WaveProfile | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) of the first-order system at the point x."""
    system = first_order_system(model, kappa, profile)
    return system.A(lam, x), system.B(lam, x)


def s_matrix(
    model: SystemModel, kappa: float, x, *, profile: WaveProfile | None = None
) -> np.ndarray:
    """Pairing matrix S(x); stacked when x is an array."""
    field = _field_for(model, kappa, profile)
    out = field.s_stack(x)
    return out[0] if np.isscalar(x) or np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# Dormand-Prince integrator over the coefficient tables
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_C_UNIQUE = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_STAGE_MAP = np.array([0, 1, 2, 3, 4, 5, 5])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = _DP_B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)

_RTOL = 1e-10
_ATOL = 1e-13


def _apply_system(a0: np.ndarray, lam: np.ndarray, inv_d: np.ndarray, y: np.ndarray):
    """A(lam, x) y for a batch: y has shape (B, 2n, k)."""
    n = inv_d.size
    out = a0 @ y
    out[:, n:, :] += lam[:, None, None] * inv_d[None, :, None] * y[:, :n, :]
    return out


def _dp_step(stage_mats, y, dx, lam, inv_d):
    """One embedded step; returns (y_new, max relative error estimate)."""
    ks = []
    for s in range(7):
        ys = y
        if s:
            acc = _DP_A[s][0] * ks[0]
            for j in range(1, s):
                if _DP_A[s][j] != 0.0:
                    acc = acc + _DP_A[s][j] * ks[j]
            ys = y + dx * acc
        ks.append(_apply_system(stage_mats[_DP_STAGE_MAP[s]], lam, inv_d, ys))
    y_new = y + dx * (
        _DP_B5[0] * ks[0]
        + _DP_B5[2] * ks[2]
        + _DP_B5[3] * ks[3]
        + _DP_B5[4] * ks[4]
        + _DP_B5[5] * ks[5]
    )
    err = dx * (
        _DP_ERR[0] * ks[0]
        + _DP_ERR[2] * ks[2]
        + _DP_ERR[3] * ks[3]
        + _DP_ERR[4] * ks[4]
        + _DP_ERR[5] * ks[5]
        + _DP_ERR[6] * ks[6]
    )
    scale = _ATOL + _RTOL * np.max(np.abs(y_new))
    return y_new, float(np.max(np.abs(err)) / scale)


def _integrate_leg(field, x_from, x_to, m, lam, inv_d, y, cached=None):
    """Propagate a frame across one leg with m substeps; returns (y, err)."""
    worst = 0.0
    if m == 1 and cached is not None:
        y, worst = _dp_step(cached, y, x_to - x_from, lam, inv_d)
        return y, worst
    dx = (x_to - x_from) / m
    for i in range(m):
        x0 = x_from + i * dx
        xs = x0 + _DP_C_UNIQUE * dx
        mats = field.a0_stack(xs)
        y, err = _dp_step(mats, y, dx, lam, inv_d)
        worst = max(worst, err)
    return y, worst


def _positive_qr(y: np.ndarray):
    """Stacked reduced QR with positive real diagonal of R."""
    k = y.shape[-1]
    if k == 1:
        norms = np.linalg.norm(y, axis=1)  # (B, 1)
        if np.any(norms == 0.0):
            raise RuntimeError("basis column collapsed during integration")
        q = y / norms[:, None, :]
        r = norms[:, None, :].astype(complex)
        return q, r
    q, r = np.linalg.qr(y)
    diag = r[:, np.arange(k), np.arange(k)]
    mag = np.abs(diag)
    if np.any(mag == 0.0):
        raise RuntimeError("basis frame became rank deficient during integration")
    ph = diag / mag
    q = q * ph[:, None, :]
    r = np.conj(ph)[:, :, None] * r
    return q, r


def _sweep(field, lam_arr, direction, grid, seeds, numax, substeps, store_mask):
    """QR-rescaled frame integration along ``grid``.

    direction +1 starts at grid[-1] and runs down; -1 starts at grid[0] and
    runs up.  Returns (stored grid indices, Q, logD, U) indexed in grid
    order; the true frame at a stored node is Q diag(e^logD) U.
    """
    lam_arr = np.asarray(lam_arr, dtype=complex)
    batch = lam_arr.size
    n = field.n
    k = seeds.shape[-1]
    inv_d = 1.0 / np.asarray(field.model.d, dtype=float)
    if seeds.ndim == 2:
        seeds = np.broadcast_to(seeds, (batch,) + seeds.shape)
    q, r = _positive_qr(seeds.astype(complex))
    diag = np.abs(r[:, np.arange(k), np.arange(k)])
    logd = np.log(diag)
    u = r / diag[:, :, None]

    stages = field.stage_tables(grid, direction)
    nlegs = grid.size - 1
    cap = min(0.05, 0.5 / max(float(numax), 1e-12))

    stored_idx = np.nonzero(store_mask)[0]
    pos = {int(g): p for p, g in enumerate(stored_idx)}
    s_count = stored_idx.size
    qs = np.empty((s_count, batch, 2 * n, k), dtype=complex)
    ls = np.empty((s_count, batch, k), dtype=float)
    us = np.empty((s_count, batch, k, k), dtype=complex)

    def put(i_node):
        p = pos.get(int(i_node))
        if p is not None:
            qs[p] = q
            ls[p] = logd
            us[p] = u

    start = nlegs if direction > 0 else 0
    put(start)
    legs = range(nlegs - 1, -1, -1) if direction > 0 else range(nlegs)
    for j in legs:
        if direction > 0:
            x_from, x_to = float(grid[j + 1]), float(grid[j])
            target = j
        else:
            x_from, x_to = float(grid[j]), float(grid[j + 1])
            target = j + 1
        width = abs(x_to - x_from)
        m = substeps * max(1, math.ceil(width / cap))
        cached = stages[:, j] if m == 1 else None
        while True:
            y, err = _integrate_leg(field, x_from, x_to, m, lam_arr, inv_d, q, cached)
            if err <= 1.0 or m >= 512 * substeps:
                break
            m *= 2
            cached = None
        if err > 1.0:
            raise RuntimeError(
                f"integration failed to meet tolerance on [{x_from}, {x_to}]"
            )
        if not np.all(np.isfinite(y)):
            raise RuntimeError("numerical overflow during basis integration")
        q, r = _positive_qr(y)
        diag = np.abs(r[:, np.arange(k), np.arange(k)])
        rel = np.exp(logd[:, None, :] - logd[:, :, None])  # (B, i, jcol): e^{ld_j-ld_i}
        rhat = (r / diag[:, :, None]) * rel
        u = rhat @ u
        u[:, np.arange(k), np.arange(k)] = 1.0
        logd = logd + np.log(diag)
        put(target)
    return stored_idx, qs, ls, us


# ---------------------------------------------------------------------------
# asymptotic seed frames
# ---------------------------------------------------------------------------

def _split_basis(field, lam, sign):
    """Seed frame of the limit matrix on one side.

    sign +1 returns the n most stable directions (Re nu ascending: dominant
    first for the downward sweep); sign -1 the n most unstable (Re nu
    descending).  Falls back to an orthonormal invariant-subspace basis when
    the group is defective; on the plus side that situation is reported as an
    error because the continued column seeding becomes ambiguous there.
    """
    mat = field.a_limit(lam, sign)
    w, vecs = np.linalg.eig(mat)
    order = np.lexsort((w.imag, w.real))
    n = field.n
    take = order[:n] if sign > 0 else order[n:][::-1]
    nus = w[take]
    cols = vecs[:, take]
    cols = cols / np.linalg.norm(cols, axis=0)
    modal = True
    if n > 1:
        gap = min(
            abs(nus[i] - nus[j]) for i in range(n) for j in range(i + 1, n)
        )
        smin = np.linalg.svd(cols, compute_uv=False)[-1]
        if gap < 1e-7 or smin < 1e-8:
            if sign > 0:
                raise RuntimeError(
                    f"spatial eigenvalues nearly defective at lambda = {lam}; "
                    "basis seeding is ambiguous"
                )
            re_sorted = np.sort(w.real)
            mid = 0.5 * (re_sorted[n - 1] + re_sorted[n])
            t_mat, z_mat, sdim = scipy.linalg.schur(
                mat, output="complex", sort=lambda z: z.real > mid
            )
            if sdim != n:
                raise RuntimeError(
                    f"cannot split the spatial eigenvalues at lambda = {lam}"
                )
            cols = z_mat[:, :n]
            nus = np.diag(t_mat)[:n]
            modal = False
    for c in range(n):
        j = int(np.argmax(np.abs(cols[:, c])))
        piv = cols[j, c]
        cols[:, c] *= np.conj(piv) / abs(piv)
    return nus, cols, modal


def _phase_align(cols: np.ndarray, ref: np.ndarray) -> float:
    """Rotate each column so its overlap with the reference is positive real."""
    worst = 1.0
    for c in range(cols.shape[1]):
        ov = np.vdot(ref[:, c], cols[:, c])
        mag = abs(ov)
        worst = min(worst, mag)
        if mag > 0.0:
            cols[:, c] *= np.conj(ov) / mag
    return worst


def _seed_pair(field, lam, refs=None):
    """Seed frames on both sides, optionally phase-aligned to a reference."""
    nus_p, cols_p, modal_p = _split_basis(field, lam, +1)
    nus_m, cols_m, modal_m = _split_basis(field, lam, -1)
    quality = 1.0
    if refs is not None:
        quality = min(
            _phase_align(cols_p, refs[0]), _phase_align(cols_m, refs[1])
        )
    numax = max(np.max(np.abs(nus_p)), np.max(np.abs(nus_m)))
    return (nus_p, cols_p, modal_p), (nus_m, cols_m, modal_m), numax, quality


# ---------------------------------------------------------------------------
# Evans function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvansValue:
    """Evans determinant at one lambda, split into unit part and log scale.

    Basis columns are normalized by their asymptotic exponentials (column j
    seeded at the end point x_e behaves like e^{nu_j (x - x_e)} v_j, and that
    factor is divided out), which is what makes the value slowly varying in
    lambda.  ``unit_det`` carries the phase and the zero test (it has
    modulus <= 1 and is scale-free); ``log_scale`` absorbs the remaining
    real magnitude.  The full value ``unit_det * exp(log_scale)`` is defined
    up to a positive real factor, so ``phase`` is rescaling-invariant.
    """

    lam: complex
    unit_det: complex
    log_scale: float

    @property
    def log_magnitude(self) -> float:
        mag = abs(self.unit_det)
        return math.log(mag) + self.log_scale if mag > 0.0 else -math.inf

    @property
    def phase(self) -> float:
        return cmath.phase(self.unit_det)

    def __complex__(self) -> complex:
        if self.log_scale > 700.0:
            raise OverflowError("Evans value exceeds floating-point range")
        return self.unit_det * math.exp(self.log_scale)


def _asymptotic_correction(nus_plus, nus_minus, x_top, x_bot) -> complex:
    """Log of the factor dividing out the seeds' asymptotic exponentials.

    A plus-side column seeded at x_top decays like e^{nu (x - x_top)}, so its
    value at the matching point carries e^{-nu x_top}; normalizing multiplies
    the determinant by e^{nu x_top} per column (and likewise e^{nu x_bot} on
    the minus side).  Without this the determinant spins like e^{i Im(nu) L}
    as lambda moves, which would corrupt winding counts.
    """
    return complex(np.sum(nus_plus) * x_top + np.sum(nus_minus) * x_bot)


def _meet_values(field, lam_arr, L=None, substeps=1, refs=None):
    """Unit determinants and log scales of the meeting frames at x = 0."""
    lam_arr = np.asarray(lam_arr, dtype=complex).ravel()
    grid = field.crop_grid(L)
    i_zero = int(np.searchsorted(grid, 0.0))
    if abs(float(grid[i_zero])) > 1e-9:
        raise ValueError("the profile grid does not contain x = 0")
    n = field.n
    batch = lam_arr.size
    seeds_p = np.empty((batch, 2 * n, n), dtype=complex)
    seeds_m = np.empty((batch, 2 * n, n), dtype=complex)
    correction = np.empty(batch, dtype=complex)
    numax = 0.0
    for b, lam in enumerate(lam_arr):
        plus, minus, nu_b, quality = _seed_pair(field, lam, refs)
        if quality < 0.05:
            raise RuntimeError(
                f"seed phase reference nearly orthogonal at lambda = {lam}"
            )
        seeds_p[b] = plus[1]
        seeds_m[b] = minus[1]
        correction[b] = _asymptotic_correction(
            plus[0], minus[0], float(grid[-1]), float(grid[0])
        )
        numax = max(numax, nu_b)
    mask_hi = np.zeros(grid.size - i_zero, dtype=bool)
    mask_hi[0] = True  # x = 0 is the first node of the upper subgrid
    _, q_p, l_p, _ = _sweep(
        field, lam_arr, +1, grid[i_zero:], seeds_p, numax, substeps, mask_hi
    )
    mask_lo = np.zeros(i_zero + 1, dtype=bool)
    mask_lo[i_zero] = True
    _, q_m, l_m, _ = _sweep(
        field, lam_arr, -1, grid[: i_zero + 1], seeds_m, numax, substeps, mask_lo
    )
    frame = np.concatenate([q_p[0], q_m[0][..., ::-1]], axis=-1)
    unit = np.linalg.det(frame) * np.exp(1j * correction.imag)
    logs = l_p[0].sum(axis=-1) + l_m[0].sum(axis=-1) + correction.real
    return unit, logs


def evans(
    model: SystemModel,
    kappa: float,
    lam: complex,
    *,
    L: float | None = None,
    profile: WaveProfile | None = None,
    substeps: int = 1,
) -> EvansValue:
    """Evans determinant at one lambda, up to a positive real factor.

    ``substeps`` multiplies the number of integrator substeps per grid leg;
    halving the step this way must leave the phase unchanged to integrator
    accuracy, which is the recommended convergence check.
    """
    field = _field_for(model, kappa, profile)
    unit, logs = _meet_values(field, [lam], L=L, substeps=substeps)
    return EvansValue(lam=complex(lam), unit_det=complex(unit[0]), log_scale=float(logs[0]))


def evans_scan(
    model: SystemModel,
    kappa: float,
    lams,
    *,
    L: float | None = None,
    profile: WaveProfile | None = None,
    substeps: int = 1,
) -> list[EvansValue]:
    """Evans values over a batch of lambda nodes (independent, order kept)."""
    field = _field_for(model, kappa, profile)
    lam_arr = np.asarray(lams, dtype=complex).ravel()
    unit, logs = _meet_values(field, lam_arr, L=L, substeps=substeps)
    return [
        EvansValue(lam=complex(lam_arr[b]), unit_det=complex(unit[b]), log_scale=float(logs[b]))
        for b in range(lam_arr.size)
    ]


def evans_at_origin(
    model: SystemModel, kappa: float, profile: WaveProfile | None = None
) -> complex:
    """Unit-frame Evans determinant at lambda = 0 (scale-free zero detector)."""
    return evans(model, kappa, 0.0, profile=profile).unit_det


# ---------------------------------------------------------------------------
# basis bundles
# ---------------------------------------------------------------------------

def _scaled_columns(q, logd, u):
    """(M, logs) with the true frame equal to M diag(e^logs)."""
    with np.errstate(divide="ignore"):
        lead = logd[:, None] + np.log(np.abs(u))
    logs = lead.max(axis=0)
    mag = np.exp(lead - logs[None, :])
    absu = np.abs(u)
    phase = np.divide(u, absu, out=np.zeros_like(u), where=absu > 0)
    return q @ (mag * phase), logs


def _scaled_product(mat, logs, w):
    """Columns of (mat diag(e^logs)) @ w with fresh per-column log scales."""
    with np.errstate(divide="ignore"):
        lead = logs[:, None] + np.log(np.abs(w))
    out_logs = lead.max(axis=0)
    mag = np.exp(lead - out_logs[None, :])
    absw = np.abs(w)
    phase = np.divide(w, absw, out=np.zeros_like(w), where=absw > 0)
    return mat @ (mag * phase), out_logs


def _fit_slope(x, y):
    return float(np.polyfit(x, y, 1)[0])


@dataclass(eq=False)
class BasisBundle:
    """Decaying bases of the first-order system on a grid.

    ``phi_plus`` columns (via :meth:`frame_plus`) decay at +infinity and are
    ordered most-stable-first; ``phi_minus`` columns decay at -infinity and
    are ordered by increasing growth rate.  The continued columns (the
    minus-side frame re-mixed to have staircase content in the unstable
    directions at +infinity) are exposed through :meth:`psi_block`; their
    first column is the continued bounded/marginal solution.  ``rescale_logs``
    holds the accumulated per-column QR log factors of both sweeps.
    """

    lam: complex
    x_grid: np.ndarray
    field: CoefficientField
    nus_plus: np.ndarray    # sweep order: most negative Re first
    nus_minus: np.ndarray   # sweep order: most positive Re first
    modal_plus: bool
    modal_minus: bool
    q_plus: np.ndarray      # (N, 2n, n)
    logd_plus: np.ndarray   # (N, n)
    u_plus: np.ndarray      # (N, n, n)
    q_minus: np.ndarray
    logd_minus: np.ndarray
    u_minus: np.ndarray
    eta_plus: np.ndarray = dataclass_field(default=None)
    eta_minus: np.ndarray = dataclass_field(default=None)
    _psi: tuple | None = dataclass_field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.field.n

    @property
    def rescale_logs(self) -> dict[str, np.ndarray]:
        return {"plus": self.logd_plus, "minus": self.logd_minus}

    def node_index(self, x: float) -> int:
        i = int(np.argmin(np.abs(self.x_grid - x)))
        if abs(float(self.x_grid[i]) - x) > (self.x_grid[1] - self.x_grid[0]):
            raise ValueError(f"x = {x} lies outside the bundle grid")
        return i

    # -- frames ----------------------------------------------------------------

    def frame_plus(self, i: int):
        """Columns decaying at +infinity, most stable first; (M, logs)."""
        return _scaled_columns(self.q_plus[i], self.logd_plus[i], self.u_plus[i])

    def frame_minus(self, i: int):
        """Columns decaying at -infinity, slowest growth first; (M, logs)."""
        mat, logs = _scaled_columns(self.q_minus[i], self.logd_minus[i], self.u_minus[i])
        return mat[:, ::-1], logs[::-1]

    def _psi_mix(self):
        """Staircase re-mix of the minus frame against the +infinity modes."""
        if self._psi is not None:
            return self._psi
        n = self.n
        if not self.modal_plus:
            raise RuntimeError("continued columns need a modal plus-side limit")
        grid = self.x_grid
        mat = self.field.a_limit(self.lam, +1)
        w, vecs = np.linalg.eig(mat)
        order = np.lexsort((w.imag, w.real))
        nus_u = w[order][n:]          # unstable, ascending Re: nu_1 first
        v_sorted = vecs[:, order]
        rows_u = np.linalg.inv(v_sorted)[n:, :]
        if n == 1:
            x_fit_target = float(grid[-1]) - 5.0
        else:
            # the slowest unstable coefficient decays relative to the fastest
            # like e^{-spread x}; cap spread * x so it stays above roundoff
            spread = float(nus_u.real.max() - nus_u.real.min())
            x_fit_target = min(
                float(grid[-1]) - 10.0, max(12.0, 30.0 / max(spread, 1e-6))
            )
        i_fit = int(np.argmin(np.abs(grid - x_fit_target)))
        mm, logs_fit = _scaled_columns(
            self.q_minus[i_fit], self.logd_minus[i_fit], self.u_minus[i_fit]
        )
        content = rows_u @ mm          # per-mode coefficients, e^{nu x} removed later
        cond = np.linalg.cond(content)
        if not cond < 1e10:
            raise RuntimeError(
                "continued columns are degenerate (Evans function vanishes or "
                "the frame lost independence at +infinity)"
            )
        mix = np.linalg.inv(content)
        self._psi = (mix, logs_fit, nus_u, float(grid[i_fit]), i_fit)
        return self._psi

    def psi_block(self, i: int):
        """Continued columns ordered by +infinity growth rate; (M, logs)."""
        mix, logs_fit, nus_u, x_fit, _ = self._psi_mix()
        mm, logs = _scaled_columns(self.q_minus[i], self.logd_minus[i], self.u_minus[i])
        mat, out_logs = _scaled_product(mm, logs - logs_fit, mix)
        mat = mat * np.exp(1j * nus_u.imag * x_fit)[None, :]
        out_logs = out_logs + nus_u.real * x_fit
        return mat, out_logs

    def psi1(self, i: int):
        """The continued marginal column (psi-plus-1); (vector, log scale)."""
        mat, logs = self.psi_block(i)
        return mat[:, 0], float(logs[0])

    def full_frame(self, i: int):
        """[phi-plus block | continued block] with per-column log scales."""
        mp, lp = self.frame_plus(i)
        mq, lq = self.psi_block(i)
        return np.concatenate([mp, mq], axis=1), np.concatenate([lp, lq])

    @property
    def eta_psi1(self) -> float:
        """Fitted +infinity growth rate of the continued marginal column."""
        grid = self.x_grid
        sel = (grid >= grid[-1] - 8.0) & (grid <= grid[-1] - 0.5)
        idx = np.nonzero(sel)[0][:: max(1, sel.sum() // 40)]
        vals = [self.psi1(int(j))[1] + math.log(np.linalg.norm(self.psi1(int(j))[0]))
                for j in idx]
        return _fit_slope(grid[idx], np.asarray(vals))

    def evans_value(self) -> EvansValue:
        """Evans determinant assembled from the stored frames at x = 0.

        The unit factor is the determinant of the orthonormal Q-frames (the
        triangular mixers have unit determinant, so the column magnitudes sit
        entirely in the log factors).  Splitting on the Q-frames keeps the
        unit determinant O(1) away from eigenvalues even when a defective
        asymptotic limit drives the true columns nearly parallel.
        """
        i0 = self.node_index(0.0)
        frame = np.concatenate([self.q_plus[i0], self.q_minus[i0][:, ::-1]], axis=1)
        corr = _asymptotic_correction(
            self.nus_plus, self.nus_minus, float(self.x_grid[-1]), float(self.x_grid[0])
        )
        unit = complex(np.linalg.det(frame)) * cmath.exp(1j * corr.imag)
        return EvansValue(
            lam=self.lam,
            unit_det=unit,
            log_scale=float(
                self.logd_plus[i0].sum() + self.logd_minus[i0].sum() + corr.real
            ),
        )


def integrate_bases(
    model: SystemModel,
    kappa: float,
    lam: complex,
    L: float | None = None,
    *,
    profile: WaveProfile | None = None,
    substeps: int = 1,
) -> BasisBundle:
    """Integrate the decaying bases across the whole grid.

    Columns are seeded with eigenvectors of the asymptotic matrices at the
    ends, re-orthonormalized by positive-diagonal QR after every leg with the
    log factors accumulated, and stored at every grid node.  The plus-side
    spatial eigenvalues must be simple; a defective minus-side limit falls
    back to an orthonormal invariant-subspace seed frame.
    """
    field = _field_for(model, kappa, profile)
    eig = spatial_eigenvalues(model, kappa, lam, side="+")
    if eig.jordan_flag:
        raise RuntimeError(
            f"spatial eigenvalues nearly defective at lambda = {lam}; "
            "basis integration is ambiguous there"
        )
    grid = field.crop_grid(L)
    plus, minus, numax, _ = _seed_pair(field, lam)
    mask = np.ones(grid.size, dtype=bool)
    _, q_p, l_p, u_p = _sweep(
        field, [lam], +1, grid, plus[1], numax, substeps, mask
    )
    _, q_m, l_m, u_m = _sweep(
        field, [lam], -1, grid, minus[1], numax, substeps, mask
    )
    bundle = BasisBundle(
        lam=complex(lam),
        x_grid=grid,
        field=field,
        nus_plus=plus[0],
        nus_minus=minus[0],
        modal_plus=plus[2],
        modal_minus=minus[2],
        q_plus=q_p[:, 0],
        logd_plus=l_p[:, 0],
        u_plus=u_p[:, 0],
        q_minus=q_m[:, 0],
        logd_minus=l_m[:, 0],
        u_minus=u_m[:, 0],
    )
    top = (grid >= grid[-1] - 10.0) & (grid <= grid[-1] - 0.5)
    bot = (grid <= grid[0] + 10.0) & (grid >= grid[0] + 0.5)
    bundle.eta_plus = np.array(
        [_fit_slope(grid[top], bundle.logd_plus[top, j]) for j in range(field.n)]
    )
    bundle.eta_minus = np.array(
        [_fit_slope(grid[bot], bundle.logd_minus[bot, j]) for j in range(field.n)]
    )
    return bundle


# ---------------------------------------------------------------------------
# dual bases
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class DualBasis:
    """Dual rows at one point: row r of ``rows`` times e^{row_logs[r]}.

    Rows 0..n-1 pair the phi-plus columns (they are the duals carried by the
    minus-side labeling); rows n..2n-1 pair the continued columns.  The
    pairing is through S: (dual row) S (frame column) = identity.
    """

    y: float
    rows: np.ndarray
    row_logs: np.ndarray
    condition: float

    @property
    def n(self) -> int:
        return self.rows.shape[0] // 2

    def phi_plus_rows(self):
        """Duals of the continued columns (the phi-tilde-plus family)."""
        return self.rows[self.n:], self.row_logs[self.n:]

    def psi_plus_rows(self):
        """Duals of the phi-plus columns."""
        return self.rows[: self.n], self.row_logs[: self.n]


def dual_bases(bundle: BasisBundle, y: float) -> DualBasis:
    """Dual rows at y, from inverting S times the full frame."""
    i = bundle.node_index(float(y))
    mat, logs = bundle.full_frame(i)
    s_mat = bundle.field.s_stack([float(bundle.x_grid[i])])[0]
    sm = s_mat @ mat
    condition = float(np.linalg.cond(sm))
    if not condition < 1e12:
        raise RuntimeError(
            f"frame condition {condition:.3e} at y = {y} exceeds 1e12; "
            "duals are unreliable"
        )
    rows = np.linalg.inv(sm)
    return DualBasis(
        y=float(bundle.x_grid[i]), rows=rows, row_logs=-logs, condition=condition
    )


def _transport_row(field, lam, row, x0, x1, steps_per_unit=400):
    """RK4 transport of a dual row along phi~' = phi~ B(lambda, x)."""
    span = x1 - x0
    steps = max(1, int(abs(span) * steps_per_unit))
    h = span / steps
    row = np.asarray(row, dtype=complex)
    for i in range(steps):
        x = x0 + i * h
        b1 = field.b_stack(lam, [x])[0]
        bm = field.b_stack(lam, [x + h / 2])[0]
        b2 = field.b_stack(lam, [x + h])[0]
        k1 = row @ b1
        k2 = (row + h / 2 * k1) @ bm
        k3 = (row + h / 2 * k2) @ bm
        k4 = (row + h * k3) @ b2
        row = row + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return row


# ---------------------------------------------------------------------------
# winding numbers
# ---------------------------------------------------------------------------

def winding_number(
    model: SystemModel,
    kappa: float,
    contour,
    *,
    profile: WaveProfile | None = None,
    substeps: int = 1,
    max_rounds: int = 12,
) -> int:
    """Winding of the Evans function along a closed contour.

    The contour must avoid defective lambda by a safety margin; segments
    whose phase increment exceeds pi/2 are bisected (evaluation over the new
    nodes is batched, so distinct lambda remain independent), and the
    accumulated phase must land within 0.05 of an integer multiple of 2 pi.
    Traversing the contour backwards negates the result.
    """
    lams = np.asarray(contour, dtype=complex).ravel()
    if lams.size < 3:
        raise ValueError("contour needs at least three nodes")
    scale = float(np.max(np.abs(lams))) + 1.0
    if abs(lams[0] - lams[-1]) > 1e-12 * scale:
        lams = np.append(lams, lams[0])
    for side in ("+", "-"):
        side_kappa = kappa if side == "+" else 0.0  # weight inactive on the left
        jordan = nearest_jordan(model, side_kappa, side=side)
        if jordan is not None and np.min(np.abs(lams - jordan)) < 1e-4:
            raise ValueError(
                f"contour passes within 1e-4 of the defective value {jordan}"
            )
    field = _field_for(model, kappa, profile)
    refs_pack = _seed_pair(field, lams[0])
    refs = (refs_pack[0][1].copy(), refs_pack[1][1].copy())

    def values(batch):
        unit, _ = _meet_values(field, batch, substeps=substeps, refs=refs)
        small = np.abs(unit) < 1e-10
        if np.any(small):
            where = np.asarray(batch).ravel()[int(np.nonzero(small)[0][0])]
            raise RuntimeError(
                f"Evans function vanishes on the contour near lambda = {where}"
            )
        return unit

    nodes = list(lams)
    units = list(values(np.asarray(nodes)))
    for _ in range(max_rounds):
        bad = [
            i
            for i in range(len(nodes) - 1)
            if abs(cmath.phase(units[i + 1] / units[i])) > math.pi / 2
            and abs(nodes[i + 1] - nodes[i]) > 1e-12 * scale
        ]
        if not bad:
            break
        fresh = [(nodes[i] + nodes[i + 1]) / 2 for i in bad]
        fresh_units = list(values(np.asarray(fresh)))
        for pos, lam_new, unit_new in zip(
            reversed(bad), reversed(fresh), reversed(fresh_units)
        ):
            nodes.insert(pos + 1, lam_new)
            units.insert(pos + 1, unit_new)
    total = 0.0
    for i in range(len(nodes) - 1):
        total += cmath.phase(units[i + 1] / units[i])
    turns = total / (2 * math.pi)
    nearest = round(turns)
    if abs(turns - nearest) > 0.05:
        raise RuntimeError(
            f"phase accumulation {turns:.4f} is not within 0.05 of an integer; "
            "refine the contour"
        )
    return int(nearest)


def _essential_rightmost(model, kappa, heights, depth):
    """Rightmost essential-spectrum real part at each imaginary height.

    Samples the limiting symbol curves on both sides (the weight acts only
    on the right) and interpolates each branch at the requested heights;
    heights never reached stay at -inf.
    """
    out = np.full(len(heights), -np.inf)
    t_need = float(np.max(np.abs(heights))) + 1.0
    for side, side_kappa in (("+", kappa), ("-", 0.0)):
        span = 2.0
        for _ in range(12):
            xi = np.linspace(-span, span, 2001)
            curves = essential_curves(model, side, side_kappa, xi).curves
            if np.max(np.abs(curves.imag)) >= t_need or np.min(curves.real) < -depth:
                break
            span *= 2.0
        for branch in curves:
            im, re = branch.imag, branch.real
            for idx, t in enumerate(heights):
                diff = im - t
                flips = np.nonzero(np.sign(diff[1:]) != np.sign(diff[:-1]))[0]
                for h in flips:
                    den = diff[h] - diff[h + 1]
                    w = diff[h] / den if den != 0.0 else 0.5
                    r = re[h] + w * (re[h + 1] - re[h])
                    if r > out[idx]:
                        out[idx] = r
                if diff[0] == 0.0 and re[0] > out[idx]:
                    out[idx] = re[0]
    return out


def sector_ball_contour(
    theta: float,
    radius: float,
    *,
    line_nodes: int = 48,
    arc_nodes: int = 64,
    model: SystemModel | None = None,
    kappa: float = 0.0,
) -> np.ndarray:
    """Positively oriented boundary of the sector-ball spectral window.

    The window is {Re > -theta (1 + |Im|)}, cut to |lambda| <= radius and,
    when a model is supplied, further cut to the right of its essential
    spectrum: wherever an essential curve protrudes past the sector line the
    contour follows the curve instead (through the marginal contact point on
    the real axis, where the Evans function remains finite).  Without that
    detour the contour would cross the essential spectrum, where the
    stable/unstable splitting of the spatial eigenvalues is discontinuous.

    Runs counterclockwise: up the arc from +radius to the upper junction,
    down the sector side through the real axis, and back along the lower
    arc.  Side nodes are spaced geometrically toward the real axis, where
    the Evans function varies fastest; the real-axis node is included
    exactly.
    """
    # |(-theta (1 + t), t)| = radius determines the junction ordinate t_max
    a = theta**2 + 1.0
    b = 2.0 * theta**2
    c = theta**2 - radius**2
    t_max = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    half = np.geomspace(max(t_max * 1e-4, 1e-12), t_max, max(line_nodes // 2, 8))
    t = np.concatenate([-half[::-1], [0.0], half])
    reals = -theta * (1.0 + np.abs(t))
    if model is not None:
        wall = _essential_rightmost(model, kappa, t, radius)
        reals = np.maximum(reals, np.minimum(wall, 0.0))
    side = reals + 1j * t
    phi0 = math.atan2(t_max, -theta * (1.0 + t_max))
    arc_up = radius * np.exp(1j * np.linspace(0.0, phi0, max(arc_nodes // 2, 8)))
    arc_dn = radius * np.exp(1j * np.linspace(-phi0, 0.0, max(arc_nodes // 2, 8)))
    return np.concatenate([arc_up, side[::-1][1:], arc_dn[1:]])


def circle_contour(center: complex, radius: float, nodes: int = 64) -> np.ndarray:
    """Counterclockwise circle, closed (first node repeated at the end)."""
    ang = np.linspace(0.0, 2 * math.pi, nodes + 1)
    return center + radius * np.exp(1j * ang)


# ---------------------------------------------------------------------------
# defective-value scan
# ---------------------------------------------------------------------------

def _min_root_gap(model, side, kappa, lam) -> float:
    roots = _spatial_roots(model, side, kappa, lam)
    n = roots.size
    return min(
        abs(roots[i] - roots[j]) for i in range(n) for j in range(i + 1, n)
    )


def jordan_scan(
    model: SystemModel,
    kappa: float,
    region: tuple[float, float, float, float],
    *,
    sides: tuple = ("+", "-"),
    grid_points: int = 41,
) -> list[complex]:
    """Lambda values in a rectangle where spatial eigenvalues collide.

    Local minima of the pairwise root gap over a grid are polished by
    minimizing the discriminant magnitude; a candidate is kept when the
    refined gap drops below 1e-6.  Raises if the defective set fails to be
    isolated (the minus-side limit of a system with a non-diagonalizable
    Jacobian is defective at every lambda) or if the origin itself is
    flagged.
    """
    re_lo, re_hi, im_lo, im_hi = map(float, region)
    res = np.linspace(re_lo, re_hi, grid_points)
    ims = np.linspace(im_lo, im_hi, grid_points)
    found: list[complex] = []
    for side in sides:
        side_kappa = kappa if side == "+" else 0.0  # weight inactive on the left
        gaps = np.empty((grid_points, grid_points))
        for i, re in enumerate(res):
            for j, im in enumerate(ims):
                gaps[i, j] = _min_root_gap(model, side, side_kappa, complex(re, im))
        if np.mean(gaps < 1e-6) > 0.05:
            raise RuntimeError(
                f"defective values accumulate on side {side}; "
                "the defect set is not isolated"
            )
        minima = []
        for i in range(grid_points):
            for j in range(grid_points):
                patch = gaps[
                    max(0, i - 1): i + 2, max(0, j - 1): j + 2
                ]
                if gaps[i, j] <= patch.min() + 1e-15 and gaps[i, j] < 1.0:
                    minima.append(complex(res[i], ims[j]))
        for start in minima:
            def objective(p):
                val = abs(
                    _discriminant_resultant(model, side, side_kappa, complex(p[0], p[1]))
                )
                return math.log10(val + 1e-300)

            opt = minimize(
                objective,
                [start.real, start.imag],
                method="Nelder-Mead",
                options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 400},
            )
            cand = complex(opt.x[0], opt.x[1])
            margin = 1e-6 * (1.0 + abs(cand))
            if not (
                re_lo - margin <= cand.real <= re_hi + margin
                and im_lo - margin <= cand.imag <= im_hi + margin
            ):
                continue
            if _min_root_gap(model, side, side_kappa, cand) >= 1e-6:
                continue
            if abs(cand) < 1e-9:
                raise RuntimeError(
                    "the origin is flagged as defective; the decomposition "
                    "assumptions fail"
                )
            if all(abs(cand - seen) > 1e-5 for seen in found):
                found.append(cand)
    return sorted(found, key=lambda z: (z.real, z.imag))


# ---------------------------------------------------------------------------
# scan export
# ---------------------------------------------------------------------------

def save_evans_scan(values, path) -> None:
    """CSV export of Evans values: Re/Im lambda, log magnitude, phase."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re_lambda", "im_lambda", "log_abs_e", "arg_e"])
        for val in values:
            writer.writerow(
                [
                    f"{val.lam.real:.17g}",
                    f"{val.lam.imag:.17g}",
                    f"{val.log_magnitude:.17g}",
                    f"{val.phase:.17g}",
                ]
            )


def load_evans_scan(path) -> list[EvansValue]:
    """Read a scan written by :func:`save_evans_scan`.

    The unit determinant is reconstructed on the unit scale (log magnitude
    re-split into phase factor and log scale), which preserves exactly the
    invariant content of the scan.
    """
    path = Path(path)
    out: list[EvansValue] = []
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            lam = complex(float(rec["re_lambda"]), float(rec["im_lambda"]))
            log_abs = float(rec["log_abs_e"])
            phase = float(rec["arg_e"])
            out.append(
                EvansValue(
                    lam=lam,
                    unit_det=cmath.exp(1j * phase),
                    log_scale=log_abs,
                )
            )
    return out
