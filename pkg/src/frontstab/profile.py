"""Travelling-front profiles: BVP solver, residuals, tail asymptotics.

The front solves the steady equation in the co-moving frame,

    d u'' + (f(u))' + c u' + g(u) = 0,     u(-inf) = U_minus, u(+inf) = U_plus,

discretized with second-order central differences on [-L, L], Dirichlet
data at both ends, and a phase condition pinning the first component at
x = 0 to the mid-value.  The phase condition borders the collocation
system rather than replacing a row: a scalar multiple of a fixed load is
added to the equations, and at a genuine front the multiplier settles at
the size of the truncation mismatch, order e^{-kappa L}.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import SystemModel, evaluate_rhs

__all__ = [
    "WaveProfile",
    "solve_profile",
    "profile_residual",
    "asymptotic_fit",
    "profile_from_closed_form",
    "default_profile",
    "save_profile",
    "load_profile",
]

UNDERFLOW_FLOOR = 1e-14


@dataclass(eq=False)
class WaveProfile:
    """A resolved front: values and derivative on a uniform grid, tail data.

    ``kappa``, ``xi0`` and ``V`` describe the behavior ahead of the front,
    (u - U_plus, u') ~ V e^{(-kappa + i xi0) x}; ``generic`` records whether
    kappa agrees with the weak stable rate at U_plus (the profile does not
    sit in the strong stable manifold).
    """

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray
    c: float
    kappa: float = np.nan
    xi0: float = 0.0
    V: np.ndarray | None = None
    generic: bool | None = None
    model_name: str = ""

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values))
        self.derivative = np.atleast_2d(np.asarray(self.derivative))
        if self.values.shape != self.derivative.shape:
            raise ValueError("values and derivative shapes differ")
        if self.values.shape[1] != self.grid.size:
            raise ValueError("values do not match the grid")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def L(self) -> float:
        return float(self.grid[-1])

    def interpolator(self) -> Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]:
        """Cubic-spline evaluator x -> (u(x), u'(x)) off the native grid."""
        from scipy.interpolate import CubicSpline

        splines = [CubicSpline(self.grid, self.values[i]) for i in range(self.n)]
        dsplines = [CubicSpline(self.grid, self.derivative[i]) for i in range(self.n)]

        def evaluate(x):
            x = np.asarray(x, dtype=float)
            u = np.stack([s(x) for s in splines])
            du = np.stack([s(x) for s in dsplines])
            return u, du

        return evaluate


# ---------------------------------------------------------------------------
# collocation solver
# ---------------------------------------------------------------------------

def _difference_operators(N: int, h: float) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    one = np.ones(N)
    D1 = sp.diags([-one / (2 * h), one / (2 * h)], [-1, 1], shape=(N, N), format="lil")
    D2 = sp.diags(
        [one / h**2, -2 * one / h**2, one / h**2], [-1, 0, 1], shape=(N, N), format="lil"
    )
    # boundary rows are replaced by Dirichlet conditions; zero them here
    for D in (D1, D2):
        D[0, :] = 0.0
        D[-1, :] = 0.0
    return D1.tocsr(), D2.tocsr()


def _default_guess(model: SystemModel, x: np.ndarray) -> np.ndarray:
    ramp = 1.0 / (1.0 + np.exp(np.clip(x / 2.0, -500, 500)))
    return model.U_plus[:, None] + np.outer(model.U_minus - model.U_plus, ramp)


def _connection_gap(model: SystemModel) -> float:
    return float(np.max(np.abs(model.U_minus - model.U_plus)))


def solve_profile(
    model: SystemModel,
    c: float,
    L: float,
    initial_guess: np.ndarray | None = None,
    h: float = 0.02,
    max_iter: int = 50,
    tol: float = 1e-10,
) -> WaveProfile:
    """Newton iteration for the front on [-L, L] at fixed speed c.

    Crude guesses (collocation residual above 1e-3) are first enveloped
    with a slow-decay ramp: a right tail steeper than the front's own decay
    rate encodes a faster/oscillatory decay branch and pulls Newton onto a
    pseudo-front at a different speed, while tails slower than every front
    rate sit in the basin of the requested fixed-speed front.  Accurate
    guesses pass through untouched.

    The Newton system is bordered: the unknowns are the grid values plus a
    load amplitude alpha, the equations are the interior collocation rows
    augmented by alpha * psi (psi a fixed approximate translation
    direction), the two Dirichlet rows, and the phase row
    u_1(0) = (U_minus + U_plus)_1 / 2.  The border removes the translation
    near-degeneracy of the Newton matrix, and steering the phase along the
    exponentially flat translation family costs only an exponentially small
    |alpha| (checked after convergence), so the returned profile satisfies
    the plain fixed-speed collocation equations far below the reported
    tolerance.
    """
    if c <= 0:
        raise ValueError("wave speed must be positive")
    n = model.n
    N = int(round(2 * L / h)) + 1
    x = -L + h * np.arange(N)
    mid_node = int(np.argmin(np.abs(x)))
    if abs(x[mid_node]) > 1e-9:
        raise ValueError("grid must contain x = 0 (choose L a multiple of h)")

    if initial_guess is None:
        u = _default_guess(model, x)
    else:
        u = np.atleast_2d(np.array(initial_guess, dtype=float, copy=True))
        if u.shape != (n, N):
            raise ValueError(f"initial guess must have shape {(n, N)}")

    # connection pre-check on the guess: it must traverse the gap
    gap = _connection_gap(model)
    swing = float(np.max(np.abs(u - model.U_plus[:, None])))
    if swing < 0.5 * gap:
        raise ValueError(
            "initial guess does not connect U_minus to U_plus; "
            "rejected by connection check"
        )

    from .model import grid_dx

    D1, D2 = _difference_operators(N, h)
    eye_n = sp.identity(n, format="csr")
    D1n = sp.kron(D1, eye_n, format="csr")
    D2n = sp.kron(D2, eye_n, format="csr")
    diff_diag = sp.kron(sp.identity(N, format="csr"), sp.diags(model.d), format="csr")
    mid_value = 0.5 * (model.U_minus[0] + model.U_plus[0])
    phase_col = mid_node * n  # first component at x = 0

    def plain_residual(u: np.ndarray) -> np.ndarray:
        r = evaluate_rhs(model, u, h, frame_speed=c)
        r[:, 0] = u[:, 0] - model.U_minus
        r[:, -1] = u[:, -1] - model.U_plus
        return r.T.reshape(-1)

    def plain_jacobian(u: np.ndarray) -> sp.lil_matrix:
        Jg_blocks = np.moveaxis(model.Jg(u), 2, 0)            # (N, n, n)
        A = diff_diag @ D2n + c * D1n + sp.block_diag(Jg_blocks, format="csr")
        if not model.f.is_zero:
            Jf_blocks = np.moveaxis(model.Jf(u), 2, 0)
            A = A + D1n @ sp.block_diag(Jf_blocks, format="csr")
        A = A.tolil()
        for node in (0, N - 1):
            for comp in range(n):
                row = node * n + comp
                A.rows[row] = [row]
                A.data[row] = [1.0]
        return A

    # envelope a crude guess with the canonical slow-tail ramp
    if float(np.max(np.abs(plain_residual(u)))) > 1e-3:
        default = _default_guess(model, x)
        du = u - model.U_plus[:, None]
        dd = default - model.U_plus[:, None]
        u = model.U_plus[:, None] + np.where(np.abs(du) >= np.abs(dd), du, dd)

    psi = grid_dx(u, h).T.reshape(-1)
    psi[:n] = 0.0
    psi[-n:] = 0.0
    scale = float(np.max(np.abs(psi)))
    if scale > 0.0:
        psi = psi / scale

    def residual_vector(u: np.ndarray, alpha: float) -> np.ndarray:
        vec = np.empty(n * N + 1)
        vec[:-1] = plain_residual(u) + alpha * psi
        vec[-1] = u[0, mid_node] - mid_value
        return vec

    def jacobian(u: np.ndarray) -> sp.csc_matrix:
        phase = sp.lil_matrix((1, n * N))
        phase[0, phase_col] = 1.0
        return sp.bmat(
            [[plain_jacobian(u).tocsr(), psi[:, None]], [phase.tocsr(), None]],
            format="csc",
        )

    alpha = 0.0
    res = residual_vector(u, alpha)
    res_norm = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if res_norm < tol:
            break
        A = jacobian(u)
        try:
            lu = spla.splu(A)
            step = lu.solve(res)
        except RuntimeError as exc:
            cond = _condition_estimate(A)
            raise RuntimeError(
                f"singular collocation Jacobian (condition estimate {cond:.3e}): {exc}"
            ) from exc
        # damped update: halve the step while the residual grows
        damp = 1.0
        for _ in range(8):
            trial = u - damp * step[:-1].reshape(N, n).T
            trial_alpha = alpha - damp * step[-1]
            trial_res = residual_vector(trial, trial_alpha)
            trial_norm = float(np.max(np.abs(trial_res)))
            if trial_norm < res_norm or damp < 1e-3:
                break
            damp *= 0.5
        u, alpha, res, res_norm = trial, trial_alpha, trial_res, trial_norm
    if res_norm >= tol:
        raise RuntimeError(
            f"Newton did not converge in {max_iter} iterations "
            f"(residual {res_norm:.3e})"
        )
    if abs(alpha) > 1e-7:
        raise RuntimeError(
            f"Newton settled on a loaded pseudo-solution (|alpha| = {abs(alpha):.3e}); "
            "no fixed-speed front with the requested phase on this domain"
        )

    # connection check on the converged solution
    swing = float(np.max(np.abs(u - model.U_plus[:, None])))
    interior_range = float(np.max(np.abs(u[:, 1:-1] - u[:, 1:-1].mean(axis=1)[:, None])))
    if swing < 0.5 * gap or interior_range < 0.1 * gap:
        raise ValueError("Newton converged to a constant state; rejected by connection check")

    profile = WaveProfile(
        grid=x,
        values=u,
        derivative=grid_dx(u, h),
        c=float(c),
        model_name=model.name,
    )
    kappa, xi0, V, generic = asymptotic_fit(profile, model=model)
    profile.kappa, profile.xi0, profile.V, profile.generic = kappa, xi0, V, generic
    return profile


def _condition_estimate(A: sp.spmatrix) -> float:
    try:
        norm = spla.onenormest(A)
        inv_norm = spla.onenormest(spla.inv(A.tocsc()))
        return float(norm * inv_norm)
    except Exception:  # pragma: no cover - best effort reporting
        return float("inf")


# ---------------------------------------------------------------------------
# residual and asymptotics
# ---------------------------------------------------------------------------

def profile_residual(profile: WaveProfile, model: SystemModel) -> float:
    """Max-norm of the steady equation on interior nodes."""
    if profile.h > 0.05 + 1e-12:
        raise ValueError("profile grid too coarse for the residual check (h <= 0.05)")
    r = evaluate_rhs(model, profile.values, profile.h, frame_speed=profile.c)
    return float(np.max(np.abs(r[:, 1:-1])))


def _weak_stable_rate(model: SystemModel, c: float) -> float | None:
    """Slowest decay rate of the profile ODE linearized at U_plus."""
    n = model.n
    d_inv = 1.0 / model.d
    Jf = np.atleast_2d(model.Jf(model.U_plus))
    Jg = np.atleast_2d(model.Jg(model.U_plus))
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    M[:n, n:] = np.eye(n)
    M[n:, :n] = -d_inv[:, None] * Jg
    M[n:, n:] = -d_inv[:, None] * (Jf + c * np.eye(n))
    eig = np.linalg.eigvals(M)
    stable = eig[eig.real < -1e-12]
    if stable.size == 0:
        return None
    return float(-np.max(stable.real))


def asymptotic_fit(
    profile: WaveProfile,
    model: SystemModel | None = None,
    window: tuple[float, float] | None = None,
) -> tuple[float, float, np.ndarray, bool]:
    """Fit (u - U_plus, u') ~ V e^{(-kappa + i xi0) x} on the far right.

    Least squares of log-magnitude against x on [L/2, L-5] (shrunk away
    from underflow), phase slope for xi0 when the data is complex; V is the
    amplitude.  ``generic`` records whether kappa matches the weak stable
    rate of the +infinity linearization within 2%.
    """
    x = profile.grid
    L = profile.L
    if model is not None:
        U_plus = np.asarray(model.U_plus)
    else:
        U_plus = profile.values[:, -1]

    edge_err = float(np.max(np.abs(profile.values[:, -1] - U_plus)))
    if edge_err > 1e-3:
        raise ValueError(
            f"profile not resolved at x = +L: |u(L) - U_plus| = {edge_err:.3e}"
        )

    tail = np.vstack([profile.values - U_plus[:, None], profile.derivative])
    lo, hi = window if window is not None else (L / 2.0, L - 5.0)
    mask = (x >= lo) & (x <= hi)
    if not np.any(mask):
        raise ValueError("empty asymptotic fit window; increase L")

    r = np.linalg.norm(tail, axis=0)
    usable = mask & (r >= UNDERFLOW_FLOOR)
    # keep the contiguous run starting at the left edge of the window
    idx = np.where(mask)[0]
    good = usable[idx]
    if not good[0] or good.sum() < 20:
        raise ValueError("underflow in the asymptotic fit window")
    stop = int(np.argmin(good)) if not good.all() else good.size
    idx = idx[:stop]

    # fit log-magnitude, trimming the right end while it spoils linearity
    # (solver output bottoms out in a rounding-noise plateau before the
    # underflow floor; genuine oscillation contaminates the whole window
    # and still fails below)
    while True:
        xs = x[idx]
        logs = np.log(r[idx])
        A = np.vstack([xs, np.ones_like(xs)]).T
        (slope, intercept), *_ = np.linalg.lstsq(A, logs, rcond=None)
        fit_dev = float(np.max(np.abs(logs - (slope * xs + intercept))))
        if fit_dev <= 0.05:
            break
        if idx.size < 23:
            raise ValueError(
                f"oscillatory residual in the asymptotic fit (max deviation {fit_dev:.3g})"
            )
        idx = idx[: max(20, int(0.9 * idx.size))]
    kappa = float(-slope)

    if np.iscomplexobj(tail):
        lead = int(np.argmax(np.mean(np.abs(tail[:, idx]), axis=1)))
        phase = np.unwrap(np.angle(tail[lead, idx]))
        (pslope, _), *_ = np.linalg.lstsq(A, phase, rcond=None)
        xi0 = float(pslope)
    else:
        xi0 = 0.0

    V = np.mean(tail[:, idx] * np.exp((kappa - 1j * xi0) * xs), axis=1)
    if not np.iscomplexobj(tail) and xi0 == 0.0:
        V = V.real

    generic = False
    if model is not None:
        weak = _weak_stable_rate(model, profile.c)
        if weak is not None and weak > 0:
            generic = abs(kappa - weak) <= 0.02 * weak
    return kappa, xi0, V, generic


# ---------------------------------------------------------------------------
# closed forms and defaults
# ---------------------------------------------------------------------------

def profile_from_closed_form(model: SystemModel, L: float = 60.0, h: float = 0.02) -> WaveProfile:
    """Sample the model's exact front, bypassing the solver."""
    if model.closed_profile is None:
        raise ValueError(f"model {model.name!r} has no closed-form front")
    N = int(round(2 * L / h)) + 1
    x = -L + h * np.arange(N)
    values, derivative = model.closed_profile(x)
    profile = WaveProfile(
        grid=x,
        values=values,
        derivative=derivative,
        c=model.c,
        model_name=model.name,
    )
    kappa, xi0, V, generic = asymptotic_fit(profile, model)
    profile.kappa, profile.xi0, profile.V, profile.generic = kappa, xi0, V, generic
    return profile


def default_profile(model: SystemModel, L: float = 60.0, h: float = 0.02) -> WaveProfile:
    """Closed form when available, BVP solve otherwise."""
    if model.closed_profile is not None:
        return profile_from_closed_form(model, L, h)
    profile = solve_profile(model, model.c, L, h=h)
    # re-fit with the model so the generic flag is meaningful
    kappa, xi0, V, generic = asymptotic_fit(profile, model)
    profile.kappa, profile.xi0, profile.V, profile.generic = kappa, xi0, V, generic
    return profile


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_profile(profile: WaveProfile, path: str | Path) -> None:
    """CSV with x and Re/Im of each component of u and u' (dimensionless)."""
    n = profile.n
    cols = ["x"]
    for i in range(n):
        cols += [f"u{i}_re", f"u{i}_im"]
    for i in range(n):
        cols += [f"du{i}_re", f"du{i}_im"]
    header = (
        f"# c={float(profile.c)!r} kappa={float(profile.kappa)!r} "
        f"xi0={float(profile.xi0)!r} L={float(profile.L)!r} "
        f"h={float(profile.h)!r} n={n} model={profile.model_name}\n"
        + ",".join(cols)
    )
    data = [profile.grid]
    for i in range(n):
        data += [profile.values[i].real, np.imag(profile.values[i])]
    for i in range(n):
        data += [profile.derivative[i].real, np.imag(profile.derivative[i])]
    table = np.column_stack(data)
    buf = io.StringIO()
    np.savetxt(buf, table, delimiter=",", fmt="%.17g", header=header, comments="")
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_profile(path: str | Path) -> WaveProfile:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    for token in text[0].lstrip("# ").split():
        if "=" in token:
            key, _, val = token.partition("=")
            meta[key] = val
    n = int(meta["n"])
    table = np.loadtxt(io.StringIO("\n".join(text[2:])), delimiter=",")
    x = table[:, 0]
    vals = np.empty((n, x.size), dtype=complex)
    ders = np.empty((n, x.size), dtype=complex)
    for i in range(n):
        vals[i] = table[:, 1 + 2 * i] + 1j * table[:, 2 + 2 * i]
        ders[i] = table[:, 1 + 2 * n + 2 * i] + 1j * table[:, 2 + 2 * n + 2 * i]
    if not vals.imag.any():
        vals = vals.real
        ders = ders.real
    profile = WaveProfile(
        grid=x,
        values=vals,
        derivative=ders,
        c=float(meta["c"]),
        kappa=float(meta["kappa"]),
        xi0=float(meta["xi0"]),
        model_name=meta.get("model", ""),
    )
    return profile
