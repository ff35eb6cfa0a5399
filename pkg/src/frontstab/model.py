"""Reaction-diffusion systems u_t = d u_xx + (f(u))_x + g(u) on the line.

Systems are defined by a diagonal diffusion ``d``, a polynomial flux ``f``
and a polynomial reaction ``g`` (both of degree at most three), together
with the two rest states connected by the travelling front and the wave
speed ``c``.  Everything downstream -- profiles, spectra, Evans bundles,
resolvent kernels, time stepping -- consumes a :class:`SystemModel`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "MAX_DEGREE",
    "PolyMap",
    "SystemModel",
    "CheckReport",
    "evaluate_rhs",
    "check_equilibria",
    "builtin_models",
    "get_model",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
]

#: Highest monomial degree accepted in f and g.
MAX_DEGREE = 3

SQRT6 = np.sqrt(6.0)


def _as_number(value) -> complex:
    """Parse a JSON-side number: plain float or [re, im] pair."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re, im = float(value[0]), float(value[1])
        return re if im == 0.0 else complex(re, im)
    raise ValueError(f"expected a number or [re, im] pair, got {value!r}")


def _num_out(z: complex):
    """Inverse of :func:`_as_number` for serialization."""
    z = complex(z)
    return z.real if z.imag == 0.0 else [z.real, z.imag]


@dataclass(eq=False)
class PolyMap:
    """Vector-valued polynomial map on C^n with degree <= MAX_DEGREE.

    ``terms[i]`` lists the monomials of component ``i`` as pairs
    ``(coeff, exponents)``, where ``exponents`` has one entry per variable:
    component i evaluates to  sum_m coeff_m * prod_k u_k**exponents_m[k].
    """

    n: int
    terms: tuple[tuple[tuple[complex, tuple[int, ...]], ...], ...]

    def __post_init__(self) -> None:
        self.terms = tuple(
            tuple((complex(c), tuple(int(e) for e in exps)) for c, exps in comp)
            for comp in self.terms
        )
        if len(self.terms) != self.n:
            raise ValueError(f"expected {self.n} component term lists, got {len(self.terms)}")
        for comp in self.terms:
            for coeff, exps in comp:
                if len(exps) != self.n:
                    raise ValueError("exponent tuple length must equal n")
                if any(e < 0 for e in exps):
                    raise ValueError("negative exponents are not allowed")
                if sum(exps) > MAX_DEGREE:
                    raise ValueError(f"monomial degree {sum(exps)} exceeds {MAX_DEGREE}")
        self._is_real = all(
            coeff.imag == 0.0 for comp in self.terms for coeff, _ in comp
        )

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def zero(n: int) -> "PolyMap":
        return PolyMap(n, tuple(() for _ in range(n)))

    @staticmethod
    def scalar(coeffs: Sequence[complex]) -> "PolyMap":
        """Scalar polynomial sum_k coeffs[k] * u**k as a 1-component map."""
        terms = tuple(
            (complex(c), (k,)) for k, c in enumerate(coeffs) if complex(c) != 0.0
        )
        return PolyMap(1, (terms,))

    @property
    def is_zero(self) -> bool:
        return all(len(comp) == 0 for comp in self.terms)

    # -- evaluation ----------------------------------------------------------

    def _dtype(self, *arrays) -> np.dtype:
        base = np.result_type(*(a.dtype for a in arrays), np.float64)
        return base if self._is_real else np.result_type(base, np.complex128)

    @staticmethod
    def _eval_terms(term_list, u: np.ndarray, dtype: np.dtype) -> np.ndarray:
        out = np.zeros(u.shape[1:], dtype=dtype)
        for coeff, exps in term_list:
            cval = coeff if np.issubdtype(dtype, np.complexfloating) else coeff.real
            mono = np.full(u.shape[1:], cval, dtype=dtype)
            for k, e in enumerate(exps):
                if e:
                    mono *= u[k] ** e
            out += mono
        return out

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        dtype = self._dtype(u)
        out = np.zeros(u.shape, dtype=dtype)
        for i, comp in enumerate(self.terms):
            out[i] = self._eval_terms(comp, u, dtype)
        return out

    @cached_property
    def _jac_terms(self):
        jt = [[[] for _ in range(self.n)] for _ in range(self.n)]
        for i, comp in enumerate(self.terms):
            for coeff, exps in comp:
                for j, ej in enumerate(exps):
                    if ej:
                        dexps = list(exps)
                        dexps[j] = ej - 1
                        jt[i][j].append((coeff * ej, tuple(dexps)))
        return jt

    def jac(self, u: np.ndarray) -> np.ndarray:
        """Jacobian at u; shape (n, n) + u.shape[1:]."""
        u = np.asarray(u)
        dtype = self._dtype(u)
        out = np.zeros((self.n,) + u.shape, dtype=dtype)
        for i in range(self.n):
            for j in range(self.n):
                out[i, j] = self._eval_terms(self._jac_terms[i][j], u, dtype)
        return out

    @cached_property
    def _jac_dx_terms(self):
        # d/dx of x -> jac(u(x)): one entry (coeff, exps, m) per factor u_m
        # differentiated inside each Jacobian monomial, to be weighted by du_m.
        ht = [[[] for _ in range(self.n)] for _ in range(self.n)]
        for i in range(self.n):
            for j in range(self.n):
                for coeff, exps in self._jac_terms[i][j]:
                    for m, em in enumerate(exps):
                        if em:
                            dexps = list(exps)
                            dexps[m] = em - 1
                            ht[i][j].append((coeff * em, tuple(dexps), m))
        return ht

    def jac_dx(self, u: np.ndarray, du: np.ndarray) -> np.ndarray:
        """x-derivative of x -> jac(u(x)) when u' = du (Hessian contraction)."""
        u = np.asarray(u)
        du = np.asarray(du)
        dtype = self._dtype(u, du)
        out = np.zeros((self.n, self.n) + u.shape[1:], dtype=dtype)
        for i in range(self.n):
            for j in range(self.n):
                for coeff, exps, m in self._jac_dx_terms[i][j]:
                    cval = coeff if np.issubdtype(dtype, np.complexfloating) else coeff.real
                    mono = np.full(u.shape[1:], cval, dtype=dtype)
                    for k, e in enumerate(exps):
                        if e:
                            mono *= u[k] ** e
                    out[i, j] += mono * du[m]
        return out

    # -- serialization --------------------------------------------------------

    def to_list(self):
        return [
            [{"coeff": _num_out(c), "exponents": list(e)} for c, e in comp]
            for comp in self.terms
        ]

    @staticmethod
    def from_list(n: int, data) -> "PolyMap":
        if not isinstance(data, list) or len(data) != n:
            raise ValueError(f"polynomial table must list {n} components")
        comps = []
        for comp in data:
            entries = []
            for item in comp:
                extra = set(item) - {"coeff", "exponents"}
                if extra:
                    raise ValueError(f"unknown keys in polynomial term: {sorted(extra)}")
                entries.append((_as_number(item["coeff"]), tuple(item["exponents"])))
            comps.append(tuple(entries))
        return PolyMap(n, tuple(comps))


@dataclass(eq=False)
class SystemModel:
    """A reaction-diffusion system together with its front data.

    ``closed_profile``, when given, maps a grid to the exact front and its
    derivative; it lets downstream code bypass the boundary-value solver.
    """

    name: str
    n: int
    d: np.ndarray
    f: PolyMap
    g: PolyMap
    U_minus: np.ndarray
    U_plus: np.ndarray
    c: float
    closed_profile: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.d = np.atleast_1d(np.asarray(self.d))
        if self.d.shape != (self.n,):
            raise ValueError(f"d must have {self.n} diagonal entries")
        if np.any(self.d.real <= 0):
            raise ValueError("diffusion requires Re(d) > 0 on the diagonal")
        if np.iscomplexobj(self.d) and not self.d.imag.any():
            self.d = self.d.real
        self.U_minus = np.asarray(self.U_minus).reshape(self.n)
        self.U_plus = np.asarray(self.U_plus).reshape(self.n)
        if self.f.n != self.n or self.g.n != self.n:
            raise ValueError("f and g must act on n components")
        if not self.c > 0:
            raise ValueError("wave speed c must be positive")

    # Jacobian evaluators (front-end names used throughout the package).
    def Jf(self, u: np.ndarray) -> np.ndarray:
        return self.f.jac(u)

    def Jg(self, u: np.ndarray) -> np.ndarray:
        return self.g.jac(u)

    def Jf_dx(self, u: np.ndarray, du: np.ndarray) -> np.ndarray:
        return self.f.jac_dx(u, du)


@dataclass
class CheckReport:
    """Outcome of an assumption check: verdict, human-readable trail, data."""

    passed: bool
    messages: list[str] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.passed


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def grid_dx(u: np.ndarray, h: float) -> np.ndarray:
    """Second-order first derivative along the last axis, one-sided edges."""
    du = np.empty_like(u)
    du[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2.0 * h)
    du[..., 0] = (-3.0 * u[..., 0] + 4.0 * u[..., 1] - u[..., 2]) / (2.0 * h)
    du[..., -1] = (3.0 * u[..., -1] - 4.0 * u[..., -2] + u[..., -3]) / (2.0 * h)
    return du


def grid_dxx(u: np.ndarray, h: float) -> np.ndarray:
    """Second-order second derivative along the last axis, one-sided edges."""
    h2 = h * h
    d2 = np.empty_like(u)
    d2[..., 1:-1] = (u[..., 2:] - 2.0 * u[..., 1:-1] + u[..., :-2]) / h2
    d2[..., 0] = (2.0 * u[..., 0] - 5.0 * u[..., 1] + 4.0 * u[..., 2] - u[..., 3]) / h2
    d2[..., -1] = (2.0 * u[..., -1] - 5.0 * u[..., -2] + 4.0 * u[..., -3] - u[..., -4]) / h2
    return d2


def evaluate_rhs(
    model: SystemModel,
    u: np.ndarray,
    h: float,
    frame_speed: float = 0.0,
) -> np.ndarray:
    """d u_xx + (f(u))_x + frame_speed * u_x + g(u) on a uniform grid.

    ``u`` has shape (n, N) with grid spacing ``h``.  Interior nodes use
    central differences; the boundary rows use one-sided second-order
    stencils, so the output is O(h^2) accurate everywhere.
    """
    u = np.asarray(u)
    u = u.astype(np.result_type(u.dtype, np.float64), copy=False)
    if u.ndim == 1:
        u = u[np.newaxis, :]
    if u.shape[0] != model.n:
        raise ValueError(f"expected {model.n} components, got shape {u.shape}")
    if u.shape[1] < 4:
        raise ValueError("grid too small: need at least 4 nodes")
    if not np.isfinite(u).all():
        raise ValueError("non-finite values in u")

    rhs = model.d[:, np.newaxis] * grid_dxx(u, h) + model.g(u)
    if frame_speed != 0.0:
        rhs = rhs + frame_speed * grid_dx(u, h)
    if not model.f.is_zero:
        rhs = rhs + grid_dx(model.f(u), h)
    return rhs


# ---------------------------------------------------------------------------
# assumption checks and benchmarks
# ---------------------------------------------------------------------------

def check_equilibria(model: SystemModel, tol: float = 1e-12) -> CheckReport:
    """Verify the rest states and the monostability pattern.

    Passes iff g vanishes at both rest states, the spectrum of Jg(U_minus)
    lies in {Re < 0} (stable behind the front) and the spectrum of
    Jg(U_plus) meets {Re > 0} (unstable ahead of it).
    """
    messages: list[str] = []
    data: dict = {}
    passed = True

    g_minus = model.g(model.U_minus)
    g_plus = model.g(model.U_plus)
    data["g_at_U_minus"] = g_minus
    data["g_at_U_plus"] = g_plus
    for label, value in (("U_minus", g_minus), ("U_plus", g_plus)):
        err = float(np.max(np.abs(value)))
        if err > tol:
            passed = False
            messages.append(f"g({label}) = {err:.3e} exceeds {tol:.1e}")
        else:
            messages.append(f"g({label}) vanishes (|g| = {err:.1e})")

    try:
        spec_minus = np.linalg.eigvals(np.atleast_2d(model.Jg(model.U_minus)))
        spec_plus = np.linalg.eigvals(np.atleast_2d(model.Jg(model.U_plus)))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise RuntimeError(f"eigenvalue solver failed on Jg: {exc}") from exc
    data["spectrum_Jg_U_minus"] = spec_minus
    data["spectrum_Jg_U_plus"] = spec_plus

    if np.all(spec_minus.real < 0):
        messages.append(f"Jg(U_minus) stable: Re spec = {np.sort(spec_minus.real)}")
    else:
        passed = False
        messages.append(f"Jg(U_minus) not stable: Re spec = {np.sort(spec_minus.real)}")

    if np.any(spec_plus.real > 0):
        messages.append(f"Jg(U_plus) unstable: max Re = {spec_plus.real.max():.6g}")
    else:
        passed = False
        messages.append(
            f"Jg(U_plus) has no unstable direction: max Re = {spec_plus.real.max():.6g}"
        )

    return CheckReport(passed, messages, data)


def _fisher_front(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form Fisher front (1 + e^{x/sqrt 6})^{-2} and its derivative."""
    x = np.asarray(x, dtype=float)
    s = 1.0 / (1.0 + np.exp(x / SQRT6))        # logistic, no overflow for |x| < 700
    u = s * s
    du = -2.0 * s * s * (1.0 - s) / SQRT6
    return u[np.newaxis, :], du[np.newaxis, :]


def _nagumo_front(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form cubic front (1 + e^{x/sqrt 2})^{-1} and its derivative."""
    x = np.asarray(x, dtype=float)
    s = 1.0 / (1.0 + np.exp(x / np.sqrt(2.0)))
    du = -s * (1.0 - s) / np.sqrt(2.0)
    return s[np.newaxis, :], du[np.newaxis, :]


def _kpp2_front(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u1, du1 = _fisher_front(x)
    zeros = np.zeros_like(u1)
    return np.vstack([u1, zeros]), np.vstack([du1, zeros])


def builtin_models() -> list[SystemModel]:
    """Benchmark systems: Fisher-KPP, a bistable fixture, a 2-component KPP.

    The Nagumo entry deliberately violates monostability (g'(0) < 0); it
    exists to exercise the point-spectrum machinery on a wave with an
    Evans-function zero and is flagged by check_equilibria.
    """
    fisher = SystemModel(
        name="fisher",
        n=1,
        d=[1.0],
        f=PolyMap.zero(1),
        g=PolyMap.scalar([0.0, 1.0, -1.0]),           # u(1-u)
        U_minus=[1.0],
        U_plus=[0.0],
        c=5.0 / SQRT6,
        closed_profile=_fisher_front,
    )

    a = 0.25
    nagumo = SystemModel(
        name="nagumo",
        n=1,
        d=[1.0],
        f=PolyMap.zero(1),
        g=PolyMap.scalar([0.0, -a, 1.0 + a, -1.0]),   # u(1-u)(u-a)
        U_minus=[1.0],
        U_plus=[0.0],
        c=(1.0 - 2.0 * a) / np.sqrt(2.0),
        closed_profile=_nagumo_front,
        params={"a": a, "bistable_fixture": True},
    )

    beta, gamma = 0.1, 2.0
    kpp2 = SystemModel(
        name="kpp2",
        n=2,
        d=[1.0, 1.0],
        f=PolyMap.zero(2),
        g=PolyMap(
            2,
            (
                # u1(1 - u1) - beta u1 u2
                ((1.0, (1, 0)), (-1.0, (2, 0)), (-beta, (1, 1))),
                # -gamma u2 + u1 u2
                ((-gamma, (0, 1)), (1.0, (1, 1))),
            ),
        ),
        U_minus=[1.0, 0.0],
        U_plus=[0.0, 0.0],
        c=5.0 / SQRT6,
        closed_profile=_kpp2_front,
        params={"beta": beta, "gamma": gamma},
    )

    return [fisher, nagumo, kpp2]


def get_model(name: str) -> SystemModel:
    for model in builtin_models():
        if model.name == name:
            return model
    known = ", ".join(m.name for m in builtin_models())
    raise KeyError(f"unknown model {name!r}; builtins: {known}")


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

_MODEL_KEYS = {"name", "n", "d", "c", "U_minus", "U_plus", "f", "g", "params"}


def model_to_dict(model: SystemModel) -> dict:
    return {
        "name": model.name,
        "n": model.n,
        "d": [_num_out(v) for v in model.d],
        "c": model.c,
        "U_minus": [_num_out(v) for v in model.U_minus],
        "U_plus": [_num_out(v) for v in model.U_plus],
        "f": model.f.to_list(),
        "g": model.g.to_list(),
        "params": dict(model.params),
    }


def model_from_dict(data: dict) -> SystemModel:
    if not isinstance(data, dict):
        raise ValueError("model definition must be a mapping")
    extra = set(data) - _MODEL_KEYS
    if extra:
        raise ValueError(f"unknown keys in model definition: {sorted(extra)}")
    missing = {"name", "n", "d", "c", "U_minus", "U_plus", "f", "g"} - set(data)
    if missing:
        raise ValueError(f"missing keys in model definition: {sorted(missing)}")
    n = int(data["n"])
    return SystemModel(
        name=str(data["name"]),
        n=n,
        d=np.array([_as_number(v) for v in data["d"]]),
        f=PolyMap.from_list(n, data["f"]),
        g=PolyMap.from_list(n, data["g"]),
        U_minus=np.array([_as_number(v) for v in data["U_minus"]]),
        U_plus=np.array([_as_number(v) for v in data["U_plus"]]),
        c=float(data["c"]),
        params=dict(data.get("params", {})),
    )


def save_model(model: SystemModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> SystemModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
