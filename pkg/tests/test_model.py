from __future__ import annotations

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from frontstab.model import (
    PolyMap,
    SystemModel,
    builtin_models,
    check_equilibria,
    evaluate_rhs,
    get_model,
    model_from_dict,
    model_to_dict,
)

SQRT6 = np.sqrt(6.0)


# ---------------------------------------------------------------------------
# PolyMap
# ---------------------------------------------------------------------------

def test_polymap_scalar_eval():
    g = PolyMap.scalar([0.0, 1.0, -1.0])  # u - u^2
    u = np.array([[0.0, 0.25, 1.0, 2.0]])
    assert_allclose(g(u), u * (1 - u))


def test_polymap_jacobian_closed_form():
    g = PolyMap.scalar([0.0, 1.0, -1.0])
    u = np.array([[0.3, 0.9]])
    assert_allclose(g.jac(u)[0, 0], 1.0 - 2.0 * u[0])


def test_polymap_jac_dx_is_hessian_contraction():
    # g(u) = u^3: (d/dx) g'(u(x)) = 6 u u'
    g = PolyMap.scalar([0.0, 0.0, 0.0, 1.0])
    u = np.array([[0.5, 1.5]])
    du = np.array([[2.0, -1.0]])
    assert_allclose(g.jac_dx(u, du)[0, 0], 6.0 * u[0] * du[0])


def test_polymap_rejects_degree_four():
    with pytest.raises(ValueError, match="degree"):
        PolyMap.scalar([0.0, 0.0, 0.0, 0.0, 1.0])


def test_polymap_rejects_bad_exponent_length():
    with pytest.raises(ValueError):
        PolyMap(2, (((1.0, (1,)),), ()))


def test_polymap_jacobian_matches_finite_differences(rng):
    for model in builtin_models():
        for pmap in (model.f, model.g):
            if pmap.is_zero:
                continue
            eps = 1e-5
            for _ in range(100):
                u = rng.uniform(-1.0, 2.0, size=pmap.n)
                hdir = rng.standard_normal(pmap.n)
                fd = (pmap(u + eps * hdir) - pmap(u - eps * hdir)) / (2 * eps)
                exact = pmap.jac(u) @ hdir
                assert np.linalg.norm(exact - fd) <= 1e-6 * max(
                    np.linalg.norm(hdir), 1.0
                )


# ---------------------------------------------------------------------------
# evaluate_rhs
# ---------------------------------------------------------------------------

def test_rhs_zero_at_equilibrium(fisher):
    u = np.zeros((1, 64))
    out = evaluate_rhs(fisher, u, h=0.1)
    assert_allclose(out, 0.0, atol=1e-14)


def test_rhs_constant_offset_is_pointwise_reaction(fisher):
    eps = 0.01
    u = np.full((1, 32), eps)
    out = evaluate_rhs(fisher, u, h=0.1, frame_speed=0.0)
    assert_allclose(out, eps * (1 - eps), rtol=0, atol=1e-13)


def test_rhs_closed_form_front_is_near_steady(fisher):
    # In the frame moving at c the exact front is a stationary solution.
    h = 0.01
    x = np.arange(-30.0, 30.0 + h / 2, h)
    u, _ = fisher.closed_profile(x)
    res = evaluate_rhs(fisher, u, h=h, frame_speed=fisher.c)
    assert np.max(np.abs(res)) < 1e-6


def test_rhs_linear_in_u_for_linear_reaction():
    lin = SystemModel(
        name="linear",
        n=1,
        d=[1.0],
        f=PolyMap.zero(1),
        g=PolyMap.scalar([0.0, -2.0]),
        U_minus=[0.0],
        U_plus=[0.0],
        c=1.0,
    )
    rng = np.random.default_rng(7)
    u = rng.standard_normal((1, 40))
    a = 3.7
    assert_allclose(
        evaluate_rhs(lin, a * u, h=0.05, frame_speed=1.0),
        a * evaluate_rhs(lin, u, h=0.05, frame_speed=1.0),
        rtol=1e-12,
        atol=1e-12,
    )


def test_rhs_rejects_small_grid(fisher):
    with pytest.raises(ValueError, match="grid too small"):
        evaluate_rhs(fisher, np.zeros((1, 3)), h=0.1)


def test_rhs_rejects_non_finite(fisher):
    u = np.zeros((1, 16))
    u[0, 5] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        evaluate_rhs(fisher, u, h=0.1)


def test_rhs_flux_term_kpp2(kpp2):
    # coupled model with f = 0: RHS at the closed-form front in its frame.
    h = 0.02
    x = np.arange(-30.0, 30.0 + h / 2, h)
    u, _ = kpp2.closed_profile(x)
    res = evaluate_rhs(kpp2, u, h=h, frame_speed=kpp2.c)
    assert np.max(np.abs(res)) < 1e-5


# ---------------------------------------------------------------------------
# equilibria / monostability checks
# ---------------------------------------------------------------------------

def test_check_equilibria_fisher(fisher):
    report = check_equilibria(fisher)
    assert report.passed
    assert_allclose(report.data["spectrum_Jg_U_plus"].real, [1.0])
    assert_allclose(report.data["spectrum_Jg_U_minus"].real, [-1.0])


def test_check_equilibria_nagumo_is_bistable(nagumo):
    report = check_equilibria(nagumo)
    assert not report.passed
    # g'(0) = -a < 0: no unstable direction ahead of the front
    assert report.data["spectrum_Jg_U_plus"].real.max() == pytest.approx(-0.25)


def test_check_equilibria_kpp2(kpp2):
    report = check_equilibria(kpp2)
    assert report.passed
    assert_allclose(
        np.sort(report.data["spectrum_Jg_U_plus"].real), [-2.0, 1.0]
    )
    assert np.all(report.data["spectrum_Jg_U_minus"].real < 0)


def test_check_equilibria_zero_reaction_fails():
    trivial = SystemModel(
        name="null",
        n=1,
        d=[1.0],
        f=PolyMap.zero(1),
        g=PolyMap.zero(1),
        U_minus=[1.0],
        U_plus=[0.0],
        c=1.0,
    )
    assert not check_equilibria(trivial).passed


def test_equilibria_are_rhs_fixed_points(all_models):
    for model in all_models:
        for state in (model.U_minus, model.U_plus):
            u = np.tile(np.asarray(state, dtype=float)[:, None], (1, 16))
            out = evaluate_rhs(model, u, h=0.1)
            assert np.max(np.abs(out)) < 1e-12


# ---------------------------------------------------------------------------
# builtins and model files
# ---------------------------------------------------------------------------

def test_builtin_speeds():
    assert get_model("fisher").c == pytest.approx(5.0 / SQRT6, abs=1e-15)
    assert get_model("nagumo").c == pytest.approx(0.5 / np.sqrt(2.0), abs=1e-15)


def test_unknown_model_name():
    with pytest.raises(KeyError, match="kpp2"):
        get_model("does-not-exist")


def test_model_roundtrip(tmp_path, kpp2):
    data = model_to_dict(kpp2)
    clone = model_from_dict(json.loads(json.dumps(data)))
    assert clone.n == kpp2.n
    assert clone.c == kpp2.c
    u = np.array([0.4, 0.3])
    assert_allclose(clone.g(u), kpp2.g(u))
    assert_allclose(clone.Jg(u), kpp2.Jg(u))


def test_model_file_rejects_unknown_keys(kpp2):
    data = model_to_dict(kpp2)
    data["extra_knob"] = 1
    with pytest.raises(ValueError, match="unknown keys"):
        model_from_dict(data)


def test_model_file_rejects_missing_keys(kpp2):
    data = model_to_dict(kpp2)
    del data["U_plus"]
    with pytest.raises(ValueError, match="missing"):
        model_from_dict(data)
