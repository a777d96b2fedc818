import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hwlab.dynamics import EquationParams, Sign
from hwlab.grid import ANISO_HALF, Field, Symbol, apply_symbol, inner_product, make_grid, norm
from hwlab.groundstate import gradient_flow, line_soliton
from hwlab.dynamics import mass
from hwlab.stability import orbit_distance, stability_experiment, translate

from conftest import random_field

FOC = EquationParams(2.0, Sign.FOCUSING)


@pytest.fixture(scope="module")
def small():
    g = make_grid(64, 16, 30.0)
    return g, line_soliton(0.5, FOC, g)


@pytest.fixture(scope="module")
def bump():
    g = make_grid(32, 8, 16.0)
    X, Y = g.mesh()
    return g, Field(g, np.exp(-X**2 / 3) * (1 + 0.4 * np.cos(Y) + 0.2j * np.sin(2 * Y)))


def test_self_distance(small):
    _, q = small
    r = orbit_distance(q, q)
    assert r.distance <= 1e-10 * norm(q, ANISO_HALF)
    assert r.best_shift == (0.0, 0.0)
    assert r.best_phase == pytest.approx(0.0, abs=1e-12)


def test_orbit_member_recovered(bump):
    g, q = bump
    u = translate(q, 5, 0) * np.exp(1j * math.pi / 3)
    r = orbit_distance(u, q)
    assert r.distance <= 1e-10
    assert r.best_shift == (5.0, 0.0)
    assert r.best_phase == pytest.approx(math.pi / 3, abs=1e-12)
    u2 = translate(q, -3, 2) * np.exp(-1j)
    r2 = orbit_distance(u2, q)
    assert r2.best_shift == (-3.0, 2.0) and r2.best_phase == pytest.approx(2 * math.pi - 1, abs=1e-12)


def test_translate_is_lattice_roll(bump):
    g, q = bump
    assert np.allclose(translate(q, 3, 1).values, np.roll(q.values, (-3, -1), axis=(0, 1)), atol=1e-13)


def brute_force(u, q):
    g = u.grid
    best = math.inf
    for a in range(g.nx):
        for b in range(g.ny):
            t = Field(g, np.roll(q.values, (-a, -b), axis=(0, 1)))
            ip = inner_product(u, t, ANISO_HALF)
            d = norm(u - t * np.exp(1j * np.angle(ip)), ANISO_HALF)
            best = min(best, d)
    return best


def test_against_brute_force(bump):
    g, q = bump
    u = q + random_field(g, 17) * 0.3
    r = orbit_distance(u, q, refine=False)
    assert r.distance == pytest.approx(brute_force(u, q), rel=1e-10)
    assert orbit_distance(u, q).distance <= r.distance
    assert r.distance <= norm(u - q, ANISO_HALF)


def test_orthogonal_perturbation_pythagoras(bump):
    g, q = bump
    basis = [q, apply_symbol(q, Symbol.DX), Field.from_spectral(g, 1j * g.ETA * q.spectral)]
    ortho = []
    for b in basis:
        for o in ortho:
            b = b - o * (inner_product(b, o, ANISO_HALF) / inner_product(o, o, ANISO_HALF))
        ortho.append(b)
    p = random_field(g, 23)
    for o in ortho:
        p = p - o * (inner_product(p, o, ANISO_HALF) / inner_product(o, o, ANISO_HALF))
    delta = 1e-2
    u = q + p * delta
    d = orbit_distance(u, q).distance
    assert d == pytest.approx(delta * norm(p, ANISO_HALF), rel=1e-6)
    assert brute_force(u, q) == pytest.approx(delta * norm(p, ANISO_HALF), rel=1e-6)


@given(st.integers(0, 1000), st.floats(0, 2 * math.pi))
def test_invariances(seed, alpha):
    g = make_grid(32, 8, 16.0)
    X, Y = g.mesh()
    q = Field(g, np.exp(-X**2 / 3) * (1 + 0.4 * np.cos(Y)))
    u = q + random_field(g, seed) * 0.2
    r = orbit_distance(u, q)
    scale = norm(u, ANISO_HALF) + norm(q, ANISO_HALF)
    assert orbit_distance(u * np.exp(1j * alpha), q).distance == pytest.approx(r.distance, abs=1e-12 * scale)
    shifted = Field(g, np.roll(u.values, (7, 3), axis=(0, 1)))
    assert orbit_distance(shifted, q).distance == pytest.approx(r.distance, abs=1e-12 * scale)
    assert orbit_distance(q, u).distance == pytest.approx(r.distance, abs=1e-10 * scale)
    ident = r.distance**2 + 2 * r.g_max - norm(u, ANISO_HALF) ** 2 - norm(q, ANISO_HALF) ** 2
    assert abs(ident) <= 1e-10 * scale**2


def test_grid_mismatch(small, bump):
    with pytest.raises(ValueError):
        orbit_distance(small[1], bump[1])


def test_unperturbed_stays_on_orbit(small):
    g, r = small
    gs = gradient_flow(r, mass(r), FOC)
    res = stability_experiment(gs, Field.zeros(g), FOC, 2.0, 5e-3, 40)
    assert res.max_distance <= 10 * (gs.residual_l2 + 1e-5)
    assert res.ledger.extra["orbit_dist"] == list(res.distances)
    assert res.ledger.to_csv().splitlines()[0].endswith(",orbit_dist")


def test_defocusing_rejected(small):
    g, r = small
    gs = gradient_flow(r, mass(r), FOC)
    with pytest.raises(ValueError):
        stability_experiment(gs, Field.zeros(g), EquationParams(2.0, Sign.DEFOCUSING), 1.0, 0.01)
