"""Exact ring arithmetic, Galois action, embeddings, and discriminants."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from lstic.errors import TowerMismatch
from lstic.numfield import (
    AlgebraicInt,
    all_embeddings,
    from_flat,
    load_tower,
    nf_conj,
    nf_discriminant,
    nf_embed,
    nf_mul,
    nf_norm_abs,
    nf_norm_rel,
    nf_sigma,
)

TOWER_NAMES = ("golden", "perfect3", "perfect4", "perfect6", "alamouti")


def element_strategy(t):
    coeff = st.integers(min_value=-9, max_value=9)
    if t.base.degree == 1:
        pair = st.tuples(coeff, st.just(0))
    else:
        pair = st.tuples(coeff, coeff)
    return st.tuples(*[pair] * t.n).map(lambda cs: AlgebraicInt(t, cs))


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_ring_axioms(name):
    t = load_tower(name)

    @settings(max_examples=60, deadline=None)
    @given(element_strategy(t), element_strategy(t), element_strategy(t))
    def inner(x, y, z):
        assert (x + y).coeffs == (y + x).coeffs
        assert nf_mul(x, y).coeffs == nf_mul(y, x).coeffs
        assert nf_mul(nf_mul(x, y), z).coeffs == nf_mul(x, nf_mul(y, z)).coeffs
        left = nf_mul(x, y + z)
        right = nf_mul(x, y) + nf_mul(x, z)
        assert left.coeffs == right.coeffs

    inner()


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_norm_is_multiplicative(name):
    t = load_tower(name)

    @settings(max_examples=60, deadline=None)
    @given(element_strategy(t), element_strategy(t))
    def inner(x, y):
        nx = nf_norm_rel(x, t)
        ny = nf_norm_rel(y, t)
        assert nf_norm_rel(nf_mul(x, y), t) == t.base.mul(nx, ny)
        assert nf_norm_abs(nf_mul(x, y), t) == nf_norm_abs(x, t) * nf_norm_abs(y, t)

    inner()


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_sigma_is_a_ring_homomorphism_of_order_n(name):
    t = load_tower(name)

    @settings(max_examples=40, deadline=None)
    @given(element_strategy(t), element_strategy(t))
    def inner(x, y):
        sx = nf_sigma(x, 1, t)
        sy = nf_sigma(y, 1, t)
        assert nf_sigma(x + y, 1, t).coeffs == (sx + sy).coeffs
        assert nf_sigma(nf_mul(x, y), 1, t).coeffs == nf_mul(sx, sy).coeffs
        assert nf_sigma(x, t.n, t).coeffs == x.coeffs

    inner()
    # The orbit of theta must consist of n distinct conjugates.
    orbit = {nf_sigma(t.theta(), k, t).coeffs for k in range(t.n)}
    assert len(orbit) == t.n


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_embeddings_respect_arithmetic_and_galois(name):
    t = load_tower(name)
    x = t.element([(2, 1) if t.base.degree == 2 else (2, 0)] * t.n)
    y = t.theta() + t.one()
    prod = nf_mul(x, y)
    for m in range(t.n):
        ex = nf_embed(x, t, m)
        ey = nf_embed(y, t, m)
        assert abs(nf_embed(prod, t, m) - ex * ey) < 1e-9 * (1 + abs(ex * ey))
        # embedding m is embedding 0 composed with sigma^m
        assert abs(nf_embed(nf_sigma(x, m, t), t, 0) - ex) < 1e-9 * (1 + abs(ex))


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_conjugation_matches_complex_conjugation(name):
    t = load_tower(name)
    x = t.element([(1, -2) if t.base.degree == 2 else (1, 0), (3, 0)])
    cx = nf_conj(x, t)
    assert abs(nf_embed(cx, t, 0) - nf_embed(x, t, 0).conjugate()) < 1e-9
    # conjugation is an involution
    assert nf_conj(cx, t).coeffs == x.coeffs


@pytest.mark.parametrize("name", TOWER_NAMES)
def test_norm_matches_product_of_embeddings(name):
    t = load_tower(name)
    x = t.element([(1, 1) if t.base.degree == 2 else (1, 0), (0, 0), (2, 0)][: t.n])
    prod = 1.0
    for v in all_embeddings(x, t):
        prod *= abs(v)
    assert abs(prod - nf_norm_abs(x, t)) < 1e-6 * (1 + prod)


@pytest.mark.parametrize(
    "name,want",
    [
        ("golden", 400),
        ("perfect3", -64827),
        ("perfect4", 324000000),
        ("perfect6", 843466573910016),
        ("alamouti", -4),
    ],
)
def test_discriminants(name, want):
    assert nf_discriminant(load_tower(name)) == want


def test_golden_arithmetic_facts(golden):
    th = golden.theta()
    assert nf_mul(th, th).coeffs == ((1, 0), (1, 0))  # theta^2 = theta + 1
    assert nf_sigma(th, 1).coeffs == ((1, 0), (-1, 0))  # 1 - theta
    assert nf_norm_rel(th) == (-1, 0)
    alpha = golden.alpha_element()
    assert nf_norm_rel(alpha) == (2, 1)
    assert nf_norm_abs(alpha) == 5


def test_perfect3_cubic_reduction():
    t = load_tower("perfect3")
    th = t.theta()
    cube = nf_mul(nf_mul(th, th), th)
    # theta^3 = -theta^2 + 2 theta + 1
    assert cube.coeffs == ((1, 0), (2, 0), (-1, 0))
    alpha = t.alpha_element()
    assert t.base.norm(nf_norm_rel(alpha)) == 7


def test_perfect4_alpha_norm():
    t = load_tower("perfect4")
    assert nf_norm_rel(t.alpha_element()) == (3, -6)
    assert nf_norm_abs(t.alpha_element()) == 45


def test_alamouti_is_complex_conjugation(alamouti):
    x = alamouti.element([(3, 0), (2, 0)])  # 3 + 2i
    assert nf_sigma(x, 1).coeffs == nf_conj(x).coeffs == ((3, 0), (-2, 0))
    assert nf_norm_abs(x) == 13


def test_flat_round_trip(tower):
    x = tower.element([(2, -1) if tower.base.degree == 2 else (2, 0)] * tower.n)
    assert from_flat(tower, x.flat()).coeffs == x.coeffs
    assert len(x.flat()) == tower.abs_degree


def test_mixed_tower_arithmetic_rejected():
    g = load_tower("golden")
    a = load_tower("alamouti")
    with pytest.raises(TowerMismatch):
        g.theta() + a.theta()


def test_load_tower_from_file(tmp_path):
    cfg = tmp_path / "mini.cfg"
    cfg.write_text(
        "[tower]\nname = mini\nbase = Zi\ndegree = 2\ngamma = 0,1\n"
        "[minpoly]\nc0 = -1\nc1 = -1\nc2 = 1\n"
        "[sigma]\nc0 = 1\nc1 = -1\n"
    )
    t = load_tower(str(cfg))
    assert t.name == "mini"
    assert t.alpha is None
    with pytest.raises(FileNotFoundError):
        load_tower("no_such_tower")


def test_bad_tower_definitions_rejected():
    import configparser

    from lstic.numfield import _load_from_parser

    # sigma that is not an automorphism of order n
    parser = configparser.ConfigParser()
    parser.read_string(
        "[tower]\nname = broken\nbase = Zi\ndegree = 2\ngamma = 0,1\n"
        "[minpoly]\nc0 = -1\nc1 = -1\nc2 = 1\n"
        "[sigma]\nc0 = 0\nc1 = 2\n"
    )
    with pytest.raises(ValueError):
        _load_from_parser(parser)
