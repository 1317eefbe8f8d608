"""Ideal lattices: HNF, products, quotients, energy, and CRT gluing."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from lstic.errors import (
    FactorizationMismatch,
    NotCoprime,
    QuotientTooLarge,
    ZeroIdeal,
)
from lstic.ideals import (
    CrtCodebook,
    IdealLattice,
    _hnf,
    build_crt_codebook,
    energy_form,
    exact_energy,
    ideal_conjugate,
    ideal_contains,
    ideal_from_generators,
    ideal_is_coprime,
    ideal_min_norm,
    ideal_power,
    ideal_product,
    leader_search,
    principal_ideal,
    quotient_enumerate,
    reduce_mod,
    verify_prime_factorization,
    whole_ring,
)
from lstic.numfield import all_embeddings, from_flat, load_tower, nf_embed, nf_mul, nf_norm_abs


@pytest.fixture(scope="module")
def golden_split():
    """Golden tower with the two degree-two prime ideals above 3."""
    g = load_tower("golden")
    b1 = g.element([(1, 0), (-1, -1)])
    b2 = g.element([(1, 0), (-1, 1)])
    return g, principal_ideal(g, b1), principal_ideal(g, b2)


# -- HNF ---------------------------------------------------------------------


@settings(max_examples=80, deadline=None)
@given(
    st.lists(
        st.tuples(*[st.integers(min_value=-30, max_value=30)] * 4),
        min_size=4,
        max_size=7,
    )
)
def test_hnf_shape_and_lattice_equality(rows):
    H, U = _hnf(rows, 4, transform=True)
    for r, pos in zip(H, range(4)):
        # upper triangular with positive pivots and reduced entries above
        lead = next((j for j, v in enumerate(r) if v != 0), None)
        if lead is not None:
            assert r[lead] > 0
    # each output row is the tracked combination of input rows
    for hrow, urow in zip(H, U):
        combo = [0] * 4
        for c, row in zip(urow, rows):
            for k in range(4):
                combo[k] += c * row[k]
        assert tuple(combo) == hrow
    if len(H) == 4:
        lat = IdealLattice(load_tower("golden"), tuple(H))
        for row in rows:
            assert ideal_contains(lat, from_flat(load_tower("golden"), row))


def test_hnf_pivots_reduce_rows_above():
    H, _ = _hnf([(4, 1, 0, 0), (0, 3, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)], 4)
    # entry above the second pivot must be in [0, 3)
    assert 0 <= H[0][1] < H[1][1]


# -- products, powers, coprimality ------------------------------------------


def test_golden_split_primes(golden_split):
    g, q1, q2 = golden_split
    assert q1.norm == q2.norm == 9
    assert ideal_is_coprime(q1, q2)
    assert ideal_conjugate(q1) == q2
    assert ideal_product(q1, q2) == principal_ideal(g, g.from_base(3))
    verify_prime_factorization(g, 3, [q1, q2], e=1, f=2)


def test_golden_ramified_five():
    g = load_tower("golden")
    p1 = principal_ideal(g, g.element([(1, 1), (0, -1)]))
    p1c = principal_ideal(g, g.element([(1, -1), (0, 1)]))
    report = verify_prime_factorization(g, 5, [p1, p1c], e=2, f=1)
    assert (report.e, report.f, report.g) == (2, 1, 2)


def test_perfect3_shaping_prime():
    t = load_tower("perfect3")
    a = principal_ideal(t, t.alpha_element())
    ac = ideal_conjugate(a)
    assert a.norm == ac.norm == 7
    verify_prime_factorization(t, 7, [a, ac], e=3, f=1)


def test_principal_product_matches_element_product(golden_split):
    g, q1, q2 = golden_split
    b1 = g.element([(1, 0), (-1, -1)])
    b2 = g.element([(1, 0), (-1, 1)])
    assert ideal_product(q1, q2) == principal_ideal(g, nf_mul(b1, b2))
    assert ideal_power(q1, 3) == principal_ideal(g, nf_mul(nf_mul(b1, b1), b1))


def test_norm_multiplicative_over_products(golden_split):
    g, q1, q2 = golden_split
    assert ideal_product(q1, q2).norm == q1.norm * q2.norm
    assert ideal_power(q1, 2).norm == q1.norm**2


def test_product_contained_in_factors(golden_split):
    g, q1, q2 = golden_split
    prod = ideal_product(q1, q2)
    for x in prod.basis_elements():
        assert ideal_contains(q1, x)
        assert ideal_contains(q2, x)


def test_failure_modes(golden_split):
    g, q1, q2 = golden_split
    with pytest.raises(ZeroIdeal):
        ideal_from_generators(g, [g.zero()])
    with pytest.raises(NotCoprime):
        build_crt_codebook(g, [q1, q1])
    with pytest.raises(QuotientTooLarge):
        quotient_enumerate(q1, cap=5)
    with pytest.raises(FactorizationMismatch):
        verify_prime_factorization(g, 3, [q1, q2], e=2, f=2)
    with pytest.raises(FactorizationMismatch):
        verify_prime_factorization(g, 3, [q1, q1], e=1, f=2)


# -- quotients and reduction -------------------------------------------------


def test_reduce_mod_is_canonical(golden_split):
    g, q1, _ = golden_split
    reps = quotient_enumerate(q1)
    assert len(reps) == 9
    assert len({r.flat() for r in reps}) == 9
    for r in reps:
        assert reduce_mod(r, q1).flat() == r.flat()
        shifted = r + q1.basis_elements()[0]
        assert reduce_mod(shifted, q1).flat() == r.flat()


def test_quotient_within_sub_ideal(golden_split):
    g, q1, q2 = golden_split
    prod = ideal_product(q1, q2)
    reps = quotient_enumerate(prod, within=q1)
    assert len(reps) == q2.norm
    for r in reps:
        assert ideal_contains(q1, r)
    # distinct modulo the product
    assert len({reduce_mod(r, prod).flat() for r in reps}) == len(reps)


# -- energy ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["golden", "perfect3", "perfect4", "alamouti"])
def test_exact_energy_matches_embeddings(name):
    t = load_tower(name)
    x = t.element([(2, -1) if t.base.degree == 2 else (2, 0), (1, 0)])
    alpha = t.alpha_element() if t.alpha is not None else t.one()
    ax = nf_mul(alpha, x, t)
    numeric = sum(abs(nf_embed(ax, t, m)) ** 2 for m in range(t.n))
    exact = exact_energy(x, t)
    assert abs(float(exact) - float(t.scale_sq) * numeric) < 1e-9 * (1 + numeric)


def test_alamouti_energy_is_twice_modulus_squared():
    t = load_tower("alamouti")
    x = t.element([(3, 0), (-2, 0)])  # 3 - 2i
    assert exact_energy(x, t) == 2 * 13


@pytest.mark.parametrize("name", ["golden", "perfect3", "perfect4", "perfect6", "alamouti"])
def test_energy_form_polarization(name):
    t = load_tower(name)
    M = energy_form(t)

    @settings(max_examples=40, deadline=None)
    @given(st.tuples(*[st.integers(min_value=-5, max_value=5)] * t.abs_degree))
    def inner(flat):
        x = from_flat(t, flat)
        quad = sum(
            int(M[i, j]) * flat[i] * flat[j]
            for i in range(t.abs_degree)
            for j in range(t.abs_degree)
        )
        assert quad == 2 * int(exact_energy(x, t) / t.scale_sq)

    inner()


# -- coset leaders -----------------------------------------------------------


def test_leader_is_minimal_over_its_coset(golden_split):
    g, q1, q2 = golden_split
    prod = ideal_product(q1, q2)
    reps = quotient_enumerate(prod)
    # brute-force check: leader energy equals the minimum over all coset
    # members reachable inside the enumeration box of the quotient
    members = {}
    for r in reps:
        key = reduce_mod(r, prod).flat()
        members.setdefault(key, r)
    for r in list(reps)[:12]:
        lead = leader_search(r, prod, g)
        assert reduce_mod(lead, prod).flat() == reduce_mod(r, prod).flat()
        assert exact_energy(lead, g) <= exact_energy(r, g)


def test_min_norm_of_principal_is_generator_norm(golden_split):
    g, q1, _ = golden_split
    mn, witness = ideal_min_norm(q1, g)
    assert mn == 9
    assert ideal_contains(q1, witness)
    assert nf_norm_abs(witness, g) == 9


def test_min_norm_alamouti():
    t = load_tower("alamouti")
    q = principal_ideal(t, t.element([(1, 0), (2, 0)]))  # 1 + 2i
    assert q.norm == 5
    mn, witness = ideal_min_norm(q, t)
    assert mn == 5


# -- CRT codebooks -----------------------------------------------------------


def test_crt_codebook_bijection_and_recovery(golden_split):
    g, q1, q2 = golden_split
    cb = build_crt_codebook(g, [q1, q2])
    assert cb.sizes == (9, 9)
    assert cb.size == 81
    seen = set()
    for i in range(cb.size):
        msg = cb.message_of_index(i)
        assert cb.index_of_message(msg) == i
        x = cb.glue(msg)
        seen.add(x.flat())
        for k in range(2):
            assert cb.residue_of(k, x) == msg[k]
    assert len(seen) == cb.size


def test_crt_codebook_additivity(golden_split):
    g, q1, q2 = golden_split
    cb = build_crt_codebook(g, [q1, q2])
    for i, j in [(5, 17), (3, 76), (44, 44), (80, 1)]:
        a = cb.message_of_index(i)
        b = cb.message_of_index(j)
        xa, xb = cb.glue(a), cb.glue(b)
        summed = reduce_mod(xa + xb, cb.modulus)
        combined = tuple(cb.residue_of(k, summed) for k in range(2))
        assert cb.glue(combined).flat() == summed.flat()


def test_crt_leaders_live_in_their_cosets(golden_split):
    g, q1, q2 = golden_split
    cb = build_crt_codebook(g, [q1, q2])
    leaders = cb.all_leaders()
    assert len(leaders) == 81
    assert leaders[0].is_zero()
    for i, lead in enumerate(leaders):
        msg = cb.message_of_index(i)
        assert reduce_mod(lead, cb.modulus).flat() == cb.glue(msg).flat()
