"""Integer lattices for ideals of O_L: products, quotients, and CRT maps.

An ideal is stored as the Hermite normal form of its Z-basis in the flat
coordinates of :meth:`lstic.numfield.AlgebraicInt.flat`.  All ideal
arithmetic is exact; floating point appears only as a search heuristic
(Babai rounding, LLL swaps) whose output is always re-verified exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    FactorizationMismatch,
    NotCoprime,
    QuotientTooLarge,
    RoundingUnsafe,
    ZeroIdeal,
)
from .numfield import (
    AlgebraicInt,
    TowerSpec,
    all_embeddings,
    from_flat,
    nf_conj,
    nf_mul,
    nf_sigma,
)

__all__ = [
    "IdealLattice",
    "ideal_from_generators",
    "principal_ideal",
    "whole_ring",
    "ideal_product",
    "ideal_power",
    "ideal_is_coprime",
    "ideal_conjugate",
    "ideal_contains",
    "reduce_mod",
    "quotient_enumerate",
    "exact_energy",
    "energy_form",
    "leader_search",
    "ideal_min_norm",
    "build_crt_codebook",
    "CrtCodebook",
    "verify_prime_factorization",
    "FactorizationReport",
]

QUOTIENT_CAP = 10**6


# ---------------------------------------------------------------------------
# Hermite normal form


def _hnf(rows: Sequence[Sequence[int]], d: int, transform: bool = False):
    """Row-style HNF with positive pivots on the diagonal.

    Returns (H, U) where H is a list of pivot rows (one per pivot column, in
    column order) and U, when requested, holds the integer combinations of
    the input rows that produce each H row.
    """
    m = len(rows)
    width = d + (m if transform else 0)
    work = []
    for i, r in enumerate(rows):
        row = list(r) + ([0] * m if transform else [])
        if transform:
            row[d + i] = 1
        work.append(row)

    pivots: list[list[int]] = []
    for col in range(d):
        while True:
            nz = [i for i, r in enumerate(work) if r[col] != 0]
            if not nz:
                break
            imin = min(nz, key=lambda i: abs(work[i][col]))
            pivot = work.pop(imin)
            done = True
            for r in work:
                if r[col] != 0:
                    q = r[col] // pivot[col]
                    for k in range(width):
                        r[k] -= q * pivot[k]
                    if r[col] != 0:
                        done = False
            work.insert(0, pivot)
            if done:
                break
        nz = [i for i, r in enumerate(work) if r[col] != 0]
        if not nz:
            continue
        pivot = work.pop(nz[0])
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        # reduce the rows already fixed above this pivot
        for fixed in pivots:
            q = fixed[col] // pivot[col]
            if q:
                for k in range(width):
                    fixed[k] -= q * pivot[k]
        pivots.append(pivot)

    H = [tuple(r[:d]) for r in pivots]
    U = [tuple(r[d:]) for r in pivots] if transform else None
    return H, U


# ---------------------------------------------------------------------------
# Ideal lattices


@dataclass(frozen=True)
class IdealLattice:
    """Full-rank sublattice of O_L closed under multiplication by O_L."""

    tower: TowerSpec
    basis: tuple[tuple[int, ...], ...]

    @property
    def norm(self) -> int:
        """Index [O_L : I] = product of the HNF diagonal."""
        return _prod(self.basis[i][i] for i in range(len(self.basis)))

    def basis_elements(self) -> list[AlgebraicInt]:
        return [from_flat(self.tower, row) for row in self.basis]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, IdealLattice)
            and self.tower == other.tower
            and self.basis == other.basis
        )

    def __hash__(self) -> int:
        return hash((self.tower.name, self.basis))


def _prod(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out *= v
    return out


def _span_to_ideal(t: TowerSpec, flats: list[tuple[int, ...]]) -> IdealLattice:
    d = t.abs_degree
    H, _ = _hnf(flats, d)
    if len(H) < d:
        raise ZeroIdeal("generators span a rank-deficient lattice")
    return IdealLattice(t, tuple(H))


def ideal_from_generators(t: TowerSpec, gens: Sequence[AlgebraicInt]) -> IdealLattice:
    """The O_L-ideal generated by ``gens``.

    The Z-span of each generator times every integral-basis monomial is
    stacked and brought to HNF.

    Raises:
        ZeroIdeal: if all generators are zero.
    """
    monomials = t.integral_basis()
    flats = []
    for g in gens:
        if g.is_zero():
            continue
        for m in monomials:
            flats.append(nf_mul(g, m, t).flat())
    if not flats:
        raise ZeroIdeal("no nonzero generators given")
    return _span_to_ideal(t, flats)


def principal_ideal(t: TowerSpec, x: AlgebraicInt) -> IdealLattice:
    return ideal_from_generators(t, [x])


def whole_ring(t: TowerSpec) -> IdealLattice:
    d = t.abs_degree
    eye = tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))
    return IdealLattice(t, eye)


def ideal_product(a: IdealLattice, b: IdealLattice) -> IdealLattice:
    """Product ideal: HNF of all pairwise products of basis elements."""
    t = a.tower
    ea = a.basis_elements()
    eb = b.basis_elements()
    flats = [nf_mul(x, y, t).flat() for x in ea for y in eb]
    return _span_to_ideal(t, flats)


def ideal_power(a: IdealLattice, k: int) -> IdealLattice:
    if k < 0:
        raise ValueError("negative ideal power")
    result = whole_ring(a.tower)
    square = a
    while k:
        if k & 1:
            result = ideal_product(result, square)
        k >>= 1
        if k:
            square = ideal_product(square, square)
    return result


def ideal_is_coprime(a: IdealLattice, b: IdealLattice) -> bool:
    """True when a + b = O_L."""
    d = a.tower.abs_degree
    H, _ = _hnf(list(a.basis) + list(b.basis), d)
    return len(H) == d and all(H[i][i] == 1 for i in range(d))


def ideal_conjugate(a: IdealLattice) -> IdealLattice:
    """Image of the ideal under the conjugation automorphism."""
    t = a.tower
    flats = [nf_conj(x, t).flat() for x in a.basis_elements()]
    return _span_to_ideal(t, flats)


def _coords_in(a: IdealLattice, flat: Sequence[int]) -> list[int] | None:
    """Integer coordinates of ``flat`` over the HNF basis, or None."""
    v = list(flat)
    d = len(v)
    coords = [0] * d
    for i in range(d):
        piv = a.basis[i][i]
        if v[i] % piv != 0:
            return None
        c = v[i] // piv
        coords[i] = c
        if c:
            for k in range(i, d):
                v[k] -= c * a.basis[i][k]
    return coords


def ideal_contains(a: IdealLattice, x: AlgebraicInt) -> bool:
    return _coords_in(a, x.flat()) is not None


def reduce_mod(x: AlgebraicInt, a: IdealLattice) -> AlgebraicInt:
    """Canonical representative of x + a in the HNF box.

    The result has coordinate i in [0, H[i][i]).
    """
    v = list(x.flat())
    d = len(v)
    for i in range(d):
        q = v[i] // a.basis[i][i]
        if q:
            for k in range(i, d):
                v[k] -= q * a.basis[i][k]
    return from_flat(x.tower, v)


def quotient_enumerate(
    modulus: IdealLattice,
    within: IdealLattice | None = None,
    cap: int = QUOTIENT_CAP,
) -> list[AlgebraicInt]:
    """Complete residue system of ``within`` (default O_L) modulo ``modulus``.

    Args:
        modulus: the denser lattice being quotiented by.
        within: an ideal containing ``modulus``; None means the whole ring.
        cap: refuse to enumerate more than this many residues.

    Raises:
        QuotientTooLarge: when the quotient exceeds ``cap``.
        ZeroIdeal: when ``modulus`` is not contained in ``within``.
    """
    t = modulus.tower
    d = t.abs_degree
    if within is None:
        count = modulus.norm
        if count > cap:
            raise QuotientTooLarge(f"quotient of size {count} exceeds cap {cap}")
        ranges = [range(modulus.basis[i][i]) for i in range(d)]
        return [from_flat(t, v) for v in itertools.product(*ranges)]

    coords = []
    for row in modulus.basis:
        c = _coords_in(within, row)
        if c is None:
            raise ZeroIdeal("modulus is not contained in the enclosing ideal")
        coords.append(c)
    M, _ = _hnf(coords, d)
    count = _prod(M[i][i] for i in range(d))
    if count > cap:
        raise QuotientTooLarge(f"quotient of size {count} exceeds cap {cap}")
    basis_rows = [np.array(row, dtype=object) for row in within.basis]
    out = []
    for digits in itertools.product(*[range(M[i][i]) for i in range(d)]):
        v = np.zeros(d, dtype=object)
        for c, row in zip(digits, basis_rows):
            if c:
                v = v + c * row
        out.append(from_flat(t, [int(x) for x in v]))
    return out


# ---------------------------------------------------------------------------
# Transmit energy


def _energy_weight(t: TowerSpec) -> AlgebraicInt:
    if t.alpha is None:
        return t.one()
    a = t.alpha_element()
    return nf_mul(a, nf_conj(a, t), t)


_ENERGY_INT_CACHE: dict[tuple, object] = {}


def _exact_energy_int(x: AlgebraicInt, t: TowerSpec) -> int:
    """Exact transmitted energy of one layer symbol, without the scale."""
    w = _energy_weight(t)
    y = nf_mul(nf_mul(w, x, t), nf_conj(x, t), t)
    acc = t.zero()
    for k in range(t.n):
        acc = acc + nf_sigma(y, k, t)
    for c in acc.coeffs[1:]:
        if c != (0, 0):
            raise RoundingUnsafe("trace form did not land in the base field")
    a, b = acc.coeffs[0]
    if b != 0:
        raise RoundingUnsafe("trace form has a nonreal base component")
    return a


def exact_energy(x: AlgebraicInt, t: TowerSpec | None = None) -> Fraction:
    """Exact squared amplitude contributed by a layer symbol, as a rational.

    Includes the shaping generator and the global power scale, so this is
    the quantity the coset-leader search minimizes.
    """
    if t is None:
        t = x.tower
    return _exact_energy_int(x, t) * t.scale_sq


def energy_form(t: TowerSpec) -> np.ndarray:
    """Integer Gram matrix M with flat(x) @ M @ flat(x) == 2 * energy_int(x)."""
    key = t._cache_key()
    cached = _ENERGY_INT_CACHE.get(key)
    if cached is not None:
        return cached
    basis = t.integral_basis()
    d = t.abs_degree
    single = [_exact_energy_int(b, t) for b in basis]
    M = np.zeros((d, d), dtype=np.int64)
    for i in range(d):
        M[i, i] = 2 * single[i]
    for i in range(d):
        for j in range(i + 1, d):
            pair = _exact_energy_int(basis[i] + basis[j], t)
            M[i, j] = M[j, i] = pair - single[i] - single[j]
    _ENERGY_INT_CACHE[key] = M
    return M


# ---------------------------------------------------------------------------
# Coset leaders

_LLL_CACHE: dict[tuple, np.ndarray] = {}
_OFFSET_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _lll(rows: np.ndarray, M: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """Integer LLL reduction of lattice rows under the quadratic form M."""
    B = rows.astype(object).copy()
    d = len(B)

    def dot(u, v):
        return float((u @ M @ v))

    def gso():
        Bs = [np.array([float(x) for x in B[i]]) for i in range(d)]
        mu = np.zeros((d, d))
        Mf = M.astype(float)
        ortho = []
        norms = []
        for i in range(d):
            v = Bs[i].copy()
            for j in range(i):
                mu[i, j] = (Bs[i] @ Mf @ ortho[j]) / norms[j]
                v = v - mu[i, j] * ortho[j]
            ortho.append(v)
            norms.append(max(v @ Mf @ v, 1e-300))
        return mu, norms

    mu, norms = gso()
    k = 1
    steps = 0
    while k < d and steps < 10000:
        steps += 1
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[k] = B[k] - q * B[j]
                mu, norms = gso()
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            B[[k - 1, k]] = B[[k, k - 1]]
            mu, norms = gso()
            k = max(k - 1, 1)
    return B


def leader_search(
    rep: AlgebraicInt, modulus: IdealLattice, t: TowerSpec | None = None
) -> AlgebraicInt:
    """Minimum-energy element of the coset rep + modulus.

    A rounded least-squares (Babai) point seeds an exhaustive box search
    around it; the exact integer energy form decides, with ties broken by
    the lexicographically smallest flat coordinate vector.  The winner is
    re-checked with scalar exact arithmetic.

    Raises:
        RoundingUnsafe: if the minimizer touches the search-box boundary,
            meaning the box radius cannot be trusted.
    """
    if t is None:
        t = rep.tower
    d = t.abs_degree
    M = energy_form(t)
    cache_key = (t._cache_key(), modulus.basis)
    B = _LLL_CACHE.get(cache_key)
    if B is None:
        B = np.array(_lll(np.array(modulus.basis, dtype=np.int64), M).astype(np.int64))
        _LLL_CACHE[cache_key] = B
    r = np.array(rep.flat(), dtype=np.int64)

    A = B @ M @ B.T
    rhs = B @ M @ r
    c_star = np.linalg.solve(A.astype(float), rhs.astype(float))
    c0 = np.rint(c_star).astype(np.int64)

    radius = 2 if d <= 8 else 1
    offsets = _OFFSET_CACHE.get((d, radius))
    if offsets is None:
        offsets = np.array(
            list(itertools.product(range(-radius, radius + 1), repeat=d)),
            dtype=np.int64,
        )
        _OFFSET_CACHE[(d, radius)] = offsets
    cand = c0[None, :] + offsets
    X = r[None, :] - cand @ B
    vals = np.einsum("ni,ij,nj->n", X, M, X)
    best = vals.min()
    idx = np.flatnonzero(vals == best)
    winner = min(idx, key=lambda i: tuple(X[i]))
    if d <= 8 and np.abs(offsets[winner]).max() >= radius:
        raise RoundingUnsafe("coset leader search hit the box boundary")
    x = from_flat(t, [int(v) for v in X[winner]])
    # exact scalar cross-check of the vectorized energy
    if 2 * _exact_energy_int(x, t) != int(best):
        raise RoundingUnsafe("vectorized energy disagrees with exact arithmetic")
    return x


def ideal_min_norm(
    a: IdealLattice, t: TowerSpec | None = None, extra_radius: int = 2
) -> tuple[int, AlgebraicInt]:
    """Smallest |N_{L/Q}| over nonzero lattice points in a bounded search box.

    The box lives in LLL-reduced coordinates: full radius 2 for degree at
    most 8, and for degree 12 radius 1 everywhere plus ``extra_radius`` on
    the six shortest reduced vectors.  A floating-point product of
    embeddings ranks candidates and the leaders are re-verified exactly.
    """
    if t is None:
        t = a.tower
    d = t.abs_degree
    M = energy_form(t)
    B = np.array(_lll(np.array(a.basis, dtype=np.int64), M).astype(np.int64))

    boxes = []
    if d <= 8:
        boxes.append(itertools.product(range(-2, 3), repeat=d))
    else:
        boxes.append(itertools.product(range(-1, 2), repeat=d))
        half = d // 2
        boxes.append(
            (c + (0,) * (d - half))
            for c in itertools.product(range(-extra_radius, extra_radius + 1), repeat=half)
        )
    coords = np.array(sorted(set(itertools.chain(*boxes))), dtype=np.int64)
    coords = coords[np.any(coords != 0, axis=1)]

    emb = np.array(
        [all_embeddings(x, t) for x in [from_flat(t, row) for row in np.array(B)]],
        dtype=np.complex128,
    )  # (d, deg)
    values = np.abs((coords.astype(np.float64) @ emb)).prod(axis=1)
    order = np.argsort(values)
    shortlist = order[: min(len(order), 64)]
    best_norm = None
    best_x = None
    for i in shortlist:
        x = from_flat(t, [int(v) for v in coords[i] @ B])
        nx = _abs_norm_exact(x, t)
        if nx == 0:
            continue
        if best_norm is None or nx < best_norm or (
            nx == best_norm and tuple(x.flat()) < tuple(best_x.flat())
        ):
            best_norm, best_x = nx, x
    if best_norm is None:
        raise ZeroIdeal("no nonzero lattice point found in the search box")
    return best_norm, best_x


def _abs_norm_exact(x: AlgebraicInt, t: TowerSpec) -> int:
    from .numfield import nf_norm_abs

    return nf_norm_abs(x, t)


# ---------------------------------------------------------------------------
# CRT codebooks


@dataclass
class CrtCodebook:
    """Residue-to-leader map for one layer of a layered code.

    Message k ranges over the canonical residues of O_L modulo the k-th
    ideal; a message tuple is glued into a single residue modulo the product
    ideal through fixed idempotents and then replaced by the minimum-energy
    representative of its coset.
    """

    tower: TowerSpec
    ideals: tuple[IdealLattice, ...]
    modulus: IdealLattice
    idempotents: tuple[AlgebraicInt, ...]
    residues: tuple[tuple[AlgebraicInt, ...], ...]

    def __post_init__(self) -> None:
        self._leaders: dict[tuple[int, ...], AlgebraicInt] = {}
        self._residue_index = []
        for k, reps in enumerate(self.residues):
            table = {r.flat(): i for i, r in enumerate(reps)}
            self._residue_index.append(table)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.residues)

    @property
    def size(self) -> int:
        return _prod(self.sizes)

    def message_of_index(self, index: int) -> tuple[int, ...]:
        out = []
        for s in reversed(self.sizes):
            out.append(index % s)
            index //= s
        return tuple(reversed(out))

    def index_of_message(self, message: Sequence[int]) -> int:
        index = 0
        for m, s in zip(message, self.sizes):
            index = index * s + m
        return index

    def residue_of(self, k: int, x: AlgebraicInt) -> int:
        """Index of the canonical residue of x modulo the k-th ideal."""
        return self._residue_index[k][reduce_mod(x, self.ideals[k]).flat()]

    def glue(self, message: Sequence[int]) -> AlgebraicInt:
        """Canonical residue modulo the product ideal encoding the tuple."""
        t = self.tower
        acc = t.zero()
        for m, e, reps in zip(message, self.idempotents, self.residues):
            acc = acc + nf_mul(reps[m], e, t)
        return reduce_mod(acc, self.modulus)

    def leader(self, message: Sequence[int]) -> AlgebraicInt:
        key = tuple(message)
        hit = self._leaders.get(key)
        if hit is None:
            hit = leader_search(self.glue(key), self.modulus, self.tower)
            self._leaders[key] = hit
        return hit

    def all_leaders(self) -> list[AlgebraicInt]:
        """Leaders for every message tuple, in mixed-radix index order."""
        return [self.leader(self.message_of_index(i)) for i in range(self.size)]


def build_crt_codebook(
    t: TowerSpec, ideals: Sequence[IdealLattice], cap: int = QUOTIENT_CAP
) -> CrtCodebook:
    """Assemble the residue gluing map for pairwise coprime ideals.

    Raises:
        NotCoprime: if any two of the ideals share a factor.
        QuotientTooLarge: if a residue system exceeds the enumeration cap.
    """
    ideals = tuple(ideals)
    if not ideals:
        raise ZeroIdeal("need at least one ideal")
    for i in range(len(ideals)):
        for j in range(i + 1, len(ideals)):
            if not ideal_is_coprime(ideals[i], ideals[j]):
                raise NotCoprime(f"ideals {i} and {j} are not coprime")

    modulus = ideals[0]
    for extra in ideals[1:]:
        modulus = ideal_product(modulus, extra)
    if modulus.norm > cap:
        raise QuotientTooLarge(
            f"product quotient of size {modulus.norm} exceeds cap {cap}"
        )

    d = t.abs_degree
    one_flat = t.one().flat()
    idempotents = []
    for k, qk in enumerate(ideals):
        cofactor = whole_ring(t)
        for j, qj in enumerate(ideals):
            if j != k:
                cofactor = ideal_product(cofactor, qj)
        rows = list(qk.basis) + list(cofactor.basis)
        H, U = _hnf(rows, d, transform=True)
        if not (len(H) == d and all(H[i][i] == 1 for i in range(d))):
            raise NotCoprime(f"ideal {k} is not coprime to the others")
        # find the combination equal to 1 and keep only its cofactor part
        combo = _coords_in(IdealLattice(t, tuple(H)), one_flat)
        v = np.zeros(d, dtype=object)
        for c, urow in zip(combo, U):
            for w, row in zip(urow[d:], cofactor.basis):
                if c * w:
                    v = v + c * w * np.array(row, dtype=object)
        e_k = from_flat(t, [int(x) for x in v])
        # e_k = 1 mod q_k and = 0 mod every other ideal, by construction
        if reduce_mod(e_k - t.one(), qk).flat() != t.zero().flat():
            raise NotCoprime("idempotent failed its defining congruence")
        for j, qj in enumerate(ideals):
            if j != k and reduce_mod(e_k, qj).flat() != t.zero().flat():
                raise NotCoprime("idempotent failed its defining congruence")
        idempotents.append(e_k)

    residues = tuple(tuple(quotient_enumerate(q, cap=cap)) for q in ideals)
    return CrtCodebook(t, ideals, modulus, tuple(idempotents), residues)


# ---------------------------------------------------------------------------
# Prime factorizations


@dataclass(frozen=True)
class FactorizationReport:
    p: int
    e: int
    f: int
    g: int


def verify_prime_factorization(
    t: TowerSpec,
    p: int,
    ideals: Sequence[IdealLattice],
    e: int,
    f: int,
) -> FactorizationReport:
    """Check that ``ideals`` with ramification e and inertia f factor p.

    Four conditions: the product of e-th powers equals pO_L; every ideal has
    norm p^f; the ideals are pairwise coprime; and e*f*g matches the field
    degree over the rationals.

    Raises:
        FactorizationMismatch: with a description of the failed condition.
    """
    g = len(ideals)
    if e * f * g != t.abs_degree:
        raise FactorizationMismatch(
            f"p={p}: e*f*g = {e}*{f}*{g} != degree {t.abs_degree}"
        )
    want = p**f
    for i, q in enumerate(ideals):
        if q.norm != want:
            raise FactorizationMismatch(
                f"p={p}: ideal {i} has norm {q.norm}, expected {want}"
            )
    for i in range(g):
        for j in range(i + 1, g):
            if not ideal_is_coprime(ideals[i], ideals[j]):
                raise FactorizationMismatch(f"p={p}: ideals {i} and {j} share a factor")
    product = whole_ring(t)
    for q in ideals:
        product = ideal_product(product, ideal_power(q, e))
    target = principal_ideal(t, t.from_base(p))
    if product != target:
        raise FactorizationMismatch(f"p={p}: product of powers is not (p)")
    return FactorizationReport(p=p, e=e, f=f, g=g)
