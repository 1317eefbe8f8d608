"""Layered codes with residue messages, subcodes from revealed symbols, and
exact determinant statistics.

Each of the n layers carries one message tuple: for every ideal q_k in the
configured list, a residue index modulo q_k.  The tuple is glued into a
single residue modulo the product ideal and replaced by the minimum-energy
coset representative, so the transmitted lattice point is determined by the
messages alone.  Revealing the k-th residue of every layer (side
information) restricts the code to a shifted sublattice whose layer
differences all lie in q_k; the minimum determinant grows accordingly, and
this module measures that growth exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .errors import AlphabetViolation, BudgetExceeded
from .ideals import (
    CrtCodebook,
    IdealLattice,
    build_crt_codebook,
    ideal_from_generators,
    ideal_min_norm,
    ideal_power,
    ideal_product,
    principal_ideal,
    quotient_enumerate,
    reduce_mod,
    whole_ring,
)
from .numfield import AlgebraicInt, Pair, TowerSpec, nf_norm_rel
from .stbc import Codebook, Codeword, build_codeword

__all__ = [
    "PairStats",
    "LsticCode",
    "Subcode",
    "SideInfoConfig",
    "GainReport",
    "TableRow",
    "build_code",
    "difference_stats",
    "side_info_gain",
    "predict_cer",
    "shaping_ideal",
    "shaping_penalty_db",
    "table_rows",
    "table_code",
]

DEFAULT_BUDGET = 10**8

# decibel value of 20*log10(2): the exact gain per halved subset rate when
# the subset ideal is principal with a norm-achieving generator
GAIN_QUANTUM_DB = 20 * math.log10(2)


def _log10(fr: Fraction) -> float:
    return math.log10(fr.numerator) - math.log10(fr.denominator)


# ---------------------------------------------------------------------------
# Exact pair statistics over per-layer difference multisets


@dataclass(frozen=True)
class PairStats:
    """Minimum determinant over a difference code, with its multiplicity.

    The sweep runs over tuples of canonical difference classes (one
    representative per residue class, each counted once); ``kissing`` is the
    number of nonzero tuples achieving ``min_det``.
    """

    size: int
    min_det: Fraction
    kissing: int


def _vmul(kind: str, ar, ai, br, bi):
    if kind == "Zw":
        return ar * br - ai * bi, ar * bi + ai * br - ai * bi
    if kind == "Zi":
        return ar * br - ai * bi, ar * bi + ai * br
    return ar * br, ar * 0


def _vmul_const(kind: str, ar, ai, c: Pair):
    cr, ci = c
    if kind == "Zw":
        return ar * cr - ai * ci, ar * ci + ai * cr - ai * ci
    if kind == "Zi":
        return ar * cr - ai * ci, ar * ci + ai * cr
    return ar * cr, ar * 0


def _vnormsq(kind: str, ar, ai):
    if kind == "Zw":
        return ar * ar - ar * ai + ai * ai
    if kind == "Zi":
        return ar * ar + ai * ai
    return ar * ar


def _normsq_pair(t: TowerSpec, pair: Pair) -> int:
    if t.base.degree == 2:
        return t.base.norm(pair)
    return pair[0] * pair[0]


def _norm_table(t: TowerSpec, symbols: Sequence[AlgebraicInt]) -> tuple[np.ndarray, np.ndarray]:
    """Distinct relative norms of the given symbols, with multiplicities.

    Returns (values, counts) where values is an (m, 2) int64 array of
    base-ring pairs N(x) and counts holds how many symbols share each value.
    Only valid for quadratic towers, where the codeword determinant depends
    on a layer symbol through its relative norm alone.
    """
    kind = t.base.kind
    flats = np.array([s.flat() for s in symbols], dtype=np.int64)
    trace = t.base.neg(t.minpoly[1])
    const = t.minpoly[0]
    if t.base.degree == 2:
        ur, ui, vr, vi = flats[:, 0], flats[:, 1], flats[:, 2], flats[:, 3]
    else:
        ur, vr = flats[:, 0], flats[:, 1]
        ui = np.zeros_like(ur)
        vi = ui
    uur, uui = _vmul(kind, ur, ui, ur, ui)
    uvr, uvi = _vmul(kind, ur, ui, vr, vi)
    vvr, vvi = _vmul(kind, vr, vi, vr, vi)
    tr_r, tr_i = _vmul_const(kind, uvr, uvi, trace)
    c_r, c_i = _vmul_const(kind, vvr, vvi, const)
    n_r = uur + tr_r + c_r
    n_i = uui + tr_i + c_i
    return np.unique(np.stack([n_r, n_i], axis=1), axis=0, return_counts=True)


def _pair_stats_quadratic(
    t: TowerSpec, layer_symbols: Sequence[Sequence[AlgebraicInt]], budget: int
) -> PairStats:
    kind = t.base.kind
    if layer_symbols[1] is layer_symbols[0]:
        t0 = _norm_table(t, layer_symbols[0])
        tables = [t0, t0]
    else:
        tables = [_norm_table(t, syms) for syms in layer_symbols]
    (v0, c0), (v1, c1) = tables
    evals = len(v0) * len(v1)
    if evals > budget:
        raise BudgetExceeded(
            f"minimum-determinant search needs {evals} evaluations, budget is {budget}"
        )
    g1r, g1i = _vmul_const(kind, v1[:, 0], v1[:, 1], t.gamma)
    best: int | None = None
    hits = 0
    step = max(1, 4_000_000 // max(1, len(v1)))
    for start in range(0, len(v0), step):
        ar = v0[start : start + step, 0:1]
        ai = v0[start : start + step, 1:2]
        m = _vnormsq(kind, ar - g1r[None, :], ai - g1i[None, :])
        w = c0[start : start + step, None] * c1[None, :]
        live = m > 0  # zero determinant happens only for the all-zero tuple
        if not live.any():
            continue
        local = int(m[live].min())
        if best is None or local < best:
            best = local
            hits = int(w[live & (m == local)].sum())
        elif local == best:
            hits += int(w[live & (m == best)].sum())
    if best is None:
        raise BudgetExceeded("no nonzero difference tuples to compare")
    weight = t.alpha_element() if t.alpha is not None else t.one()
    alpha_norm = _normsq_pair(t, nf_norm_rel(weight, t))
    size = 1
    for syms in layer_symbols:
        size *= len(syms)
    min_det = best * alpha_norm * t.scale_sq**t.n
    return PairStats(size=size, min_det=min_det, kissing=hits)


def _pair_stats_generic(
    t: TowerSpec, layer_symbols: Sequence[Sequence[AlgebraicInt]], budget: int
) -> PairStats:
    n = t.n
    diffs = [list(syms) for syms in layer_symbols]
    widths = [len(ds) for ds in diffs]
    grid = 1
    for w in widths:
        grid *= w
    if grid > budget:
        raise BudgetExceeded(
            f"minimum-determinant search needs {grid} evaluations, budget is {budget}"
        )

    from .numfield import nf_embed, nf_mul, nf_sigma

    s = float(t.scale_sq) ** 0.5
    gamma0 = complex(t.base.embed(t.gamma))
    alpha = t.alpha_element() if t.alpha is not None else t.one()
    tables = []
    for ds in diffs:
        tab = np.empty((len(ds), n), dtype=np.complex128)
        for j, d in enumerate(ds):
            ad = nf_mul(alpha, d, t)
            for m in range(n):
                tab[j, m] = complex(nf_embed(nf_sigma(ad, m, t), t, 0)) * s
        tables.append(tab)

    zero_index = 0
    stride = grid
    strides = []
    for w, ds in zip(widths, diffs):
        stride //= w
        strides.append(stride)
        zero_index += ds.index(t.zero()) * stride

    # numeric sweep to locate the minimum, then exact confirmation of every
    # tuple within a generous margin of it
    chunk = 1 << 16
    num_min = math.inf
    candidates: list[int] = []
    margin = 1e-6
    for start in range(0, grid, chunk):
        idx = np.arange(start, min(start + chunk, grid))
        mats = np.zeros((len(idx), n, n), dtype=np.complex128)
        digits = [(idx // st) % w for st, w in zip(strides, widths)]
        for l in range(n):
            vals = tables[l][digits[l]]
            for m in range(n):
                c = (l + m) % n
                factor = gamma0 if c < m else 1.0
                mats[:, m, c] = factor * vals[:, m]
        det_sq = np.abs(np.linalg.det(mats)) ** 2
        inside = (idx == zero_index)
        det_sq[inside] = math.inf
        local = det_sq.min()
        if local < num_min / (1 + margin):
            num_min = min(num_min, local)
            candidates = [int(i) for i in idx[det_sq <= num_min * (1 + margin)]]
        else:
            num_min = min(num_min, local)
            candidates.extend(int(i) for i in idx[det_sq <= num_min * (1 + margin)])

    exact: dict[Fraction, int] = {}
    for index in candidates:
        layers = []
        for st, w, ds in zip(strides, widths, diffs):
            layers.append(ds[(index // st) % w])
        value = build_codeword(layers, t).exact_det().abs_sq
        if float(value) <= num_min * (1 + margin):
            exact[value] = exact.get(value, 0) + 1
    min_det = min(exact)
    assert min_det > 0
    size = 1
    for syms in layer_symbols:
        size *= len(syms)
    return PairStats(size=size, min_det=min_det, kissing=exact[min_det])


def difference_stats(
    t: TowerSpec, layer_symbols: Sequence[Sequence[AlgebraicInt]], budget: int = DEFAULT_BUDGET
) -> PairStats:
    """Exact minimum |det|^2 over nonzero tuples of difference classes.

    ``layer_symbols`` holds, per layer, one canonical representative of each
    difference residue class (for a full code this is the leader set itself;
    layer differences reduce onto it).  The sweep covers every nonzero tuple
    exactly once, so the multiplicity is a plain count.  ``budget`` caps the
    number of determinant evaluations.

    Raises:
        BudgetExceeded: when the sweep would need more evaluations.
    """
    if len(layer_symbols) != t.n:
        raise ValueError("need one symbol set per layer")
    if t.n == 2:
        return _pair_stats_quadratic(t, layer_symbols, budget)
    return _pair_stats_generic(t, layer_symbols, budget)


# ---------------------------------------------------------------------------
# Codes, subcodes, side information


@dataclass
class LsticCode:
    """Layered code whose layer messages are residues modulo a list of ideals."""

    tower: TowerSpec
    crt: CrtCodebook

    @property
    def ideals(self) -> tuple[IdealLattice, ...]:
        return self.crt.ideals

    @property
    def layer_size(self) -> int:
        return self.crt.size

    @property
    def size(self) -> int:
        return self.crt.size**self.tower.n

    def rate(self, k: int) -> float:
        """Bits per real channel symbol carried by the k-th residue."""
        t = self.tower
        return math.log2(self.crt.sizes[k]) / (t.n * t.base.degree)

    def subset_rate(self, subset: Iterable[int]) -> float:
        return sum(self.rate(k) for k in subset)

    def encode(self, message: Sequence[Sequence[int]]) -> Codeword:
        """Codeword for per-layer residue tuples (one tuple per layer)."""
        t = self.tower
        if len(message) != t.n:
            raise AlphabetViolation(f"need {t.n} layer messages, got {len(message)}")
        sizes = self.crt.sizes
        layers = []
        for row in message:
            if len(row) != len(sizes):
                raise AlphabetViolation(
                    f"need {len(sizes)} residue indices per layer, got {len(row)}"
                )
            for m, s in zip(row, sizes):
                if not 0 <= m < s:
                    raise AlphabetViolation(f"residue index {m} out of range [0, {s})")
            layers.append(self.crt.leader(tuple(row)))
        return build_codeword(layers, t)

    def layer_symbols(self) -> tuple[Sequence[AlgebraicInt], ...]:
        """Per-layer transmit alphabets; all layers share one leader list."""
        leaders = self.crt.all_leaders()
        return tuple([leaders] * self.tower.n)

    def difference_classes(self) -> list[AlgebraicInt]:
        """Canonical residues modulo the product ideal, zero included."""
        return quotient_enumerate(self.crt.modulus)

    def stats(self, budget: int = DEFAULT_BUDGET) -> PairStats:
        grid = self.crt.modulus.norm**self.tower.n
        if grid > budget:
            raise BudgetExceeded(
                f"minimum-determinant search needs {grid} evaluations, budget is {budget}"
            )
        classes = self.difference_classes()
        return difference_stats(self.tower, tuple([classes] * self.tower.n), budget)

    def subcode(self, config: "SideInfoConfig") -> "Subcode":
        return Subcode(self, config)


def build_code(t: TowerSpec, ideals: Sequence[IdealLattice], cap: int = 10**6) -> LsticCode:
    """Assemble a layered code from pairwise-coprime ideals."""
    return LsticCode(t, build_crt_codebook(t, ideals, cap))


@dataclass(frozen=True)
class SideInfoConfig:
    """Revealed residues: for each subset entry, one value per layer."""

    subset: tuple[int, ...]
    values: tuple[tuple[int, ...], ...]

    @staticmethod
    def random(code: LsticCode, subset: Sequence[int], seed: int = 0) -> "SideInfoConfig":
        """Uniformly drawn revealed values, reproducible from the seed."""
        rng = np.random.default_rng(seed)
        n = code.tower.n
        values = tuple(
            tuple(int(rng.integers(0, code.crt.sizes[s])) for _ in range(n)) for s in subset
        )
        return SideInfoConfig(tuple(subset), values)

    def check(self, code: LsticCode) -> None:
        sizes = code.crt.sizes
        if len(set(self.subset)) != len(self.subset):
            raise AlphabetViolation("subset entries must be distinct")
        for s in self.subset:
            if not 0 <= s < len(sizes):
                raise AlphabetViolation(f"subset index {s} out of range")
        if len(self.values) != len(self.subset):
            raise AlphabetViolation("need one value row per subset entry")
        for s, row in zip(self.subset, self.values):
            if len(row) != code.tower.n:
                raise AlphabetViolation("need one revealed value per layer")
            for v in row:
                if not 0 <= v < sizes[s]:
                    raise AlphabetViolation(f"revealed value {v} out of range [0, {sizes[s]})")


class Subcode:
    """The sublattice shift selected by revealed residues.

    ``layer_symbols`` is the transmitted alphabet (it depends on the
    revealed values); ``difference_classes`` is the canonical difference
    code, which pins the revealed residues to zero and is therefore the
    same whatever values were revealed.
    """

    def __init__(self, parent: LsticCode, config: SideInfoConfig):
        config.check(parent)
        self.parent = parent
        self.config = config
        self._symbols: tuple[list[AlgebraicInt], ...] | None = None
        self._classes: list[AlgebraicInt] | None = None

    @property
    def size(self) -> int:
        free = 1
        fixed = {s for s in self.config.subset}
        for k, s in enumerate(self.parent.crt.sizes):
            if k not in fixed:
                free *= s
        return free ** self.parent.tower.n

    def layer_symbols(self) -> tuple[list[AlgebraicInt], ...]:
        """Per-layer leaders consistent with the revealed residues.

        Every returned symbol is checked to reduce to the revealed residue
        modulo each subset ideal.
        """
        if self._symbols is not None:
            return self._symbols
        code = self.parent
        t = code.tower
        crt = code.crt
        fixed = dict(zip(self.config.subset, self.config.values))
        out = []
        for layer in range(t.n):
            ranges = [
                [fixed[k][layer]] if k in fixed else range(s) for k, s in enumerate(crt.sizes)
            ]
            symbols = []
            for msg in _product(ranges):
                x = crt.leader(msg)
                for s in self.config.subset:
                    if crt.residue_of(s, x) != fixed[s][layer]:
                        raise AssertionError("leader escaped its revealed residue class")
                symbols.append(x)
            out.append(symbols)
        self._symbols = tuple(out)
        return self._symbols

    def subset_ideal(self) -> IdealLattice:
        """Product of the revealed ideals; layer differences lie in it."""
        crt = self.parent.crt
        if not self.config.subset:
            return whole_ring(self.parent.tower)
        ideal = crt.ideals[self.config.subset[0]]
        for s in self.config.subset[1:]:
            ideal = ideal_product(ideal, crt.ideals[s])
        return ideal

    def difference_classes(self) -> list[AlgebraicInt]:
        """Canonical residues that vanish modulo every revealed ideal.

        These are the difference classes of the restricted code, drawn from
        the same canonical residue system as the parent code; they do not
        depend on which values were revealed.
        """
        if self._classes is not None:
            return self._classes
        ideal = self.subset_ideal()
        self._classes = [
            r
            for r in self.parent.difference_classes()
            if reduce_mod(r, ideal).is_zero()
        ]
        return self._classes

    def stats(self, budget: int = DEFAULT_BUDGET) -> PairStats:
        t = self.parent.tower
        grid = (self.parent.crt.modulus.norm // self.subset_ideal().norm) ** t.n
        if grid > budget:
            raise BudgetExceeded(
                f"minimum-determinant search needs {grid} evaluations, budget is {budget}"
            )
        classes = self.difference_classes()
        return difference_stats(t, tuple([classes] * t.n), budget)


def _product(ranges: Sequence[Sequence[int]]):
    import itertools

    return itertools.product(*ranges)


# ---------------------------------------------------------------------------
# Shaping ideals and gain reports


def shaping_ideal(t: TowerSpec) -> IdealLattice | None:
    """The configured shaping ideal, or None when shaping is principal.

    When the tower file lists several equivalent candidates, the one with
    the lexicographically smallest basis matrix is used, so the choice is
    stable across runs.
    """
    if not t.shaping_ideals:
        return None
    candidates = []
    for gens in t.shaping_ideals:
        elems = [t.element(list(vec)) for vec in gens]
        candidates.append(ideal_from_generators(t, elems))
    return min(candidates, key=lambda a: tuple(tuple(row) for row in a.basis))


def shaping_penalty_db(t: TowerSpec) -> float:
    """Decibel penalty when the shaping ideal has no norm-achieving generator.

    Zero for principal shaping; otherwise 20*log10(N(I) / min |N(x)|) over
    nonzero x in the ideal, which is nonpositive.
    """
    ideal = shaping_ideal(t)
    if ideal is None:
        return 0.0
    min_norm, _ = ideal_min_norm(ideal, t)
    return 20 * (math.log10(ideal.norm) - math.log10(min_norm))


@dataclass(frozen=True)
class GainReport:
    """Exact determinant growth from revealed residues, against its bound."""

    subset: tuple[int, ...]
    n_rx: int
    method: str
    ratio: Fraction
    delta_full: Fraction | None
    delta_sub: Fraction | None
    kissing_full: int | None
    kissing_sub: int | None
    subset_rate: float
    gamma_db: float
    bound_db: float
    predicted_gain_db: float | None
    satisfied: bool


def side_info_gain(
    code: LsticCode,
    subset: Sequence[int] | None = None,
    config: SideInfoConfig | None = None,
    n_rx: int = 2,
    method: str = "enumerate",
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
) -> GainReport:
    """Measure the determinant gain per bit of revealed rate.

    With ``method="enumerate"`` the full and restricted codes are swept
    exhaustively and the report carries exact determinants and pair counts.
    With ``method="algebraic"`` the growth ratio is read off the subset
    ideal, which must be principal with a generator of minimal norm; this
    covers codes too large to sweep.

    Raises:
        ValueError: for an empty subset (the gain is undefined) or when the
            algebraic route does not apply.
    """
    t = code.tower
    if config is None:
        if subset is None or len(subset) == 0:
            raise ValueError("determinant gain is undefined for an empty subset")
        config = SideInfoConfig.random(code, subset, seed)
    config.check(code)
    if len(config.subset) == 0:
        raise ValueError("determinant gain is undefined for an empty subset")

    delta_full = delta_sub = kissing_full = kissing_sub = None
    predicted = None
    if method == "enumerate":
        full = code.stats(budget)
        sub = code.subcode(config).stats(budget)
        ratio = sub.min_det / full.min_det
        delta_full, delta_sub = full.min_det, sub.min_det
        kissing_full, kissing_sub = full.kissing, sub.kissing
        predicted = (10 / (t.n * n_rx)) * _log10(Fraction(kissing_full, kissing_sub)) + (
            10 / t.n
        ) * _log10(ratio)
    elif method == "algebraic":
        ideal = code.ideals[config.subset[0]]
        for s in config.subset[1:]:
            ideal = ideal_product(ideal, code.ideals[s])
        min_norm, witness = ideal_min_norm(ideal, t)
        if principal_ideal(t, witness) != ideal:
            raise ValueError(
                "subset ideal has no norm-achieving generator; use method='enumerate'"
            )
        exponent = 2 // t.base.degree
        if exponent * t.base.degree != 2:
            raise ValueError("unsupported base degree")
        ratio = Fraction(ideal.norm) ** exponent
    else:
        raise ValueError(f"unknown method {method!r}")

    rate = code.subset_rate(config.subset)
    gamma_db = 10 * _log10(ratio) / (t.n * rate)
    bound_db = 6.0 + shaping_penalty_db(t)
    return GainReport(
        subset=config.subset,
        n_rx=n_rx,
        method=method,
        ratio=ratio,
        delta_full=delta_full,
        delta_sub=delta_sub,
        kissing_full=kissing_full,
        kissing_sub=kissing_sub,
        subset_rate=rate,
        gamma_db=gamma_db,
        bound_db=bound_db,
        predicted_gain_db=predicted,
        satisfied=gamma_db >= bound_db - 1e-9,
    )


def predict_cer(
    code: LsticCode,
    snr_db: float,
    n_rx: int = 2,
    config: SideInfoConfig | None = None,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Union-bound codeword error estimate at the given SNR.

    The estimate uses the exact minimum determinant and its multiplicity for
    the code (or for the subcode when ``config`` is given), normalized the
    same way the simulator normalizes transmit power: the full code's mean
    squared Frobenius norm is scaled to n_t * T, and a subcode inherits the
    parent scaling.
    """
    t = code.tower
    stats = code.subcode(config).stats(budget) if config is not None else code.stats(budget)
    full_book = Codebook(t, tuple(tuple(s) for s in code.layer_symbols()))
    norm_scale_sq = Fraction(t.n * t.n) / full_book.mean_energy()
    delta = float(stats.min_det * norm_scale_sq**t.n)
    snr = 10 ** (snr_db / 10)
    advantage = snr * delta ** (1 / t.n) / (4 * t.n)
    return float(stats.kissing) * advantage ** (-t.n * n_rx)


# ---------------------------------------------------------------------------
# Shipped factorization tables


@dataclass(frozen=True)
class TableRow:
    """One verified prime: its ideals with generators and the (e, f) shape."""

    p: int
    e: int
    f: int
    ideals: tuple[IdealLattice, ...]
    generators: tuple[tuple[AlgebraicInt, ...], ...]


_TABLE_CACHE: dict[tuple, tuple[TableRow, ...]] = {}


def table_rows(t: TowerSpec) -> tuple[TableRow, ...]:
    """Shipped prime-factorization table for the tower."""
    key = t._cache_key()
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    path = resources.files("lstic").joinpath("data", "tables", f"{t.name}.json")
    payload = json.loads(path.read_text())
    rows = []
    for row in payload["rows"]:
        gens = tuple(
            tuple(t.element([tuple(pair) for pair in vec]) for vec in ideal_gens)
            for ideal_gens in row["ideals"]
        )
        ideals = tuple(ideal_from_generators(t, list(g)) for g in gens)
        rows.append(TableRow(p=row["p"], e=row["e"], f=row["f"], ideals=ideals, generators=gens))
    out = tuple(rows)
    _TABLE_CACHE[key] = out
    return out


def table_code(
    t: TowerSpec, p: int, indices: Sequence[int] | None = None, cap: int = 10**6
) -> LsticCode:
    """Layered code built from the table ideals of one prime.

    Each selected prime ideal is raised to its ramification index, so the
    resulting message ideals are pairwise coprime and multiply out to (p)
    when all of them are selected.  ``indices`` picks which of the prime's
    ideals participate; the default uses all of them.
    """
    for row in table_rows(t):
        if row.p == p:
            break
    else:
        raise KeyError(f"no table row for p={p} in tower {t.name}")
    chosen = row.ideals if indices is None else tuple(row.ideals[i] for i in indices)
    powered = [ideal_power(q, row.e) for q in chosen]
    return build_code(t, powered, cap=cap)
