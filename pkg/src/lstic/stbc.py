"""Space-time codeword assembly, exact determinants, and power normalization.

A codeword is an n-by-n matrix over L built from n layer symbols.  Layer l
occupies the entries (m, (l+m) mod n): row m carries the m-th Galois
conjugate, and entries that wrapped past the diagonal pick up a factor of
gamma.  Determinants are computed in exact field arithmetic and reduce to
constants in the base field; the tower's power scale is carried alongside as
an exact rational so determinant ratios stay exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, TextIO

import numpy as np

from .errors import EmptyCodebook, NonConstantDet, RoundingUnsafe
from .ideals import exact_energy
from .numfield import (
    AlgebraicInt,
    Pair,
    TowerSpec,
    nf_conj,
    nf_embed,
    nf_mul,
    nf_sigma,
)

__all__ = [
    "Codeword",
    "ExactDet",
    "Codebook",
    "build_codeword",
    "algebra_mul",
    "exact_det",
    "normalize_codebook",
    "export_text",
]


def _shaped_layers(t: TowerSpec, layers: Sequence[AlgebraicInt]) -> list[AlgebraicInt]:
    if t.alpha is None:
        return list(layers)
    alpha = t.alpha_element()
    return [nf_mul(alpha, x, t) for x in layers]


@dataclass(frozen=True)
class ExactDet:
    """Exact codeword determinant: a base-field constant times a rational."""

    tower: TowerSpec
    value: Pair
    scale: Fraction

    @property
    def abs_sq(self) -> Fraction:
        """|det|^2 as an exact rational."""
        a, b = self.value
        if self.tower.base.degree == 2:
            mod_sq = self.tower.base.norm(self.value)
        else:
            mod_sq = a * a
        return mod_sq * self.scale**2

    def numeric(self) -> complex:
        return complex(self.tower.base.embed(self.value)) * float(self.scale)


@dataclass(frozen=True)
class Codeword:
    """One space-time codeword: n layer symbols and their matrix realization."""

    tower: TowerSpec
    layers: tuple[AlgebraicInt, ...]
    shaped: bool = True

    def __post_init__(self) -> None:
        if len(self.layers) != self.tower.n:
            raise ValueError("need exactly n layer symbols")

    def exact_matrix(self) -> list[list[AlgebraicInt]]:
        """Matrix entries in O_L (shaping applied, global scale left out)."""
        t = self.tower
        n = t.n
        gamma = t.from_base(t.gamma)
        xs = _shaped_layers(t, self.layers) if self.shaped else list(self.layers)
        rows = []
        for m in range(n):
            row = []
            for c in range(n):
                entry = nf_sigma(xs[(c - m) % n], m, t)
                if c < m:
                    entry = nf_mul(gamma, entry, t)
                row.append(entry)
            rows.append(row)
        return rows

    def numeric_matrix(self) -> np.ndarray:
        """Complex matrix at working precision, including the power scale."""
        t = self.tower
        s = float(t.scale_sq) ** 0.5
        return np.array(
            [[complex(nf_embed(e, t, 0)) * s for e in row] for row in self.exact_matrix()],
            dtype=np.complex128,
        )

    def exact_det(self) -> ExactDet:
        return exact_det(self)

    def energy(self) -> Fraction:
        """Exact squared Frobenius norm of the realized matrix."""
        if self.shaped:
            return sum((exact_energy(x, self.tower) for x in self.layers), Fraction(0))
        t = self.tower
        unshaped = sum(
            (_unshaped_energy(x, t) for x in self.layers), Fraction(0)
        )
        return unshaped


def _unshaped_energy(x: AlgebraicInt, t: TowerSpec) -> Fraction:
    """Exact squared amplitude of a raw layer symbol, shaping left out."""
    y = nf_mul(x, nf_conj(x, t), t)
    acc = t.zero()
    for k in range(t.n):
        acc = acc + nf_sigma(y, k, t)
    for c in acc.coeffs[1:]:
        if c != (0, 0):
            raise RoundingUnsafe("trace form did not land in the base field")
    a, b = acc.coeffs[0]
    if b != 0:
        raise RoundingUnsafe("trace form has a nonreal base component")
    return a * t.scale_sq


def build_codeword(
    layers: Sequence[AlgebraicInt], t: TowerSpec, apply_shaping: bool = True
) -> Codeword:
    """Assemble a codeword from layer symbols.

    Args:
        layers: the n layer symbols in O_L (or in the shaping ideal when the
            tower shapes by an ideal rather than a generator).
        t: the tower.
        apply_shaping: multiply layers by the shaping generator when the
            tower has one.  Disable to work with raw algebra elements.
    """
    return Codeword(t, tuple(layers), shaped=apply_shaping and t.alpha is not None)


def algebra_mul(
    x: Sequence[AlgebraicInt], y: Sequence[AlgebraicInt], t: TowerSpec
) -> tuple[AlgebraicInt, ...]:
    """Product of two algebra elements given by their layer tuples.

    The cyclic-algebra rules e*z = sigma(z)*e and e^n = gamma glue the layer
    coefficients; the matrix realization turns this product into a matrix
    product, which is what the determinant-multiplicativity tests exercise.
    """
    n = t.n
    gamma = t.from_base(t.gamma)
    out = [t.zero() for _ in range(n)]
    for a in range(n):
        for b in range(n):
            term = nf_mul(x[a], nf_sigma(y[b], a, t), t)
            if a + b >= n:
                term = nf_mul(gamma, term, t)
            out[(a + b) % n] = out[(a + b) % n] + term
    return tuple(out)


# ---------------------------------------------------------------------------
# Exact determinants


def _det_cofactor(rows: list[list[AlgebraicInt]], t: TowerSpec) -> AlgebraicInt:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = t.zero()
    for j in range(n):
        if rows[0][j].is_zero():
            continue
        minor = [[rows[r][c] for c in range(n) if c != j] for r in range(1, n)]
        term = nf_mul(rows[0][j], _det_cofactor(minor, t), t)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def _divexact(a: AlgebraicInt, b: AlgebraicInt, t: TowerSpec) -> AlgebraicInt:
    """Exact division a / b in O_L via the relative norm; raises on failure.

    Multiplying a by the remaining conjugates of b turns the divisor into
    the constant N(b) in O_K, where exact division is componentwise.
    """
    num = a
    for k in range(1, t.n):
        num = nf_mul(num, nf_sigma(b, k, t), t)
    den = b
    for k in range(1, t.n):
        den = nf_mul(den, nf_sigma(b, k, t), t)
    for c in den.coeffs[1:]:
        if c != (0, 0):
            raise NonConstantDet("relative norm kept theta terms")
    dpair = den.coeffs[0]
    out = []
    for c in num.coeffs:
        if t.base.degree == 2:
            prod = t.base.mul(c, t.base.conj(dpair))
            q = t.base.norm(dpair)
        else:
            prod = c
            q = dpair[0]
        if prod[0] % q or prod[1] % q:
            raise NonConstantDet("fraction-free elimination hit a nonexact division")
        out.append((prod[0] // q, prod[1] // q))
    return AlgebraicInt(t, tuple(out))


def _det_bareiss(rows: list[list[AlgebraicInt]], t: TowerSpec) -> AlgebraicInt:
    """Fraction-free Gaussian elimination for the 6x6 case."""
    n = len(rows)
    m = [row[:] for row in rows]
    sign = 1
    prev = t.one()
    for k in range(n - 1):
        if m[k][k].is_zero():
            pivot_row = next((r for r in range(k + 1, n) if not m[r][k].is_zero()), None)
            if pivot_row is None:
                return t.zero()
            m[k], m[pivot_row] = m[pivot_row], m[k]
            sign = -sign
        for r in range(k + 1, n):
            for c in range(k + 1, n):
                num = nf_mul(m[k][k], m[r][c], t) - nf_mul(m[r][k], m[k][c], t)
                m[r][c] = _divexact(num, prev, t)
            m[r][k] = t.zero()
        prev = m[k][k]
    result = m[n - 1][n - 1]
    return result if sign == 1 else -result


def exact_det(cw: Codeword) -> ExactDet:
    """Determinant of the codeword matrix, reduced to a base-field constant.

    Raises:
        NonConstantDet: if the symbolic determinant keeps theta terms, which
            would mean the tower data is inconsistent.
    """
    t = cw.tower
    rows = cw.exact_matrix()
    if t.n <= 4:
        det = _det_cofactor(rows, t)
    else:
        det = _det_bareiss(rows, t)
    for c in det.coeffs[1:]:
        if c != (0, 0):
            raise NonConstantDet(f"determinant kept theta terms: {det.coeffs}")
    if t.n % 2 == 0:
        scale = t.scale_sq ** (t.n // 2)
    elif t.scale_sq == 1:
        scale = Fraction(1)
    else:
        raise ValueError("odd-degree tower with a nontrivial power scale")
    return ExactDet(t, det.coeffs[0], scale)


# ---------------------------------------------------------------------------
# Codebooks


@dataclass
class Codebook:
    """Product-form codebook: each layer draws from its own symbol list.

    The message index is mixed-radix over the per-layer lists (layer 0 most
    significant).  ``norm_scale_sq`` is the squared normalization factor that
    makes the empirical mean of the squared Frobenius norm equal n_t * T; it
    starts at 1 and is set by :func:`normalize_codebook`.
    """

    tower: TowerSpec
    layer_symbols: tuple[tuple[AlgebraicInt, ...], ...]
    apply_shaping: bool = True
    norm_scale_sq: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if len(self.layer_symbols) != self.tower.n:
            raise ValueError("need one symbol list per layer")

    @property
    def size(self) -> int:
        out = 1
        for symbols in self.layer_symbols:
            out *= len(symbols)
        return out

    def message_of_index(self, index: int) -> tuple[int, ...]:
        out = []
        for symbols in reversed(self.layer_symbols):
            out.append(index % len(symbols))
            index //= len(symbols)
        return tuple(reversed(out))

    def layers_of_index(self, index: int) -> tuple[AlgebraicInt, ...]:
        msg = self.message_of_index(index)
        return tuple(self.layer_symbols[l][j] for l, j in enumerate(msg))

    def codewords(self) -> Iterator[Codeword]:
        for layers in itertools.product(*self.layer_symbols):
            yield Codeword(
                self.tower,
                layers,
                shaped=self.apply_shaping and self.tower.alpha is not None,
            )

    def mean_energy(self) -> Fraction:
        """Exact mean squared Frobenius norm, before normalization."""
        if self.size == 0:
            raise EmptyCodebook("codebook has no codewords")
        total = Fraction(0)
        for symbols in self.layer_symbols:
            layer_sum = sum((self._symbol_energy(x) for x in symbols), Fraction(0))
            total += layer_sum / len(symbols)
        return total

    def _symbol_energy(self, x: AlgebraicInt) -> Fraction:
        if self.apply_shaping and self.tower.alpha is not None:
            return exact_energy(x, self.tower)
        return _unshaped_energy(x, self.tower)

    def matrix_array(self) -> np.ndarray:
        """All codeword matrices as a (size, n, n) complex array.

        Includes the tower power scale and the normalization factor.
        """
        t = self.tower
        n = t.n
        if self.size == 0:
            raise EmptyCodebook("codebook has no codewords")
        s = float(t.scale_sq * self.norm_scale_sq) ** 0.5
        gamma0 = complex(t.base.embed(t.gamma))
        alpha = (
            t.alpha_element()
            if (self.apply_shaping and t.alpha is not None)
            else t.one()
        )
        # per layer: numeric conjugates of every symbol, shaped and scaled
        tables = []
        for symbols in self.layer_symbols:
            tab = np.empty((len(symbols), n), dtype=np.complex128)
            for j, x in enumerate(symbols):
                ax = nf_mul(alpha, x, t)
                for m in range(n):
                    tab[j, m] = complex(nf_embed(nf_sigma(ax, m, t), t, 0)) * s
            tables.append(tab)

        sizes = [len(sym) for sym in self.layer_symbols]
        idx = np.arange(self.size)
        out = np.zeros((self.size, n, n), dtype=np.complex128)
        stride = self.size
        for l, (tab, width) in enumerate(zip(tables, sizes)):
            stride //= width
            digit = (idx // stride) % width
            vals = tab[digit]  # (size, n)
            for m in range(n):
                c = (l + m) % n
                factor = gamma0 if c < m else 1.0
                out[:, m, c] = factor * vals[:, m]
        return out


def normalize_codebook(cb: Codebook, target: Fraction | None = None) -> Codebook:
    """Scale the codebook so the empirical mean squared norm is n_t * T.

    Returns a new codebook with ``norm_scale_sq`` set; symbol lists are
    shared.  The default target is n_t * T = n^2.

    Raises:
        EmptyCodebook: if there are no codewords or all have zero energy.
    """
    if target is None:
        target = Fraction(cb.tower.n * cb.tower.n)
    mean = cb.mean_energy()
    if mean == 0:
        raise EmptyCodebook("cannot normalize a codebook with zero mean energy")
    return Codebook(
        tower=cb.tower,
        layer_symbols=cb.layer_symbols,
        apply_shaping=cb.apply_shaping,
        norm_scale_sq=target / mean,
    )


def export_text(cb: Codebook, stream: TextIO) -> int:
    """Write one record per codeword: message, layer vectors, exact |det|^2.

    Returns the number of records written.
    """
    count = 0
    for index in range(cb.size):
        layers = cb.layers_of_index(index)
        cw = Codeword(
            cb.tower, layers, shaped=cb.apply_shaping and cb.tower.alpha is not None
        )
        det = cw.exact_det().abs_sq * cb.norm_scale_sq ** cb.tower.n
        msg = ",".join(str(m) for m in cb.message_of_index(index))
        coeffs = ";".join(
            " ".join(f"{a},{b}" for a, b in x.coeffs) for x in layers
        )
        stream.write(f"message=({msg}) layers=[{coeffs}] absdet2={det}\n")
        count += 1
    return count
