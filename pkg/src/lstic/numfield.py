"""Exact arithmetic in the rings of integers of the five code towers.

Each tower is a relative extension L = K(theta) of a small base field K
(the rationals, the Gaussian rationals, or the Eisenstein rationals) with a
cyclic Galois group generated by ``sigma``.  Elements of O_L are stored as
coefficient vectors over the power basis {1, theta, ..., theta^(n-1)} with
coefficients in O_K, and every operation here is exact integer arithmetic;
floating point only enters through the complex embeddings.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence

import mpmath as mp

from .errors import NonConstantNorm, RoundingUnsafe, TowerMismatch

__all__ = [
    "BaseRing",
    "TowerSpec",
    "AlgebraicInt",
    "nf_mul",
    "nf_sigma",
    "nf_norm_rel",
    "nf_norm_abs",
    "nf_conj",
    "nf_embed",
    "nf_discriminant",
    "load_tower",
    "PRESET_NAMES",
]

#: Default binary precision (bits) for complex embeddings.
DEFAULT_PRECISION = 128

PRESET_NAMES = ("golden", "perfect3", "perfect4", "perfect6", "alamouti")

Pair = tuple[int, int]


class BaseRing:
    """One of the base rings Z, Z[i], or Z[w] with elements as integer pairs.

    An element ``(a, b)`` means ``a + b*i`` for the Gaussian integers,
    ``a + b*w`` for the Eisenstein integers (``w`` a primitive cube root of
    unity, so ``w**2 = -1 - w``), and plain ``a`` (with ``b`` forced to zero)
    for the rational integers.
    """

    Z = "Z"
    ZI = "Zi"
    ZW = "Zw"

    def __init__(self, kind: str):
        if kind not in (self.Z, self.ZI, self.ZW):
            raise ValueError(f"unknown base ring kind: {kind!r}")
        self.kind = kind

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BaseRing) and self.kind == other.kind

    def __hash__(self) -> int:
        return hash(("BaseRing", self.kind))

    def __repr__(self) -> str:
        return f"BaseRing({self.kind!r})"

    @property
    def degree(self) -> int:
        """Degree of the base field over the rationals (1 or 2)."""
        return 1 if self.kind == self.Z else 2

    def check(self, x: Pair) -> Pair:
        a, b = x
        if self.kind == self.Z and b != 0:
            raise ValueError(f"nonzero imaginary part {x} in Z")
        return (a, b)

    def add(self, x: Pair, y: Pair) -> Pair:
        return (x[0] + y[0], x[1] + y[1])

    def sub(self, x: Pair, y: Pair) -> Pair:
        return (x[0] - y[0], x[1] - y[1])

    def neg(self, x: Pair) -> Pair:
        return (-x[0], -x[1])

    def mul(self, x: Pair, y: Pair) -> Pair:
        a, b = x
        c, d = y
        if self.kind == self.ZW:
            # (a + b w)(c + d w) with w^2 = -1 - w
            return (a * c - b * d, a * d + b * c - b * d)
        # Z embeds as b = d = 0, so the Gaussian rule covers both.
        return (a * c - b * d, a * d + b * c)

    def conj(self, x: Pair) -> Pair:
        a, b = x
        if self.kind == self.ZW:
            # conj(w) = w^2 = -1 - w
            return (a - b, -b)
        return (a, -b)

    def norm(self, x: Pair) -> int:
        """Absolute norm: |a| over Z, a^2 + b^2 over Z[i], a^2 - ab + b^2
        over Z[w]."""
        a, b = x
        if self.kind == self.ZW:
            return a * a - a * b + b * b
        if self.kind == self.ZI:
            return a * a + b * b
        return abs(a)

    def embed(self, x: Pair, conjugated: bool = False):
        """Numeric value of ``x`` as an mpmath complex number."""
        a, b = x
        if self.kind == self.Z:
            return mp.mpc(a, 0)
        if self.kind == self.ZI:
            unit = mp.mpc(0, 1)
        else:
            # w = exp(2*pi*i/3) = (-1 + sqrt(3) i) / 2
            unit = mp.mpc(mp.mpf(-1) / 2, mp.sqrt(3) / 2)
        if conjugated:
            unit = mp.conj(unit)
        return mp.mpc(a, 0) + b * unit

    def zero(self) -> Pair:
        return (0, 0)

    def one(self) -> Pair:
        return (1, 0)


def _parse_pair(text: str) -> Pair:
    parts = text.strip().split(",")
    if len(parts) == 1:
        return (int(parts[0]), 0)
    if len(parts) == 2:
        return (int(parts[0]), int(parts[1]))
    raise ValueError(f"cannot parse base-ring element from {text!r}")


def _parse_vector(text: str) -> tuple[Pair, ...]:
    return tuple(_parse_pair(chunk) for chunk in text.strip().split(";"))


@dataclass(frozen=True)
class TowerSpec:
    """Declarative description of one number-field tower L = K(theta).

    Attributes:
        name: preset name or the name declared in a config file.
        base: the base ring O_K.
        n: relative degree [L:K], which equals the number of layers.
        minpoly: n+1 base-ring coefficients of the monic minimal polynomial
            of theta over K, constant term first.
        sigma_theta: image of theta under the Galois generator, as a
            power-basis coefficient vector.
        gamma: the non-norm element of O_K defining the cyclic algebra.
        alpha: principal shaping generator as a coefficient vector, or None
            when shaping is by a non-principal ideal.
        shaping_ideals: candidate generator sets for a non-principal shaping
            ideal (each a tuple of coefficient vectors); empty when alpha is
            used.
        scale_sq: square of the global power scale, as an exact rational
            (e.g. 1/5 for the scale 1/sqrt(5)).
        conj_power: power of sigma that, composed with coefficient-wise base
            conjugation, realizes complex conjugation of the identity
            embedding.  Zero whenever theta itself is real.
    """

    name: str
    base: BaseRing
    n: int
    minpoly: tuple[Pair, ...]
    sigma_theta: tuple[Pair, ...]
    gamma: Pair
    alpha: tuple[Pair, ...] | None = None
    shaping_ideals: tuple[tuple[Pair, ...], ...] = ()
    scale_sq: Fraction = Fraction(1)
    conj_power: int = 0

    def __post_init__(self) -> None:
        if len(self.minpoly) != self.n + 1:
            raise ValueError("minimal polynomial length must be degree + 1")
        if self.minpoly[-1] != (1, 0):
            raise ValueError("minimal polynomial must be monic")
        if len(self.sigma_theta) != self.n:
            raise ValueError("sigma image must have exactly n coefficients")
        self._self_check()

    @property
    def abs_degree(self) -> int:
        """Degree of L over the rationals."""
        return self.n * self.base.degree

    def zero(self) -> "AlgebraicInt":
        return AlgebraicInt(self, tuple(self.base.zero() for _ in range(self.n)))

    def one(self) -> "AlgebraicInt":
        coeffs = [self.base.zero() for _ in range(self.n)]
        coeffs[0] = self.base.one()
        return AlgebraicInt(self, tuple(coeffs))

    def theta(self) -> "AlgebraicInt":
        coeffs = [self.base.zero() for _ in range(self.n)]
        if self.n == 1:
            coeffs[0] = self.base.one()
        else:
            coeffs[1] = self.base.one()
        return AlgebraicInt(self, tuple(coeffs))

    def element(self, coeffs: Sequence[Pair | int]) -> "AlgebraicInt":
        """Build an element from ``coeffs`` padded with zeros to length n."""
        out = []
        for c in coeffs:
            if isinstance(c, int):
                out.append((c, 0))
            else:
                out.append(self.base.check(tuple(c)))
        while len(out) < self.n:
            out.append(self.base.zero())
        if len(out) != self.n:
            raise ValueError("too many coefficients for this tower")
        return AlgebraicInt(self, tuple(out))

    def from_base(self, c: Pair | int) -> "AlgebraicInt":
        return self.element([c])

    def alpha_element(self) -> "AlgebraicInt":
        if self.alpha is None:
            raise ValueError(f"tower {self.name} has no principal shaping generator")
        return self.element(self.alpha)

    def integral_basis(self) -> list["AlgebraicInt"]:
        """Z-basis of O_L: theta^j times each base-ring basis unit."""
        out = []
        units: list[Pair] = [(1, 0)]
        if self.base.degree == 2:
            units.append((0, 1))
        for j in range(self.n):
            for u in units:
                coeffs = [self.base.zero() for _ in range(self.n)]
                coeffs[j] = u
                out.append(AlgebraicInt(self, tuple(coeffs)))
        return out

    # -- numeric embeddings -------------------------------------------------

    def embedding_thetas(self, prec: int = DEFAULT_PRECISION) -> list[mp.mpc]:
        """Numeric values of sigma^m(theta) for m in range(n).

        theta itself is pinned to the largest root of the minimal polynomial
        (ties broken toward the largest imaginary part), and the remaining
        entries follow the Galois orbit so that embedding m of any element x
        equals embedding 0 of sigma^m(x).
        """
        key = (self._cache_key(), prec)
        cached = _THETA_CACHE.get(key)
        if cached is not None:
            return cached
        with mp.workprec(prec + 32):
            coeffs = [self.base.embed(c) for c in reversed(self.minpoly)]
            roots = mp.polyroots(coeffs, maxsteps=200, extraprec=prec)
            roots = sorted(roots, key=lambda z: (mp.re(z), mp.im(z)), reverse=True)
            theta0 = roots[0]
            thetas = [theta0]
            current = self.theta()
            for _ in range(1, self.n):
                current = nf_sigma(current, 1, self)
                thetas.append(_eval_at(current, theta0, self))
            # Every Galois image must itself be a root.
            tol = mp.mpf(2) ** (-(prec // 2))
            for value in thetas:
                if min(abs(value - r) for r in roots) > tol * (1 + abs(value)):
                    raise RoundingUnsafe(
                        f"Galois orbit of theta strays from the root set in {self.name}"
                    )
        _THETA_CACHE[key] = thetas
        return thetas

    def _cache_key(self) -> tuple:
        return (self.name, self.base.kind, self.n, self.minpoly, self.sigma_theta)

    def _self_check(self) -> None:
        # sigma must generate a cyclic group of order n on theta.
        image = self.theta()
        for _ in range(self.n):
            image = _substitute(image, self.sigma_theta)
        if image.coeffs != self.theta().coeffs:
            raise ValueError(f"sigma^n(theta) != theta for tower {self.name}")
        # theta must satisfy its minimal polynomial numerically.
        with mp.workprec(DEFAULT_PRECISION + 32):
            theta0 = self.embedding_thetas()[0]
            value = mp.mpc(0)
            scale = mp.mpf(0)
            power = mp.mpc(1)
            for c in self.minpoly:
                term = self.base.embed(c) * power
                value += term
                scale = max(scale, abs(term))
                power *= theta0
            if abs(value) > 10 * scale * mp.mpf(2) ** (-DEFAULT_PRECISION):
                raise ValueError(
                    f"theta does not satisfy the stated polynomial for {self.name}"
                )


_THETA_CACHE: dict[tuple, list] = {}
_SIGMA_CACHE: dict[tuple, list[list[tuple[Pair, ...]]]] = {}


@dataclass(frozen=True)
class AlgebraicInt:
    """Element of O_L as a length-n coefficient vector over the power basis."""

    tower: TowerSpec
    coeffs: tuple[Pair, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) != self.tower.n:
            raise ValueError("coefficient vector has wrong length")

    def __add__(self, other: "AlgebraicInt | int") -> "AlgebraicInt":
        if isinstance(other, int):
            other = self.tower.from_base(other)
        _same_tower(self, other)
        base = self.tower.base
        return AlgebraicInt(
            self.tower,
            tuple(base.add(a, b) for a, b in zip(self.coeffs, other.coeffs)),
        )

    __radd__ = __add__

    def __sub__(self, other: "AlgebraicInt | int") -> "AlgebraicInt":
        if isinstance(other, int):
            other = self.tower.from_base(other)
        _same_tower(self, other)
        base = self.tower.base
        return AlgebraicInt(
            self.tower,
            tuple(base.sub(a, b) for a, b in zip(self.coeffs, other.coeffs)),
        )

    def __rsub__(self, other: int) -> "AlgebraicInt":
        return self.tower.from_base(other) - self

    def __neg__(self) -> "AlgebraicInt":
        base = self.tower.base
        return AlgebraicInt(self.tower, tuple(base.neg(a) for a in self.coeffs))

    def __mul__(self, other: "AlgebraicInt | int") -> "AlgebraicInt":
        if isinstance(other, int):
            base = self.tower.base
            return AlgebraicInt(
                self.tower, tuple(base.mul(c, (other, 0)) for c in self.coeffs)
            )
        return nf_mul(self, other, self.tower)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "AlgebraicInt":
        if k < 0:
            raise ValueError("negative powers are not defined in O_L")
        out = self.tower.one()
        for _ in range(k):
            out = nf_mul(out, self, self.tower)
        return out

    def is_zero(self) -> bool:
        return all(c == (0, 0) for c in self.coeffs)

    def flat(self) -> tuple[int, ...]:
        """Integer coordinates over the Z-basis returned by integral_basis."""
        if self.tower.base.degree == 1:
            return tuple(c[0] for c in self.coeffs)
        out: list[int] = []
        for a, b in self.coeffs:
            out.extend((a, b))
        return tuple(out)


def _same_tower(x: AlgebraicInt, y: AlgebraicInt) -> None:
    if x.tower is not y.tower and x.tower != y.tower:
        raise TowerMismatch(
            f"operands from different towers: {x.tower.name} vs {y.tower.name}"
        )


def from_flat(t: TowerSpec, coords: Sequence[int]) -> AlgebraicInt:
    """Inverse of :meth:`AlgebraicInt.flat`."""
    if len(coords) != t.abs_degree:
        raise ValueError("flat coordinate vector has wrong length")
    if t.base.degree == 1:
        return AlgebraicInt(t, tuple((int(c), 0) for c in coords))
    pairs = tuple(
        (int(coords[2 * j]), int(coords[2 * j + 1])) for j in range(t.n)
    )
    return AlgebraicInt(t, pairs)


def nf_mul(x: AlgebraicInt, y: AlgebraicInt, t: TowerSpec | None = None) -> AlgebraicInt:
    """Exact product in O_L, degree-reduced by the minimal polynomial."""
    if t is None:
        t = x.tower
    _same_tower(x, y)
    base = t.base
    n = t.n
    prod = [base.zero() for _ in range(2 * n - 1)]
    for j, cx in enumerate(x.coeffs):
        if cx == (0, 0):
            continue
        for k, cy in enumerate(y.coeffs):
            if cy == (0, 0):
                continue
            prod[j + k] = base.add(prod[j + k], base.mul(cx, cy))
    # Reduce theta^m for m >= n using the monic minimal polynomial.
    for m in range(2 * n - 2, n - 1, -1):
        head = prod[m]
        if head == (0, 0):
            continue
        prod[m] = base.zero()
        for j in range(n):
            prod[m - n + j] = base.sub(prod[m - n + j], base.mul(head, t.minpoly[j]))
    return AlgebraicInt(t, tuple(prod[:n]))


def _substitute(x: AlgebraicInt, theta_image: tuple[Pair, ...]) -> AlgebraicInt:
    """Evaluate x at a replacement for theta (Horner over O_L)."""
    t = x.tower
    image = AlgebraicInt(t, theta_image)
    acc = t.zero()
    for c in reversed(x.coeffs):
        acc = nf_mul(acc, image, t)
        acc = acc + t.from_base(c)
    return acc


def _sigma_tables(t: TowerSpec) -> list[list[tuple[Pair, ...]]]:
    """For each k, the expansions of sigma^k(theta^j) for j in range(n)."""
    key = t._cache_key()
    cached = _SIGMA_CACHE.get(key)
    if cached is not None:
        return cached
    n = t.n
    # Powers of theta in canonical form.
    powers = [t.one()]
    for _ in range(1, n):
        powers.append(nf_mul(powers[-1], t.theta(), t))
    tables: list[list[tuple[Pair, ...]]] = [[p.coeffs for p in powers]]
    current = powers
    for _ in range(1, n):
        current = [_substitute(p, t.sigma_theta) for p in current]
        tables.append([p.coeffs for p in current])
    _SIGMA_CACHE[key] = tables
    return tables


def nf_sigma(x: AlgebraicInt, k: int, t: TowerSpec | None = None) -> AlgebraicInt:
    """Apply the Galois generator ``k`` times (k = 0 is the identity)."""
    if t is None:
        t = x.tower
    k %= t.n
    if k == 0:
        return x
    base = t.base
    table = _sigma_tables(t)[k]
    acc = [base.zero() for _ in range(t.n)]
    for j, c in enumerate(x.coeffs):
        if c == (0, 0):
            continue
        for m, tc in enumerate(table[j]):
            if tc != (0, 0):
                acc[m] = base.add(acc[m], base.mul(c, tc))
    return AlgebraicInt(t, tuple(acc))


def nf_conj(x: AlgebraicInt, t: TowerSpec | None = None) -> AlgebraicInt:
    """The automorphism of L realizing complex conjugation of embedding 0."""
    if t is None:
        t = x.tower
    conjugated = AlgebraicInt(t, tuple(t.base.conj(c) for c in x.coeffs))
    return nf_sigma(conjugated, t.conj_power, t)


def nf_norm_rel(x: AlgebraicInt, t: TowerSpec | None = None) -> Pair:
    """Relative norm N_{L/K}(x) as a base-ring element, computed exactly."""
    if t is None:
        t = x.tower
    acc = x
    for k in range(1, t.n):
        acc = nf_mul(acc, nf_sigma(x, k, t), t)
    for c in acc.coeffs[1:]:
        if c != (0, 0):
            raise NonConstantNorm(
                f"norm of {x.coeffs} in {t.name} kept theta terms: {acc.coeffs}"
            )
    return acc.coeffs[0]


def nf_norm_abs(x: AlgebraicInt, t: TowerSpec | None = None) -> int:
    """Absolute norm |N_{L/Q}(x)| as a nonnegative integer."""
    if t is None:
        t = x.tower
    return t.base.norm(nf_norm_rel(x, t))


def _eval_at(x: AlgebraicInt, theta_value, t: TowerSpec, conjugated: bool = False):
    acc = mp.mpc(0)
    for c in reversed(x.coeffs):
        acc = acc * theta_value + t.base.embed(c, conjugated=conjugated)
    return acc


def nf_embed(
    x: AlgebraicInt,
    t: TowerSpec | None = None,
    which: int = 0,
    prec: int = DEFAULT_PRECISION,
) -> complex:
    """Complex embedding of x: evaluate at the ``which``-th Galois image of theta."""
    if t is None:
        t = x.tower
    if not 0 <= which < t.n:
        raise ValueError(f"embedding index {which} out of range for degree {t.n}")
    with mp.workprec(prec):
        value = _eval_at(x, t.embedding_thetas(prec)[which], t)
        return complex(value)


def all_embeddings(
    x: AlgebraicInt, t: TowerSpec | None = None, prec: int = DEFAULT_PRECISION
) -> list[complex]:
    """All [L:Q] embeddings: Galois images, then their base-conjugated twins."""
    if t is None:
        t = x.tower
    out: list[complex] = []
    with mp.workprec(prec):
        thetas = t.embedding_thetas(prec)
        for th in thetas:
            out.append(complex(_eval_at(x, th, t)))
        if t.base.degree == 2:
            for th in thetas:
                out.append(complex(_eval_at(x, mp.conj(th), t, conjugated=True)))
    return out


def nf_discriminant(t: TowerSpec, prec: int | None = None) -> int:
    """Field discriminant d_L: squared determinant of the embedding matrix.

    The integral basis is {theta^j * u} with u running over the base-ring
    units (1, and i or w for the quadratic bases).  The determinant is
    computed at high precision and rounded; a relative rounding residue
    above 1e-6 raises RoundingUnsafe.

    Args:
        t: the tower.
        prec: working precision in bits; defaults to a safe boost over the
            package default (the 6x6 tower needs headroom).

    Returns:
        The signed discriminant as an exact integer.
    """
    if prec is None:
        prec = max(DEFAULT_PRECISION, 192)
    basis = t.integral_basis()
    with mp.workprec(prec):
        thetas = t.embedding_thetas(prec)
        rows = []
        for th in thetas:
            rows.append([_eval_at(b, th, t) for b in basis])
        if t.base.degree == 2:
            for th in thetas:
                rows.append([_eval_at(b, mp.conj(th), t, conjugated=True) for b in basis])
        det = mp.det(mp.matrix(rows))
        disc = det * det
        real = mp.re(disc)
        imag = mp.im(disc)
        rounded = int(mp.nint(real))
        scale = max(abs(real), mp.mpf(1))
        if abs(real - rounded) / scale > 1e-6 or abs(imag) / scale > 1e-6:
            raise RoundingUnsafe(
                f"discriminant of {t.name} did not round safely: {disc}"
            )
    return rounded


# ---------------------------------------------------------------------------
# Tower loading


def _load_from_parser(parser: configparser.ConfigParser) -> TowerSpec:
    sec = parser["tower"]
    base = BaseRing(sec["base"])
    n = int(sec["degree"])
    minpoly = tuple(
        _parse_pair(parser["minpoly"][f"c{j}"]) for j in range(n + 1)
    )
    sigma_theta = tuple(
        _parse_pair(parser["sigma"][f"c{j}"]) for j in range(n)
    )
    gamma = _parse_pair(sec["gamma"])
    alpha = None
    shaping: tuple[tuple[Pair, ...], ...] = ()
    if parser.has_section("shaping"):
        shp = parser["shaping"]
        if "alpha" in shp:
            alpha = _parse_vector(shp["alpha"])
        gens = []
        for key in sorted(shp):
            if key.startswith("ideal"):
                gens.append(tuple(_parse_vector(v) for v in shp[key].split("|")))
        shaping = tuple(gens)
    scale_sq = Fraction(sec.get("scale_sq", "1"))
    conj_power = int(sec.get("conj_power", "0"))
    return TowerSpec(
        name=sec["name"],
        base=base,
        n=n,
        minpoly=minpoly,
        sigma_theta=sigma_theta,
        gamma=gamma,
        alpha=alpha,
        shaping_ideals=shaping,
        scale_sq=scale_sq,
        conj_power=conj_power,
    )


_PRESET_CACHE: dict[str, TowerSpec] = {}


def load_tower(name_or_path: str) -> TowerSpec:
    """Load a tower preset by name, or any tower from a config file path."""
    if name_or_path in PRESET_NAMES:
        cached = _PRESET_CACHE.get(name_or_path)
        if cached is not None:
            return cached
        ref = resources.files("lstic").joinpath("data", "towers", f"{name_or_path}.cfg")
        parser = configparser.ConfigParser()
        parser.read_string(ref.read_text())
        tower = _load_from_parser(parser)
        _PRESET_CACHE[name_or_path] = tower
        return tower
    parser = configparser.ConfigParser()
    read = parser.read(name_or_path)
    if not read:
        raise FileNotFoundError(f"no tower preset or config file named {name_or_path!r}")
    return _load_from_parser(parser)
