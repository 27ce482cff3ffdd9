"""Sparse differential forms and vector fields on flat coordinate spaces.

Basis forms are stored on strictly increasing multi-indices; every
operation reduces to that canonical order with explicit permutation
signs.  Coefficients are exact scalar expressions and zero normal forms
are never stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Mapping

from .expr import (
    EXACT,
    PROBABILISTIC,
    Const,
    DEFAULT_ZERO_TEST,
    ScalarExpr,
    ZeroResult,
    ZeroTestConfig,
    add_all,
    as_expr,
    differentiate,
    from_normal,
    is_zero,
    normal_form,
    parse_expr,
    render,
    substitute,
)


class GeometryError(Exception):
    """Base class for form/field-level failures."""


class DegreeError(GeometryError):
    pass


class SpaceMismatchError(GeometryError):
    pass


class MetricError(GeometryError):
    pass


_RESERVED_NAMES = {"sin", "cos"}


@dataclass(frozen=True)
class Space:
    """Named flat coordinate space with optional constant diagonal metric.

    Orientation is the declared coordinate order.
    """

    name: str
    coordinates: tuple[str, ...]
    parameters: tuple[str, ...] = ()
    metric: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if self.metric is not None:
            object.__setattr__(self, "metric", tuple(Fraction(g) for g in self.metric))
        if len(self.coordinates) < 1:
            raise GeometryError("space must have at least one coordinate")
        names = self.coordinates + self.parameters
        if len(set(names)) != len(names):
            raise GeometryError("coordinate and parameter names must be distinct")
        for n in names:
            if n in _RESERVED_NAMES:
                raise GeometryError(f"'{n}' is a reserved function name")
        if self.metric is not None:
            if len(self.metric) != len(self.coordinates):
                raise MetricError("metric length must equal the dimension")
            if any(g == 0 for g in self.metric):
                raise MetricError("metric entries must be nonzero")

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.coordinates + self.parameters

    def position(self, coord: str) -> int:
        try:
            return self.coordinates.index(coord)
        except ValueError:
            raise GeometryError(f"'{coord}' is not a coordinate of space '{self.name}'") from None

    def parse(self, text: str) -> ScalarExpr:
        return parse_expr(text, self.symbols)

    def with_metric(self, metric: Iterable[Fraction] | None) -> "Space":
        return Space(self.name, self.coordinates, self.parameters,
                     tuple(Fraction(g) for g in metric) if metric is not None else None)


def _check_symbols(expr: ScalarExpr, space: Space, what: str) -> None:
    extra = expr.free_symbols() - set(space.symbols)
    if extra:
        raise GeometryError(f"{what} uses symbols {sorted(extra)} not declared in space '{space.name}'")


class DiffForm:
    """Degree-k form as a sparse map from increasing multi-indices."""

    __slots__ = ("space", "degree", "coeffs")

    def __init__(self, space: Space, degree: int, coeffs: Mapping[tuple[int, ...], object] | None = None):
        if not 0 <= degree <= space.dim:
            raise DegreeError(f"degree {degree} out of range for dimension {space.dim}")
        stored: dict[tuple[int, ...], ScalarExpr] = {}
        for idx, raw in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise GeometryError(f"multi-index {idx} does not match degree {degree}")
            if any(not 0 <= i < space.dim for i in idx):
                raise GeometryError(f"multi-index {idx} out of range")
            if any(a >= b for a, b in zip(idx, idx[1:])):
                raise GeometryError(f"multi-index {idx} must be strictly increasing")
            expr = as_expr(raw)
            _check_symbols(expr, space, "coefficient")
            nf = normal_form(expr)
            if nf.is_zero():
                continue
            canonical = from_normal(nf)
            if idx in stored:
                canonical = from_normal(normal_form(stored[idx] + canonical))
            stored[idx] = canonical
        self.space = space
        self.degree = degree
        self.coeffs = dict(sorted(stored.items()))

    # -- inspection ---------------------------------------------------

    def get(self, idx: tuple[int, ...]) -> ScalarExpr:
        return self.coeffs.get(tuple(idx), Const(Fraction(0)))

    def terms(self):
        return self.coeffs.items()

    @property
    def is_zero_form(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        return (self.space, self.degree, self.coeffs) == (other.space, other.degree, other.coeffs)

    def __hash__(self):
        return hash((self.space, self.degree, tuple(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return f"DiffForm({self.space.name}, deg={self.degree}, 0)"
        body = " + ".join(
            f"[{render(c)}] d{'^'.join(self.space.coordinates[i] for i in idx)}" if idx else render(c)
            for idx, c in self.coeffs.items()
        )
        return f"DiffForm({self.space.name}, deg={self.degree}: {body})"

    # -- arithmetic ---------------------------------------------------

    def _require_same(self, other: "DiffForm"):
        if self.space != other.space:
            raise SpaceMismatchError("forms live on different spaces")
        if self.degree != other.degree:
            raise DegreeError("forms have different degrees")

    def __add__(self, other: "DiffForm") -> "DiffForm":
        self._require_same(other)
        acc: dict[tuple[int, ...], ScalarExpr] = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            acc[idx] = acc[idx] + c if idx in acc else c
        return DiffForm(self.space, self.degree, acc)

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return self + (-other)

    def __neg__(self) -> "DiffForm":
        return DiffForm(self.space, self.degree, {i: -c for i, c in self.coeffs.items()})

    def __mul__(self, scalar) -> "DiffForm":
        s = as_expr(scalar)
        return DiffForm(self.space, self.degree, {i: s * c for i, c in self.coeffs.items()})

    __rmul__ = __mul__

    def map_coefficients(self, fn) -> "DiffForm":
        return DiffForm(self.space, self.degree, {i: fn(c) for i, c in self.coeffs.items()})


@dataclass(frozen=True)
class VectorField:
    """Component array over a space's coordinates."""

    space: Space
    components: tuple[ScalarExpr, ...]

    def __post_init__(self):
        comps = tuple(from_normal(normal_form(as_expr(c))) for c in self.components)
        if len(comps) != self.space.dim:
            raise GeometryError("component count must equal the dimension")
        for c in comps:
            _check_symbols(c, self.space, "component")
        object.__setattr__(self, "components", comps)

    @property
    def is_zero(self) -> bool:
        return all(normal_form(c).is_zero() for c in self.components)

    def apply_to(self, f: ScalarExpr) -> ScalarExpr:
        """Directional derivative of a scalar along the field."""
        terms = [c * differentiate(f, x) for c, x in zip(self.components, self.space.coordinates)]
        return from_normal(normal_form(add_all(terms)))

    def __add__(self, other: "VectorField") -> "VectorField":
        if self.space != other.space:
            raise SpaceMismatchError("fields live on different spaces")
        return VectorField(self.space, tuple(a + b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar) -> "VectorField":
        s = as_expr(scalar)
        return VectorField(self.space, tuple(s * c for c in self.components))

    __rmul__ = __mul__

    def map_components(self, fn) -> "VectorField":
        return VectorField(self.space, tuple(fn(c) for c in self.components))


# --------------------------------------------------------------------------
# Constructors


def coordinate_vector(space: Space, coord: str) -> VectorField:
    pos = space.position(coord)
    comps = [Const(Fraction(1)) if i == pos else Const(Fraction(0)) for i in range(space.dim)]
    return VectorField(space, tuple(comps))


def constant_form(space: Space, value=1) -> DiffForm:
    return DiffForm(space, 0, {(): as_expr(value)})


def basis_form(space: Space, *coords: str, coeff=1) -> DiffForm:
    """dx^{c1} ∧ … ∧ dx^{ck}; unsorted coordinate lists pick up the sign."""
    positions = [space.position(c) for c in coords]
    if len(set(positions)) != len(positions):
        return DiffForm(space, len(positions), {})
    sign = _permutation_sign(positions)
    return DiffForm(space, len(positions), {tuple(sorted(positions)): Const(Fraction(sign)) * as_expr(coeff)})


def volume_form(space: Space) -> DiffForm:
    return DiffForm(space, space.dim, {tuple(range(space.dim)): Const(Fraction(1))})


def form_from_terms(space: Space, degree: int, terms: Mapping[tuple[str, ...], object]) -> DiffForm:
    acc = DiffForm(space, degree, {})
    for coords, coeff in terms.items():
        acc = acc + basis_form(space, *coords, coeff=coeff)
    return acc


# --------------------------------------------------------------------------
# Index bookkeeping


def _permutation_sign(seq) -> int:
    inversions = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inversions += 1
    return -1 if inversions % 2 else 1


def _merge_indices(I: tuple[int, ...], J: tuple[int, ...]):
    """Merge two increasing index tuples; None on overlap, else (sign, merged)."""
    merged = []
    sign = 1
    i = j = 0
    while i < len(I) and j < len(J):
        a, b = I[i], J[j]
        if a == b:
            return None
        if a < b:
            merged.append(a)
            i += 1
        else:
            # J[j] jumps over the remaining entries of I
            if (len(I) - i) % 2:
                sign = -sign
            merged.append(b)
            j += 1
    merged.extend(I[i:])
    merged.extend(J[j:])
    return sign, tuple(merged)


def _insert_index(pos: int, I: tuple[int, ...]):
    """Insert one position into an increasing tuple; None if already present."""
    if pos in I:
        return None
    before = sum(1 for i in I if i < pos)
    sign = -1 if before % 2 else 1
    out = tuple(sorted(I + (pos,)))
    return sign, out


# --------------------------------------------------------------------------
# Core operations


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    if a.space != b.space:
        raise SpaceMismatchError("wedge of forms on different spaces")
    degree = a.degree + b.degree
    if degree > a.space.dim:
        raise DegreeError(f"wedge degree {degree} exceeds dimension {a.space.dim}")
    acc: dict[tuple[int, ...], ScalarExpr] = {}
    for I, ca in a.coeffs.items():
        for J, cb in b.coeffs.items():
            merged = _merge_indices(I, J)
            if merged is None:
                continue
            sign, K = merged
            term = Const(Fraction(sign)) * ca * cb
            acc[K] = acc[K] + term if K in acc else term
    return DiffForm(a.space, degree, acc)


def wedge_power(a: DiffForm, power: int) -> DiffForm:
    result = constant_form(a.space)
    for _ in range(power):
        result = wedge(result, a)
    return result


def exterior_derivative(a: DiffForm) -> DiffForm:
    if a.degree >= a.space.dim:
        raise DegreeError("exterior derivative of a top-degree form overflows the space")
    acc: dict[tuple[int, ...], ScalarExpr] = {}
    for I, c in a.coeffs.items():
        for pos, coord in enumerate(a.space.coordinates):
            dc = differentiate(c, coord)
            if normal_form(dc).is_zero():
                continue
            inserted = _insert_index(pos, I)
            if inserted is None:
                continue
            sign, K = inserted
            term = Const(Fraction(sign)) * dc
            acc[K] = acc[K] + term if K in acc else term
    return DiffForm(a.space, a.degree + 1, acc)


def interior_product(v: VectorField, a: DiffForm) -> DiffForm:
    if v.space != a.space:
        raise SpaceMismatchError("interior product across different spaces")
    if a.degree == 0:
        raise DegreeError("interior product requires degree >= 1")
    comp_nf = [normal_form(c) for c in v.components]
    acc: dict[tuple[int, ...], ScalarExpr] = {}
    for I, c in a.coeffs.items():
        for slot, pos in enumerate(I):
            if comp_nf[pos].is_zero():
                continue
            sign = -1 if slot % 2 else 1
            K = I[:slot] + I[slot + 1:]
            term = Const(Fraction(sign)) * v.components[pos] * c
            acc[K] = acc[K] + term if K in acc else term
    return DiffForm(a.space, a.degree - 1, acc)


def lie_derivative(v: VectorField, a: DiffForm) -> DiffForm:
    """Cartan formula; for top-degree forms only the d(v ⌟ a) term remains."""
    if v.space != a.space:
        raise SpaceMismatchError("Lie derivative across different spaces")
    if a.degree == 0:
        return interior_product(v, exterior_derivative(a))
    if a.degree == a.space.dim:
        return exterior_derivative(interior_product(v, a))
    return interior_product(v, exterior_derivative(a)) + exterior_derivative(interior_product(v, a))


@dataclass(frozen=True)
class CoordMap:
    """Smooth map between spaces given per-target-coordinate expressions."""

    source: Space
    target: Space
    components: tuple[tuple[str, ScalarExpr], ...]

    def __init__(self, source: Space, target: Space, components: Mapping[str, object]):
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        missing = [c for c in target.coordinates if c not in components]
        if missing:
            raise GeometryError(f"map is missing target coordinates {missing}")
        if not set(target.parameters) <= set(source.parameters):
            raise GeometryError("target parameters must be declared in the source space")
        comps = []
        for c in target.coordinates:
            expr = as_expr(components[c])
            _check_symbols(expr, source, f"map component for '{c}'")
            comps.append((c, from_normal(normal_form(expr))))
        object.__setattr__(self, "components", tuple(comps))

    def component(self, coord: str) -> ScalarExpr:
        for name, expr in self.components:
            if name == coord:
                return expr
        raise GeometryError(f"no component for '{coord}'")


def pullback(phi: CoordMap, a: DiffForm) -> DiffForm:
    """Pull a form on phi.target back to phi.source."""
    if a.space != phi.target:
        raise SpaceMismatchError("form does not live on the map's target space")
    if a.degree > phi.source.dim:
        raise DegreeError("pullback degree exceeds the source dimension")
    substitution = {name: expr for name, expr in phi.components}
    differentials: dict[int, DiffForm] = {}
    for pos, coord in enumerate(phi.target.coordinates):
        u = phi.component(coord)
        differentials[pos] = DiffForm(
            phi.source, 1,
            {(j,): differentiate(u, x) for j, x in enumerate(phi.source.coordinates)},
        )
    total = DiffForm(phi.source, a.degree, {})
    for I, c in a.coeffs.items():
        pulled = constant_form(phi.source, substitute(c, substitution))
        for pos in I:
            pulled = wedge(pulled, differentials[pos])
        total = total + pulled
    return total


def _sqrt_fraction(value: Fraction) -> Fraction | None:
    if value < 0:
        return None
    num_root = isqrt(value.numerator)
    den_root = isqrt(value.denominator)
    if num_root * num_root == value.numerator and den_root * den_root == value.denominator:
        return Fraction(num_root, den_root)
    return None


def hodge_star(a: DiffForm, metric: Iterable[Fraction] | None = None) -> DiffForm:
    """Metric duality on basis forms, indices raised by the diagonal metric."""
    g = tuple(Fraction(x) for x in metric) if metric is not None else a.space.metric
    if g is None:
        raise MetricError(f"space '{a.space.name}' has no metric")
    n = a.space.dim
    if len(g) != n:
        raise MetricError("metric length must equal the dimension")
    if any(x == 0 for x in g):
        raise MetricError("metric entries must be nonzero")
    det_abs = Fraction(1)
    for x in g:
        det_abs *= abs(x)
    sqrt_det = _sqrt_fraction(det_abs)
    if sqrt_det is None:
        raise MetricError("metric determinant must be a perfect rational square for exact duality")
    acc: dict[tuple[int, ...], ScalarExpr] = {}
    everything = range(n)
    for I, c in a.coeffs.items():
        J = tuple(i for i in everything if i not in I)
        sign = _permutation_sign(list(I) + list(J))
        factor = sqrt_det * Fraction(sign)
        for i in I:
            factor /= g[i]
        term = Const(factor) * c
        acc[J] = acc[J] + term if J in acc else term
    return DiffForm(a.space, n - a.degree, acc)


# --------------------------------------------------------------------------
# Chart reordering (used for configurable base/vertical splits)


def reordered_space(space: Space, new_order: Iterable[str]) -> Space:
    new_order = tuple(new_order)
    if sorted(new_order) != sorted(space.coordinates):
        raise GeometryError("new order must be a permutation of the coordinates")
    metric = None
    if space.metric is not None:
        metric = tuple(space.metric[space.position(c)] for c in new_order)
    return Space(space.name, new_order, space.parameters, metric)


def reorder_form(a: DiffForm, new_space: Space) -> DiffForm:
    position = {c: i for i, c in enumerate(new_space.coordinates)}
    acc: dict[tuple[int, ...], ScalarExpr] = {}
    for I, c in a.coeffs.items():
        mapped = [position[a.space.coordinates[i]] for i in I]
        sign = _permutation_sign(mapped)
        key = tuple(sorted(mapped))
        term = Const(Fraction(sign)) * c
        acc[key] = acc[key] + term if key in acc else term
    return DiffForm(new_space, a.degree, acc)


def reorder_field(v: VectorField, new_space: Space) -> VectorField:
    by_name = dict(zip(v.space.coordinates, v.components))
    return VectorField(new_space, tuple(by_name[c] for c in new_space.coordinates))


# --------------------------------------------------------------------------
# Aggregate zero tests and serialization


def form_is_zero(a: DiffForm, config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> ZeroResult:
    certainty = EXACT
    value = True
    for _idx, c in a.coeffs.items():
        res = is_zero(c, config)
        if res.certainty == PROBABILISTIC:
            certainty = PROBABILISTIC
        if not res.value:
            value = False
    return ZeroResult(value, certainty)


def fields_equal(u: VectorField, v: VectorField, config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> ZeroResult:
    if u.space != v.space:
        raise SpaceMismatchError("fields live on different spaces")
    certainty = EXACT
    value = True
    for a, b in zip(u.components, v.components):
        res = is_zero(a - b, config)
        if res.certainty == PROBABILISTIC:
            certainty = PROBABILISTIC
        if not res.value:
            value = False
    return ZeroResult(value, certainty)


def serialize_form(a: DiffForm) -> list[dict]:
    return [
        {"index": [i + 1 for i in idx], "coeff": render(c)}
        for idx, c in a.coeffs.items()
    ]


def deserialize_form(space: Space, degree: int, data: list[dict]) -> DiffForm:
    coeffs: dict[tuple[int, ...], ScalarExpr] = {}
    for entry in data:
        idx = tuple(int(i) - 1 for i in entry["index"])
        expr = parse_expr(entry["coeff"], space.symbols)
        coeffs[idx] = coeffs[idx] + expr if idx in coeffs else expr
    return DiffForm(space, degree, coeffs)


def serialize_field(v: VectorField) -> list[str]:
    return [render(c) for c in v.components]


def deserialize_field(space: Space, data: list[str]) -> VectorField:
    return VectorField(space, tuple(parse_expr(s, space.symbols) for s in data))
