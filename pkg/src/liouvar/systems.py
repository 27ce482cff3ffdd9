"""Builders for the bundled dynamical systems plus JSON system files.

Every builder returns a system whose structural invariants have been
verified at construction time (potentials match fluxes, symplectic data
is nondegenerate, declared first integrals are annihilated by the flow).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .expr import (
    Const,
    DEFAULT_ZERO_TEST,
    ExprError,
    ParseError,
    ScalarExpr,
    Symbol,
    ZeroTestConfig,
    add_all,
    as_expr,
    differentiate,
    from_normal,
    is_zero,
    mul_all,
    normal_form,
    parse_expr,
    parse_rational,
    render,
)
from .exterior import (
    DiffForm,
    GeometryError,
    Space,
    VectorField,
    basis_form,
    constant_form,
    deserialize_field,
    deserialize_form,
    exterior_derivative,
    fields_equal,
    form_is_zero,
    serialize_field,
    serialize_form,
    volume_form,
    wedge,
    wedge_power,
)
from .liouville import (
    CertificateError,
    ExtendedSystem,
    LiouvilleError,
    LiouvilleSystem,
    SystemInvariantError,
    TIME_COORDINATE,
    extended_space,
    promote_field,
    promote_form,
    validate_system,
    verify_characteristic,
)


class SystemFileError(Exception):
    pass


# --------------------------------------------------------------------------
# Exact linear algebra over rationals


def invert_fraction_matrix(rows: list[list[Fraction]]) -> list[list[Fraction]] | None:
    n = len(rows)
    aug = [[Fraction(x) for x in row] + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
           for i, row in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _constant_coefficient(c: ScalarExpr, what: str) -> Fraction:
    nf = normal_form(c)
    if not nf.is_constant():
        raise LiouvilleError(f"{what} must have constant coefficients, got {render(c)}")
    return nf.constant_value()


def _omega_matrix(omega: DiffForm) -> list[list[Fraction]]:
    n = omega.space.dim
    if omega.degree != 2:
        raise LiouvilleError("symplectic input must be a 2-form")
    M = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), c in omega.coeffs.items():
        v = _constant_coefficient(c, "symplectic form")
        M[i][j] = v
        M[j][i] = -v
    return M


def solve_symplectic_field(omega: DiffForm, hamiltonian: ScalarExpr) -> VectorField:
    """Unique X with X ⌟ omega = dH for a constant nondegenerate 2-form."""
    space = omega.space
    n = space.dim
    M = _omega_matrix(omega)
    # (X ⌟ omega)_j = sum_i X^i M[i][j]
    system = [[M[i][j] for i in range(n)] for j in range(n)]
    inv = invert_fraction_matrix(system)
    if inv is None:
        raise LiouvilleError("degenerate symplectic form: linear solve failed")
    dH = [differentiate(hamiltonian, x) for x in space.coordinates]
    comps = [add_all([Const(inv[i][j]) * dH[j] for j in range(n)]) for i in range(n)]
    return VectorField(space, tuple(comps))


def field_from_flux(chi: DiffForm, omega: DiffForm) -> VectorField:
    """Unique X with X ⌟ Omega = chi for a volume form Omega."""
    space = chi.space
    n = space.dim
    if chi.degree != n - 1:
        raise LiouvilleError("flux must have degree n-1")
    scale = _constant_coefficient(omega.get(tuple(range(n))), "volume form")
    if scale == 0:
        raise LiouvilleError("volume form vanishes")
    comps = []
    for i in range(n):
        idx = tuple(j for j in range(n) if j != i)
        sign = -1 if i % 2 else 1
        comps.append(Const(Fraction(sign) / scale) * chi.get(idx))
    return VectorField(space, tuple(comps))


def curl3(space: Space, components: Iterable[ScalarExpr]) -> tuple[ScalarExpr, ...]:
    """Curl of a 3-component field over the first three coordinates."""
    if space.dim != 3:
        raise GeometryError("curl is defined here for three-dimensional spaces only")
    a1, a2, a3 = components
    x1, x2, x3 = space.coordinates
    return (
        from_normal(normal_form(differentiate(a3, x2) - differentiate(a2, x3))),
        from_normal(normal_form(differentiate(a1, x3) - differentiate(a3, x1))),
        from_normal(normal_form(differentiate(a2, x1) - differentiate(a1, x2))),
    )


# --------------------------------------------------------------------------
# Parameter plumbing shared by builders


def _bind(value) -> Fraction | None:
    if value is None:
        return None
    if isinstance(value, str):
        return parse_rational(value)
    return Fraction(value)


def _check_invariants(sys: LiouvilleSystem, config: ZeroTestConfig) -> None:
    b = sys.bound()
    for inv in b.invariants:
        verdict = is_zero(b.field.apply_to(inv), config)
        if not verdict.value:
            raise SystemInvariantError(
                f"declared invariant {render(inv)} is not conserved by the field")


# --------------------------------------------------------------------------
# Hamiltonian systems


def canonical_symplectic(space: Space, m: int) -> DiffForm:
    acc = DiffForm(space, 2, {})
    for i in range(m):
        acc = acc + basis_form(space, space.coordinates[2 * i], space.coordinates[2 * i + 1])
    return acc


def canonical_potential(space: Space, m: int) -> DiffForm:
    """rho = (1/m) sum q_i dp_i, so that m * d(rho) equals the symplectic form."""
    coeffs = {}
    for i in range(m):
        coeffs[(2 * i + 1,)] = Const(Fraction(1, m)) * Symbol(space.coordinates[2 * i])
    return DiffForm(space, 1, coeffs)


def _factorial(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


def build_hamiltonian(hamiltonian, m: int, name: str | None = None,
                      parameters: Iterable[str] = (),
                      config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> LiouvilleSystem:
    """Canonical system on R^{2m} with interleaved coordinates q_i, p_i.

    X solves X ⌟ omega = dH; the flux potential is H * zeta with
    zeta = omega^(m-1)/(m-1)!, and sigma = rho ∧ zeta.
    """
    if m < 1:
        raise LiouvilleError("half-dimension must be at least 1")
    if m == 1:
        coords = ("q", "p")
    else:
        coords = tuple(n for i in range(1, m + 1) for n in (f"q{i}", f"p{i}"))
    space = Space(name or f"hamiltonian_m{m}", coords, tuple(parameters))
    H = hamiltonian if isinstance(hamiltonian, ScalarExpr) else parse_expr(hamiltonian, space.symbols)
    omega = canonical_symplectic(space, m)
    X = solve_symplectic_field(omega, H)
    zeta = wedge_power(omega, m - 1) * Const(Fraction(1, _factorial(m - 1)))
    gamma = zeta * H
    rho = canonical_potential(space, m)
    sigma = wedge(rho, zeta)
    sys = LiouvilleSystem(name or f"hamiltonian_m{m}", space, X,
                          gamma=gamma, sigma=sigma, invariants=(H,))
    validate_system(sys, config)
    _check_invariants(sys, config)
    return sys


# --------------------------------------------------------------------------
# Nambu systems


def build_nambu(hamiltonians, coordinates: Iterable[str] | None = None,
                parameters: Iterable[str] = (), name: str = "nambu",
                config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> LiouvilleSystem:
    """Field defined by X ⌟ Omega = dH_2 ∧ ... ∧ dH_n on R^n."""
    n = len(hamiltonians) + 1
    coords = tuple(coordinates) if coordinates is not None else tuple(f"x{i}" for i in range(1, n + 1))
    if len(coords) != n:
        raise LiouvilleError("need n coordinates for n-1 Hamiltonians")
    space = Space(name, coords, tuple(parameters))
    hs = [h if isinstance(h, ScalarExpr) else parse_expr(h, space.symbols) for h in hamiltonians]
    omega = volume_form(space)
    chi = constant_form(space)
    for h in hs:
        dh = DiffForm(space, 1, {(i,): differentiate(h, x) for i, x in enumerate(coords)})
        chi = wedge(chi, dh)
    X = field_from_flux(chi, omega)
    gamma = constant_form(space, hs[0])
    for h in hs[1:]:
        dh = DiffForm(space, 1, {(i,): differentiate(h, x) for i, x in enumerate(coords)})
        gamma = wedge(gamma, dh)
    sys = LiouvilleSystem(name, space, X, gamma=gamma, invariants=tuple(hs))
    validate_system(sys, config)
    _check_invariants(sys, config)
    return sys


# --------------------------------------------------------------------------
# Hyperhamiltonian systems


@dataclass
class HyperkahlerData:
    """Three constant symplectic structures with Hamiltonians and potentials."""

    space: Space
    omegas: tuple[DiffForm, DiffForm, DiffForm]
    hamiltonians: tuple[ScalarExpr, ScalarExpr, ScalarExpr]
    potentials: tuple[DiffForm, DiffForm, DiffForm]
    orientation: int


def validate_hyperkahler(data: HyperkahlerData,
                         config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> int:
    """Check the data invariants; returns the triple's duality sign."""
    space = data.space
    if space.dim % 4:
        raise LiouvilleError("hyperkahler data requires dimension 4N")
    if data.orientation not in (1, -1):
        raise LiouvilleError("orientation sign must be +1 or -1")
    half = space.dim // 2
    signs = set()
    for i, (omega, rho) in enumerate(zip(data.omegas, data.potentials), start=1):
        if omega.degree != 2 or rho.degree != 1:
            raise LiouvilleError("omegas must be 2-forms and potentials 1-forms")
        if exterior_derivative(rho) != omega:
            raise SystemInvariantError(f"d(rho_{i}) does not equal omega_{i}")
        top = wedge_power(omega, half)
        if top.is_zero_form:
            raise LiouvilleError(f"omega_{i} is degenerate: its top power vanishes")
        coeff = _constant_coefficient(top.get(tuple(range(space.dim))), "top power")
        signs.add(1 if coeff > 0 else -1)
    if len(signs) != 1:
        raise LiouvilleError("the three symplectic structures have mixed duality signs")
    duality = signs.pop()
    if duality != data.orientation:
        raise LiouvilleError(
            f"declared orientation sign {data.orientation:+d} does not match the "
            f"duality sign {duality:+d} of the symplectic triple")
    return duality


def build_hyperhamiltonian(data: HyperkahlerData, name: str = "hyperhamiltonian",
                           config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> ExtendedSystem:
    """Sum the three symplectic gradients and build the extended form.

    theta = sum_a rho_a ∧ zeta_a + 6N * sum_a H^a zeta_a ∧ dt with
    zeta_a the (2N-1)-th power of omega_a.  The declared orientation sign
    is validated against the duality sign of the triple, and the two sign
    factors cancel in the time term; the resulting characteristic
    identities are verified before returning.
    """
    duality = validate_hyperkahler(data, config)
    space = data.space
    N = space.dim // 4
    X = None
    for omega, h in zip(data.omegas, data.hamiltonians):
        Xa = solve_symplectic_field(omega, as_expr(h))
        X = Xa if X is None else X + Xa
    ext_sp = extended_space(space)
    dt = basis_form(ext_sp, TIME_COORDINATE)
    time_factor = Const(Fraction(6 * N * data.orientation * duality))
    theta = DiffForm(ext_sp, space.dim - 1, {})
    for omega, h, rho in zip(data.omegas, data.hamiltonians, data.potentials):
        zeta = wedge_power(omega, 2 * N - 1)
        theta = theta + wedge(promote_form(rho, ext_sp), promote_form(zeta, ext_sp))
        theta = theta + wedge(promote_form(zeta * as_expr(h), ext_sp), dt) * time_factor
    dtheta = exterior_derivative(theta)
    if form_is_zero(dtheta, config).value:
        raise SystemInvariantError("d(theta) is identically zero")
    Z = promote_field(X, ext_sp, time_component=1)
    ext = ExtendedSystem(name, ext_sp, Z, theta, dtheta,
                         base=LiouvilleSystem(name, space, X, theta=theta))
    certs = verify_characteristic(ext, config)
    failed = [c for c in certs if not c.passed]
    if failed:
        raise CertificateError(
            "hyperhamiltonian construction failed verification: "
            + ", ".join(c.name for c in failed))
    validate_system(ext.base, config)
    return ext


# --------------------------------------------------------------------------
# Rigid-body rotations


def build_euler_top(inertia: tuple | None = None,
                    config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> LiouvilleSystem:
    """Free rigid-body angular-velocity flow on R^3.

    With inertia moments given, the quadratic coefficients mu_i are bound
    to exact rationals and the energy and squared angular momentum are
    registered as invariants; otherwise the mu_i stay symbolic.
    """
    if inertia is not None:
        I1, I2, I3 = (Fraction(v) for v in inertia)
        if 0 in (I1, I2, I3):
            raise LiouvilleError("inertia moments must be nonzero")
        mu_values = ((I2 - I3) / I1, (I3 - I1) / I2, (I1 - I2) / I3)
        parameters = ("I1", "I2", "I3", "mu1", "mu2", "mu3")
        bindings = dict(zip(parameters, (I1, I2, I3) + mu_values))
    else:
        parameters = ("mu1", "mu2", "mu3")
        bindings = {p: None for p in parameters}
    space = Space("euler_top", ("x1", "x2", "x3"), parameters)
    x1, x2, x3 = (Symbol(c) for c in space.coordinates)
    mu1, mu2, mu3 = Symbol("mu1"), Symbol("mu2"), Symbol("mu3")
    X = VectorField(space, (mu1 * x2 * x3, mu2 * x3 * x1, mu3 * x1 * x2))
    half = Const(Fraction(1, 2))
    gamma = DiffForm(space, 1, {
        (0,): half * mu2 * x1 * x3 ** 2,
        (1,): half * mu3 * x2 * x1 ** 2,
        (2,): half * mu1 * x3 * x2 ** 2,
    })
    if inertia is not None:
        i1, i2, i3 = Symbol("I1"), Symbol("I2"), Symbol("I3")
        invariants = (
            half * (i1 * x1 ** 2 + i2 * x2 ** 2 + i3 * x3 ** 2),
            i1 ** 2 * x1 ** 2 + i2 ** 2 * x2 ** 2 + i3 ** 2 * x3 ** 2,
        )
    else:
        invariants = (mu2 * x1 ** 2 - mu1 * x2 ** 2, mu3 * x2 ** 2 - mu2 * x3 ** 2)
    sys = LiouvilleSystem("euler_top", space, X, gamma=gamma,
                          invariants=invariants,
                          params={p: bindings[p] for p in parameters})
    validate_system(sys, config)
    _check_invariants(sys, config)
    return sys


# --------------------------------------------------------------------------
# Beltrami flow on the three-torus chart


def _abc_components(space: Space, corrected: bool) -> tuple[ScalarExpr, ...]:
    A, B, C = Symbol("A"), Symbol("B"), Symbol("C")
    x1, x2, x3 = (Symbol(c) for c in space.coordinates)
    from .expr import Cos, Sin
    if corrected:
        return (
            A * Sin(x3) + C * Cos(x2),
            B * Sin(x1) + A * Cos(x3),
            C * Sin(x2) + B * Cos(x1),
        )
    return (
        A * Sin(x1) + C * Cos(x2),
        B * Sin(x1) + A * Cos(x2),
        C * Sin(x2) + B * Cos(x1),
    )


def build_abc_flow(a=None, b=None, c=None,
                   config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> LiouvilleSystem:
    """Solenoidal Beltrami field: the curl of the field equals the field.

    The flux potential is the one-form with the same components as the
    field, supplied explicitly because of the trigonometric coefficients.
    """
    space = Space("abc_flow", ("x1", "x2", "x3"), ("A", "B", "C"))
    comps = _abc_components(space, corrected=True)
    X = VectorField(space, comps)
    gamma = DiffForm(space, 1, {(i,): comp for i, comp in enumerate(comps)})
    sys = LiouvilleSystem("abc_flow", space, X, gamma=gamma,
                          params={"A": _bind(a), "B": _bind(b), "C": _bind(c)})
    validate_system(sys, config)
    return sys


def build_abc_flow_variant(a=None, b=None, c=None) -> LiouvilleSystem:
    """Non-solenoidal variant kept as a negative control; it fails the
    volume-preservation certificate and ships without a flux potential."""
    space = Space("abc_paper_verbatim", ("x1", "x2", "x3"), ("A", "B", "C"))
    X = VectorField(space, _abc_components(space, corrected=False))
    sys = LiouvilleSystem("abc_paper_verbatim", space, X,
                          params={"A": _bind(a), "B": _bind(b), "C": _bind(c)})
    validate_system(sys)
    return sys


# --------------------------------------------------------------------------
# Charged particle in a stationary magnetic field


def _poly_antiderivative(e: ScalarExpr, space: Space, coord: str) -> ScalarExpr:
    """Monomial-wise antiderivative with zero integration constant."""
    nf = normal_form(e)
    if nf.has_trig():
        raise LiouvilleError("magnetic components must be polynomial")
    pos_atom = (0, coord)
    terms = []
    for mono, coeff in nf.terms:
        exps = dict(mono)
        e_old = exps.get(pos_atom, 0)
        exps[pos_atom] = e_old + 1
        new_coeff = coeff / (e_old + 1)
        factors = [Const(new_coeff)]
        for atom, k in sorted(exps.items()):
            base = Symbol(atom[1]) if atom[0] == 0 else None
            if base is None:
                raise LiouvilleError("magnetic components must be polynomial")
            factors.append(base if k == 1 else base ** k)
        terms.append(mul_all(factors))
    return from_normal(normal_form(add_all(terms)))


def build_charged_particle(B, k=None, parameters: Iterable[str] = (),
                           name: str = "charged_particle",
                           config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> LiouvilleSystem:
    """First-order system on R^6 for a particle steered by a magnetic field.

    ``B`` gives three polynomial components over the position coordinates;
    the acceleration is the velocity crossed with B, scaled by the
    charge-to-mass ratio k.  A nonzero divergence of B is physically
    suspect and is reported as a warning without blocking the build.
    """
    extra = tuple(parameters)
    space = Space(name, ("x1", "x2", "x3", "v1", "v2", "v3"), ("k",) + extra)
    xs = space.coordinates[:3]
    vs = space.coordinates[3:]
    b_comps = []
    for comp in B:
        e = comp if isinstance(comp, ScalarExpr) else parse_expr(comp, space.symbols)
        bad = e.free_symbols() & set(vs)
        if bad:
            raise LiouvilleError(f"magnetic field must not depend on velocities {sorted(bad)}")
        if normal_form(e).has_trig():
            raise LiouvilleError("magnetic components must be polynomial")
        b_comps.append(from_normal(normal_form(e)))
    if len(b_comps) != 3:
        raise LiouvilleError("the magnetic field needs three components")
    kk = Symbol("k")
    v1, v2, v3 = (Symbol(v) for v in vs)
    B1, B2, B3 = b_comps
    w = (kk * (v2 * B3 - v3 * B2), kk * (v3 * B1 - v1 * B3), kk * (v1 * B2 - v2 * B1))
    X = VectorField(space, (v1, v2, v3) + w)

    omega_i = [basis_form(space, xs[i], vs[i]) for i in range(3)]
    omega = wedge(wedge(omega_i[0], omega_i[1]), omega_i[2])
    pair = [wedge(omega_i[1], omega_i[2]), wedge(omega_i[2], omega_i[0]), wedge(omega_i[0], omega_i[1])]

    half = Const(Fraction(1, 2))
    gamma1 = pair[0] * (half * v1 ** 2) + pair[1] * (half * v2 ** 2) + pair[2] * (half * v3 ** 2)
    F_a = _poly_antiderivative(kk * B3, space, "x1")
    F_b = _poly_antiderivative(Const(-1) * kk * B2, space, "x1")
    G_a = _poly_antiderivative(Const(-1) * kk * B3, space, "x2")
    G_b = _poly_antiderivative(kk * B1, space, "x2")
    H_a = _poly_antiderivative(kk * B2, space, "x3")
    H_b = _poly_antiderivative(Const(-1) * kk * B1, space, "x3")
    gamma2 = (pair[0] * (F_a * v2 + F_b * v3)
              + pair[1] * (G_a * v1 + G_b * v3)
              + pair[2] * (H_a * v1 + H_b * v2))
    gamma = gamma1 - gamma2

    # sigma = (1/3) sum_i x^i dv^i ∧ omega_(i+1) ∧ omega_(i+2)
    third = Const(Fraction(1, 3))
    sigma = DiffForm(space, 5, {})
    for i in range(3):
        piece = wedge(basis_form(space, vs[i], coeff=Symbol(xs[i])), pair[i])
        sigma = sigma + piece * third

    warnings = ()
    divB = add_all([differentiate(B1, "x1"), differentiate(B2, "x2"), differentiate(B3, "x3")])
    if not is_zero(divB, config).value:
        warnings = (f"magnetic field has nonzero divergence {render(divB)}",)

    sys = LiouvilleSystem(name, space, X, omega=omega, gamma=gamma, sigma=sigma,
                          invariants=(v1 ** 2 + v2 ** 2 + v3 ** 2,),
                          params={"k": _bind(k), **{p: None for p in extra}},
                          warnings=warnings)
    validate_system(sys, config)
    _check_invariants(sys, config)
    return sys


# --------------------------------------------------------------------------
# Spin-1/2 precession


def build_pauli_spin(Bx=None, By=None, Bz=None, kappa=None,
                     config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> ExtendedSystem:
    """Real four-dimensional form of spin precession in a constant field.

    Delegates to the hyperhamiltonian builder with the standard
    anti-self-dual triple and Hamiltonians (kappa/2) B_component |xi|^2
    paired as (H^1, H^2, H^3) <-> (B_y, B_x, B_z), then certifies that
    the summed field reproduces the expected linear system.
    """
    space = Space("pauli_spin", ("x1", "x2", "x3", "x4"), ("Bx", "By", "Bz", "kappa"))
    x = [Symbol(c) for c in space.coordinates]
    bx, by, bz, kk = Symbol("Bx"), Symbol("By"), Symbol("Bz"), Symbol("kappa")
    omegas = (
        basis_form(space, "x1", "x3") + basis_form(space, "x2", "x4"),
        basis_form(space, "x4", "x1") + basis_form(space, "x2", "x3"),
        basis_form(space, "x2", "x1") + basis_form(space, "x3", "x4"),
    )
    potentials = (
        DiffForm(space, 1, {(2,): x[0], (3,): x[1]}),
        DiffForm(space, 1, {(0,): x[3], (2,): x[1]}),
        DiffForm(space, 1, {(0,): x[1], (3,): x[2]}),
    )
    norm2 = x[0] ** 2 + x[1] ** 2 + x[2] ** 2 + x[3] ** 2
    half = Const(Fraction(1, 2))
    hamiltonians = (half * kk * by * norm2, half * kk * bx * norm2, half * kk * bz * norm2)
    data = HyperkahlerData(space, omegas, hamiltonians, potentials, orientation=-1)
    ext = build_hyperhamiltonian(data, name="pauli_spin", config=config)
    expected = VectorField(space, (
        kk * (-bz * x[1] + by * x[2] - bx * x[3]),
        kk * (bz * x[0] + bx * x[2] + by * x[3]),
        kk * (-by * x[0] - bx * x[1] + bz * x[3]),
        kk * (bx * x[0] - by * x[1] - bz * x[2]),
    ))
    match = fields_equal(ext.base.field, expected, config)
    if not match.value:
        raise CertificateError(
            "hyperhamiltonian sum does not reproduce the expected linear field; "
            "check the Hamiltonian/component pairing")
    ext.base.invariants = (from_normal(normal_form(norm2)),)
    ext.base.params = {"Bx": _bind(Bx), "By": _bind(By), "Bz": _bind(Bz), "kappa": _bind(kappa)}
    _check_invariants(ext.base, config)
    return ext


def build_hyperham_generic(config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> ExtendedSystem:
    """Bundled example with three distinct quadratic Hamiltonians."""
    space = Space("hyperham_generic", ("x1", "x2", "x3", "x4"))
    x = [Symbol(c) for c in space.coordinates]
    omegas = (
        basis_form(space, "x1", "x3") + basis_form(space, "x2", "x4"),
        basis_form(space, "x4", "x1") + basis_form(space, "x2", "x3"),
        basis_form(space, "x2", "x1") + basis_form(space, "x3", "x4"),
    )
    potentials = (
        DiffForm(space, 1, {(2,): x[0], (3,): x[1]}),
        DiffForm(space, 1, {(0,): x[3], (2,): x[1]}),
        DiffForm(space, 1, {(0,): x[1], (3,): x[2]}),
    )
    half = Const(Fraction(1, 2))
    hamiltonians = (half * (x[0] ** 2 + x[1] ** 2), x[0] * x[2], half * x[3] ** 2)
    data = HyperkahlerData(space, omegas, hamiltonians, potentials, orientation=-1)
    return build_hyperhamiltonian(data, name="hyperham_generic", config=config)


# --------------------------------------------------------------------------
# System files


_RAT = lambda v: str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def system_to_dict(sys: LiouvilleSystem) -> dict:
    data: dict = {
        "name": sys.name,
        "coordinates": list(sys.space.coordinates),
        "parameters": {p: (None if sys.params.get(p) is None else _RAT(sys.params[p]))
                       for p in sys.space.parameters},
        "vector_field": serialize_field(sys.field),
    }
    if sys.omega != volume_form(sys.space):
        data["volume"] = serialize_form(sys.omega)
    if sys.gamma is not None:
        data["gamma"] = serialize_form(sys.gamma)
    if sys.sigma is not None:
        data["sigma"] = serialize_form(sys.sigma)
    if sys.theta is not None:
        data["theta"] = serialize_form(sys.theta)
    if sys.space.metric is not None:
        data["metric"] = [_RAT(g) for g in sys.space.metric]
    data["invariants"] = [render(e) for e in sys.invariants]
    if sys.base_split is not None:
        k, verts = sys.base_split
        data["base_split"] = {"base_count": k, "verticals": list(verts)}
    return data


def save_system(sys: LiouvilleSystem, path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(sys), indent=2) + "\n", encoding="utf-8")


def system_from_dict(data: dict, config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> LiouvilleSystem:
    try:
        name = data["name"]
        coordinates = tuple(data["coordinates"])
        field_strings = data["vector_field"]
    except (KeyError, TypeError) as exc:
        raise SystemFileError(f"missing required field: {exc}") from exc
    raw_params = data.get("parameters", {})
    if not isinstance(raw_params, Mapping):
        raise SystemFileError("'parameters' must map names to rational strings or null")
    parameters = tuple(raw_params.keys())
    metric = None
    if "metric" in data:
        try:
            metric = tuple(parse_rational(s) for s in data["metric"])
        except (ExprError, ValueError) as exc:
            raise SystemFileError(f"bad metric entry: {exc}") from exc
    try:
        space = Space(name, coordinates, parameters, metric)
    except GeometryError as exc:
        raise SystemFileError(str(exc)) from exc
    try:
        params = {p: (None if v is None else parse_rational(v)) for p, v in raw_params.items()}
    except (ExprError, ValueError) as exc:
        raise SystemFileError(f"bad parameter value: {exc}") from exc
    n = space.dim
    try:
        field = deserialize_field(space, field_strings)
        omega = (deserialize_form(space, n, data["volume"])
                 if "volume" in data else volume_form(space))
        gamma = deserialize_form(space, n - 2, data["gamma"]) if "gamma" in data else None
        sigma = deserialize_form(space, n - 1, data["sigma"]) if "sigma" in data else None
        theta = None
        if "theta" in data:
            theta = deserialize_form(extended_space(space), n - 1, data["theta"])
        invariants = tuple(parse_expr(s, space.symbols) for s in data.get("invariants", []))
    except (ParseError, ExprError, GeometryError) as exc:
        raise SystemFileError(str(exc)) from exc
    base_split = None
    if "base_split" in data:
        bs = data["base_split"]
        try:
            base_split = (int(bs["base_count"]), tuple(bs["verticals"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SystemFileError(f"bad base_split: {exc}") from exc
    sys = LiouvilleSystem(name, space, field, omega=omega, gamma=gamma, sigma=sigma,
                          theta=theta, invariants=invariants, params=params,
                          base_split=base_split)
    validate_system(sys, config)
    return sys


def load_system(path, config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> LiouvilleSystem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SystemFileError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"invalid JSON in {path}: {exc}") from exc
    return system_from_dict(data, config)


# --------------------------------------------------------------------------
# Bundled examples


def bundled_systems(config: ZeroTestConfig = DEFAULT_ZERO_TEST) -> dict[str, LiouvilleSystem]:
    """One ready-to-save system per bundled example file."""
    ho1 = build_hamiltonian("1/2*q^2 + 1/2*p^2", 1, name="harmonic_oscillator_m1", config=config)
    ho2 = build_hamiltonian("1/2*q1^2 + 1/2*p1^2 + 1/2*q2^2 + 1/2*p2^2", 2,
                            name="harmonic_oscillator_m2", config=config)
    return {
        "euler_top": build_euler_top((1, 2, 3), config=config),
        "abc_flow": build_abc_flow(config=config),
        "abc_paper_verbatim": build_abc_flow_variant(),
        "charged_particle_constB": build_charged_particle(
            ("0", "0", "b"), parameters=("b",), name="charged_particle_constB", config=config),
        "free_particle": build_charged_particle(
            ("0", "0", "0"), name="free_particle", config=config),
        "pauli_spin": build_pauli_spin(config=config).base,
        "harmonic_oscillator_m1": ho1,
        "harmonic_oscillator_m2": ho2,
        "nambu_rotor": build_nambu(["1/2*x1^2 + 1/2*x2^2", "x3"],
                                   name="nambu_rotor", config=config),
        "hyperham_generic": build_hyperham_generic(config=config).base,
    }
