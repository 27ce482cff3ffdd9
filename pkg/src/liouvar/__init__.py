"""Symbolic construction and verification of maximal-degree variational
principles for volume-preserving vector fields, with numeric flow
diagnostics and a verification CLI."""

__version__ = "0.1.0"

from .expr import (
    Const,
    Cos,
    DEFAULT_ZERO_TEST,
    ExprError,
    NormalForm,
    ParseError,
    Power,
    Rational,
    ScalarExpr,
    Sin,
    Symbol,
    UndeclaredSymbolError,
    ZeroResult,
    ZeroTestConfig,
    differentiate,
    evaluate,
    is_zero,
    normalize,
    parse_expr,
    render,
    substitute,
)
from .exterior import (
    CoordMap,
    DegreeError,
    DiffForm,
    GeometryError,
    MetricError,
    Space,
    SpaceMismatchError,
    VectorField,
    basis_form,
    constant_form,
    coordinate_vector,
    exterior_derivative,
    form_is_zero,
    hodge_star,
    interior_product,
    lie_derivative,
    pullback,
    serialize_field,
    serialize_form,
    volume_form,
    wedge,
    wedge_power,
)
from .liouville import (
    Certificate,
    CertificateError,
    CharacteristicDecomposition,
    ExtendedSystem,
    ImproperPrincipleError,
    LiouvilleError,
    LiouvilleSystem,
    NormalizationError,
    PotentialError,
    SystemInvariantError,
    annihilator_field,
    build_extended,
    characteristic_field,
    decompose_beta,
    default_sigma,
    hodge_check,
    is_liouville,
    is_proper,
    normalize_by_dt,
    psi_forms,
    rescale_to_exact,
    roundtrip_characteristic,
    section_residuals,
    solve_gamma,
    validate_system,
    verify_characteristic,
)
from .systems import (
    HyperkahlerData,
    SystemFileError,
    build_abc_flow,
    build_abc_flow_variant,
    build_charged_particle,
    build_euler_top,
    build_hamiltonian,
    build_hyperham_generic,
    build_hyperhamiltonian,
    build_nambu,
    build_pauli_spin,
    bundled_systems,
    curl3,
    load_system,
    save_system,
)
from .flow import (
    BlowupError,
    FlowDiagnostics,
    FlowError,
    SweepReport,
    Trajectory,
    integrate_rk4,
    invariant_drift,
    section_sweep,
    volume_diagnostic,
    write_trajectory_csv,
)
