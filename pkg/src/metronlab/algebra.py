"""Exact finite-dimensional checks of the tensor/spinor algebra and the
coupling-constant calibration chain.

Spacetime metric: diag(1, 1, 1, -1).  Harmonic-space wavenumber vectors
carry their own diagonal signature; the harmonic mass is
omega_hat^2 = sum_A sign_A k_A^2.  All identities here are algebraic and
are verified to 1e-12 (entries are small integers over square roots, so
double precision is exact up to rounding).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ColorPlaneViolation,
    DivisionDegenerate,
    InvalidSignature,
    MetricMismatch,
    SingularVChoice,
    ValidationError,
)

__all__ = [
    "SPACETIME_METRIC",
    "GammaSet",
    "dirac_representation",
    "chiral_representation",
    "verify_gamma",
    "PolarizationModel",
    "minimal_noneuclidean",
    "minimal_euclidean",
    "extended_euclidean",
    "color_noneuclidean",
    "color_euclidean",
    "spinor_metric",
    "check_gauge_conditions",
    "kg_factorization",
    "quark_star",
    "electroweak_config",
    "mass_ratio",
    "find_mass_ratio_config",
    "quark_ew_wavenumbers",
    "gauge_correspondence",
    "calibrate_constants",
    "scale_ratio",
    "HarmonicWavenumber",
]

SPACETIME_METRIC = np.diag([1.0, 1.0, 1.0, -1.0])

_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class HarmonicWavenumber:
    """Wavenumber in the extra dimensions with a diagonal signature."""

    components: np.ndarray = field(repr=False)
    signature: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        s = np.asarray(self.signature, dtype=float)
        if c.shape != s.shape or c.ndim != 1:
            raise ValidationError("components and signature must match")
        if not np.all(np.abs(s) == 1.0):
            raise ValidationError("signature entries must be +-1")
        object.__setattr__(self, "components", c)
        object.__setattr__(self, "signature", s)

    def mass_sq(self):
        return float(np.sum(self.signature * self.components**2))

    def dot(self, other):
        return float(np.sum(self.signature * self.components * other.components))


@dataclass(frozen=True)
class GammaSet:
    """Four 4x4 matrices plus gamma5 for the metric diag(1,1,1,-1)."""

    gammas: tuple  # (g1, g2, g3, g4)
    gamma5: np.ndarray = field(repr=False)

    def __post_init__(self):
        gs = tuple(np.asarray(g, dtype=complex) for g in self.gammas)
        object.__setattr__(self, "gammas", gs)
        object.__setattr__(self, "gamma5", np.asarray(self.gamma5, dtype=complex))

    def slash(self, k):
        """gamma^lambda k_lambda with k given contravariantly."""
        k_cov = SPACETIME_METRIC @ np.asarray(k, dtype=float)
        return sum(g * kc for g, kc in zip(self.gammas, k_cov))


def dirac_representation() -> GammaSet:
    """Block-diagonal gamma^4; spatial matrices are Hermitian off-diagonal."""
    gs = [
        np.block([[np.zeros((2, 2)), -1j * s], [1j * s, np.zeros((2, 2))]])
        for s in _SIGMA
    ]
    g4 = -1j * np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
    gs.append(g4)
    g5 = 1j * gs[0] @ gs[1] @ gs[2] @ gs[3]
    return GammaSet(gammas=tuple(gs), gamma5=g5)


def chiral_representation() -> GammaSet:
    """Off-diagonal gamma^4; gamma5 is diagonal with -1, +1 blocks."""
    gs = [
        np.block([[np.zeros((2, 2)), -1j * s], [1j * s, np.zeros((2, 2))]])
        for s in _SIGMA
    ]
    eye2 = np.eye(2, dtype=complex)
    g4 = np.block([[np.zeros((2, 2)), 1j * eye2], [1j * eye2, np.zeros((2, 2))]])
    gs.append(g4)
    g5 = 1j * gs[0] @ gs[1] @ gs[2] @ gs[3]
    return GammaSet(gammas=tuple(gs), gamma5=g5)


def verify_gamma(gs: GammaSet):
    """Check the anticommutators, the Hermiticity pattern and the gamma5
    product identity; returns a report with the worst deviation per check."""
    eye = np.eye(4, dtype=complex)
    checks = []
    worst_anti = 0.0
    for lam in range(4):
        for mu in range(lam, 4):
            anti = gs.gammas[lam] @ gs.gammas[mu] + gs.gammas[mu] @ gs.gammas[lam]
            target = 2.0 * SPACETIME_METRIC[lam, mu] * eye
            worst_anti = max(worst_anti, float(np.max(np.abs(anti - target))))
    checks.append({"check_id": "gamma_anticommutation", "max_deviation": worst_anti})
    worst_herm = 0.0
    for i in range(3):
        worst_herm = max(
            worst_herm,
            float(np.max(np.abs(gs.gammas[i].conj().T - gs.gammas[i]))),
        )
    worst_herm = max(
        worst_herm, float(np.max(np.abs(gs.gammas[3].conj().T + gs.gammas[3])))
    )
    checks.append({"check_id": "gamma_hermiticity", "max_deviation": worst_herm})
    g5 = 1j * gs.gammas[0] @ gs.gammas[1] @ gs.gammas[2] @ gs.gammas[3]
    checks.append(
        {
            "check_id": "gamma5_product",
            "max_deviation": float(np.max(np.abs(g5 - gs.gamma5))),
        }
    )
    for c in checks:
        c["status"] = "pass" if c["max_deviation"] < 1e-12 else "fail"
    return {
        "checks": checks,
        "max_deviation": max(c["max_deviation"] for c in checks),
        "all_pass": all(c["status"] == "pass" for c in checks),
    }


# ---------------------------------------------------------------------------
# Polarization models: spinor <-> harmonic-tensor maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarizationModel:
    """Linear map from spinor components to a symmetric harmonic tensor.

    tensors[a] is the matrix multiplying spinor component a; eta is the
    diagonal harmonic metric; k the wavenumber; the declared spinor metric
    target is either ("dirac", omega_hat) for i*gamma4/omega_hat or
    ("euclidean", E) for I/E.
    """

    name: str
    eta: np.ndarray = field(repr=False)
    tensors: tuple = field(repr=False)
    k: np.ndarray = field(repr=False)
    target: tuple = ()

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        k = np.asarray(self.k, dtype=float)
        ts = tuple(np.asarray(t, dtype=float) for t in self.tensors)
        m = eta.shape[0]
        for t in ts:
            if t.shape != (m, m):
                raise ValidationError("polarization tensors must be m x m")
            if np.max(np.abs(t - t.T)) != 0.0:
                raise ValidationError("polarization tensors must be symmetric")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "tensors", ts)
        object.__setattr__(self, "k", k)


def _sym(m, i, j, val=1.0):
    out = np.zeros((m, m))
    out[i, j] = val
    out[j, i] = val
    return out


def minimal_noneuclidean(omega_hat, k5=None) -> PolarizationModel:
    """Four-dimensional model with signature (+3, -1), mass omega_hat > 0
    and wavenumber along the first harmonic axis."""
    if not omega_hat > 0:
        raise ValidationError("omega_hat must be positive")
    if k5 is None:
        k5 = omega_hat
    n = 1.0 / np.sqrt(2.0 * omega_hat)
    tensors = (
        n * (_sym(4, 1, 1) - _sym(4, 2, 2)),
        n * _sym(4, 1, 2),
        n * _sym(4, 1, 3),
        n * _sym(4, 2, 3),
    )
    return PolarizationModel(
        name="noneuclidean(+3,-1)",
        eta=np.diag([1.0, 1.0, 1.0, -1.0]),
        tensors=tensors,
        k=np.array([k5, 0.0, 0.0, 0.0]),
        target=("dirac", omega_hat),
    )


def minimal_euclidean(E, k5=1.0) -> PolarizationModel:
    """Four-dimensional Euclidean model (+4) with energy E > 0."""
    if not E > 0:
        raise ValidationError("E must be positive")
    n = 1.0 / np.sqrt(2.0 * E)
    tensors = (
        n * _sym(4, 1, 2),  # phi1^R
        n * _sym(4, 1, 3),  # phi2^R
        n * (_sym(4, 2, 2) - _sym(4, 3, 3)),  # phi1^L
        n * _sym(4, 2, 3),  # phi2^L
    )
    return PolarizationModel(
        name="euclidean(+4)",
        eta=np.diag([1.0, 1.0, 1.0, 1.0]),
        tensors=tensors,
        k=np.array([k5, 0.0, 0.0, 0.0]),
        target=("euclidean", E),
    )


def extended_euclidean(E, k5=1.0, k9=0.5, eta9=-1.0) -> PolarizationModel:
    """Five-dimensional extension (+4,-1) or (+5) of the Euclidean model:
    zero first and last tensor rows admit wavenumber components along both
    the first and fifth harmonic axes."""
    if not E > 0:
        raise ValidationError("E must be positive")
    n = 1.0 / np.sqrt(2.0 * E)
    tensors = (
        n * _sym(5, 1, 2),
        n * _sym(5, 1, 3),
        n * (_sym(5, 2, 2) - _sym(5, 3, 3)),
        n * _sym(5, 2, 3),
    )
    return PolarizationModel(
        name="extended(+4,-1)" if eta9 < 0 else "extended(+5)",
        eta=np.diag([1.0, 1.0, 1.0, 1.0, float(eta9)]),
        tensors=tensors,
        k=np.array([k5, 0.0, 0.0, 0.0, k9]),
        target=("euclidean", E),
    )


def color_noneuclidean(omega_hat, k7=None, k8=0.0) -> PolarizationModel:
    """Five-dimensional (+4,-1) model with the wavenumber confined to the
    color plane (third and fourth harmonic axes); the polarization tensor
    is color independent."""
    if not omega_hat > 0:
        raise ValidationError("omega_hat must be positive")
    if k7 is None:
        k7 = omega_hat
    n = 1.0 / np.sqrt(2.0 * omega_hat)
    tensors = (
        n * (_sym(5, 0, 0) - _sym(5, 1, 1)),
        n * _sym(5, 0, 1),
        n * _sym(5, 0, 4),
        n * _sym(5, 1, 4),
    )
    return PolarizationModel(
        name="color(+4,-1)",
        eta=np.diag([1.0, 1.0, 1.0, 1.0, -1.0]),
        tensors=tensors,
        k=np.array([0.0, 0.0, k7, k8, 0.0]),
        target=("dirac", omega_hat),
    )


def color_euclidean(E, k7=1.0, k8=0.0) -> PolarizationModel:
    """Five-dimensional (+5) model with a color-plane wavenumber."""
    if not E > 0:
        raise ValidationError("E must be positive")
    n = 1.0 / np.sqrt(2.0 * E)
    tensors = (
        n * _sym(5, 0, 1),
        n * _sym(5, 0, 4),
        n * (_sym(5, 1, 1) - _sym(5, 4, 4)),
        n * _sym(5, 1, 4),
    )
    return PolarizationModel(
        name="color(+5)",
        eta=np.eye(5),
        tensors=tensors,
        k=np.array([0.0, 0.0, k7, k8, 0.0]),
        target=("euclidean", E),
    )


def spinor_metric(model: PolarizationModel, check=True):
    """M^{ab} = (P^a_{AB})* P^{b,AB}, harmonic indices raised with eta.

    For the non-Euclidean ("dirac") family the result must equal
    i*gamma4/omega_hat = diag(1,1,-1,-1)/omega_hat; for the Euclidean
    family it must equal I/E.  MetricMismatch carries the deviating
    entries when the target fails by more than 1e-12.
    """
    eta = np.diag(model.eta) if model.eta.ndim == 1 else model.eta
    eta_d = np.diag(eta)
    m = len(model.tensors)
    M = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            raised = eta_d[:, None] * model.tensors[b] * eta_d[None, :]
            M[a, b] = float(np.sum(model.tensors[a] * raised))
    if check and model.target:
        kind, scale = model.target
        if kind == "dirac":
            want = np.diag([1.0, 1.0, -1.0, -1.0]) / scale
        else:
            want = np.eye(m) / scale
        dev = np.abs(M - want)
        if np.max(dev) > 1e-12:
            raise MetricMismatch(
                f"spinor metric deviates from its target by {np.max(dev):.3e}",
                deviations=dev,
            )
    return M


def check_gauge_conditions(model: PolarizationModel):
    """Trace condition eta^{AB} P^a_{AB} = 0 and divergence condition
    k_A P^{a,AB} = 0 for every spinor basis tensor; exact zeros expected."""
    eta_d = np.diag(model.eta) if model.eta.ndim == 2 else model.eta
    k = model.k
    worst_trace = 0.0
    worst_div = 0.0
    for t in model.tensors:
        worst_trace = max(worst_trace, abs(float(np.sum(eta_d * np.diag(t)))))
        raised = eta_d[:, None] * t * eta_d[None, :]
        worst_div = max(worst_div, float(np.max(np.abs(k @ raised))))
    checks = [
        {"check_id": "trace_condition", "max_deviation": worst_trace},
        {"check_id": "divergence_condition", "max_deviation": worst_div},
    ]
    for c in checks:
        c["status"] = "pass" if c["max_deviation"] < 1e-12 else "fail"
    return {
        "model": model.name,
        "checks": checks,
        "all_pass": all(c["status"] == "pass" for c in checks),
    }


def kg_factorization(k, omega_hat, gs: GammaSet):
    """Residual of (i gamma.k + w)(i gamma.k - w) = -(k.k + w^2) I."""
    k = np.asarray(k, dtype=float)
    slash = gs.slash(k)
    eye = np.eye(4, dtype=complex)
    prod = (1j * slash + omega_hat * eye) @ (1j * slash - omega_hat * eye)
    kk = float(k @ SPACETIME_METRIC @ k)
    target = -(kk + omega_hat**2) * eye
    return float(np.max(np.abs(prod - target)))


# ---------------------------------------------------------------------------
# Chromodynamic star
# ---------------------------------------------------------------------------

def quark_star(omega_hat_f, orientation_angle=0.0):
    """Symmetric three-vector star in the color plane and its constants.

    Returns the three color-plane wavenumbers at 120 degrees, the
    non-diagonal boson table with mass sqrt(3)*omega_hat_f, the covariant
    coupling constants C3 = omega_hat_f^2/2, A1 = 4, A2 = -2 (whose
    combination A1 + 2 A2 = 0 removes the net diagonal boson), and the
    couplings g3 = sqrt(C3), g3' = sqrt(6) g3.
    """
    if not omega_hat_f > 0:
        raise ValidationError("omega_hat_f must be positive")
    ks = []
    for p in range(3):
        ang = orientation_angle + 2.0 * np.pi * p / 3.0
        ks.append(omega_hat_f * np.array([np.cos(ang), np.sin(ang)]))
    ks = tuple(ks)
    C3 = 0.5 * omega_hat_f**2
    A1 = 2.0 * float(ks[0] @ ks[0]) / C3
    A2 = 2.0 * float(ks[0] @ ks[1]) / C3
    bosons = {}
    for p in range(3):
        for q in range(3):
            if p != q:
                kb = ks[p] - ks[q]
                bosons[(p, q)] = {
                    "k": kb,
                    "mass": float(np.sqrt(kb @ kb)),
                }
    g3 = float(np.sqrt(C3))
    return {
        "wavenumbers": ks,
        "sum": ks[0] + ks[1] + ks[2],
        "boson_mass": float(np.sqrt(3.0)) * omega_hat_f,
        "bosons": bosons,
        "C3": C3,
        "A1": A1,
        "A2": A2,
        "diagonal_sum_coefficient": A1 + 2.0 * A2,
        "g3": g3,
        "g3_prime": float(np.sqrt(6.0)) * g3,
        "omega_hat_f": omega_hat_f,
    }


# ---------------------------------------------------------------------------
# Electroweak configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ElectroweakConfig:
    k5_e: float
    k6_nu: float
    k9: float
    omega_e_sq: float
    omega_nu_sq: float
    kappa_sq: float
    C2: float
    g2: float
    Lambda_sq: float
    e_M: float
    higgs_v: float
    kappa_h_nu: float
    kappa_h_e: float
    m_w_sq: float
    m_z_sq: float

    @property
    def ratio(self):
        return float(np.sqrt(self.m_w_sq / self.m_z_sq))


def mass_ratio(omega_e_sq, omega_nu_sq, kappa_sq):
    """Charged-to-neutral boson mass ratio with the aligned scalar field:

        m_W / m_Z = (omega_nu^2 + kappa^2)
                    / (omega_nu * sqrt(omega_nu^2 + omega_e^2 + 2 kappa^2))

    obtained from the two square masses; continuous and equal to 1/sqrt(2)
    at omega_e = omega_nu, kappa = 0.
    """
    num = omega_nu_sq + kappa_sq
    den = np.sqrt(omega_nu_sq) * np.sqrt(omega_nu_sq + omega_e_sq + 2.0 * kappa_sq)
    return num / den


def electroweak_config(k5_e, k9, higgs_v=1.0) -> ElectroweakConfig:
    """Derived masses and couplings for the lepton-sector wavenumbers.

    The neutrino components mirror the electron ones (k6_nu = -k5_e,
    k9_nu = -k9); signature (+4, -1) gives omega_e^2 = k5^2 - k9^2,
    omega_nu^2 = k6^2 - k9^2 and kappa^2 = k9^2.  Requires k5^2 > 2 k9^2
    and a positive Lambda^2 = omega_e^2 omega_nu^2 - kappa^4.  The scalar
    (Higgs-like) field is aligned with the neutrino wavenumber, which
    makes the massive diagonal boson the neutral one exactly.
    """
    k5_e = float(k5_e)
    k9 = float(k9)
    if not k5_e**2 > 2.0 * k9**2:
        raise InvalidSignature("k5^2 must exceed 2 k9^2")
    k6_nu = -k5_e
    omega_e_sq = k5_e**2 - k9**2
    omega_nu_sq = k6_nu**2 - k9**2
    kappa_sq = k9**2
    Lambda_sq = omega_e_sq * omega_nu_sq - kappa_sq**2
    if not Lambda_sq > 0:
        raise InvalidSignature("Lambda^2 must be positive")
    C2 = 0.5 * (omega_e_sq + omega_nu_sq + 2.0 * kappa_sq)
    # aligned scalar: its wavenumber is the neutrino one
    kappa_h_nu = omega_nu_sq
    kappa_h_e = kappa_sq
    m_w_sq = higgs_v**2 * (kappa_h_nu + kappa_h_e) ** 2 / (2.0 * C2)
    m_z_sq = higgs_v**2 * kappa_h_nu**2 / omega_nu_sq
    return ElectroweakConfig(
        k5_e=k5_e,
        k6_nu=k6_nu,
        k9=k9,
        omega_e_sq=omega_e_sq,
        omega_nu_sq=omega_nu_sq,
        kappa_sq=kappa_sq,
        C2=C2,
        g2=float(np.sqrt(C2)),
        Lambda_sq=Lambda_sq,
        e_M=float(np.sqrt(Lambda_sq / omega_nu_sq)),
        higgs_v=higgs_v,
        kappa_h_nu=kappa_h_nu,
        kappa_h_e=kappa_h_e,
        m_w_sq=float(m_w_sq),
        m_z_sq=float(m_z_sq),
    )


def find_mass_ratio_config(target=0.87, k5_e=1.0):
    """Wavenumber pair reproducing a given m_W/m_Z with mirrored lepton
    wavenumbers (equal masses); root-find on x = kappa/omega_nu where the
    ratio is sqrt(1 + x^2)/sqrt(2)."""
    from scipy.optimize import brentq

    lo, hi = 1e-9, 1.0 - 1e-9  # x^2 = kappa^2/omega^2 below the signature bound

    def f(x):
        om_sq = 1.0
        kap = x * x * om_sq
        return float(mass_ratio(om_sq, om_sq, kap)) - target

    if f(lo) * f(hi) > 0:
        raise ValidationError(f"target ratio {target} not reachable with equal masses")
    x = brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
    # with omega_nu^2 = 1: k9 = x and k5^2 = 1 + x^2
    return electroweak_config(k5_e * np.sqrt(1.0 + x * x), k5_e * x)


def quark_ew_wavenumbers(k_e, k_nu, k_c):
    """Up/down wavenumbers from the lepton pair and a color vector.

    k_u = -(2/3) k_e + (1/3) k_nu + k_c and
    k_d =  (1/3) k_e - (2/3) k_nu + k_c, with k_c confined to the color
    plane (indices 2, 3 of the 5-vector).  Verifies the sum identity
    k_u + k_d = -(1/3)(k_nu + k_e) + 2 k_c, the electromagnetic charge
    pattern (+2/3, -1/3) from the photon-direction projection, and the
    1/3 ratio of the quark to lepton charged-current couplings.
    """
    k_e = np.asarray(k_e, dtype=float)
    k_nu = np.asarray(k_nu, dtype=float)
    k_c = np.asarray(k_c, dtype=float)
    if k_e.shape != (5,) or k_nu.shape != (5,) or k_c.shape != (5,):
        raise ValidationError("wavenumbers must be 5-vectors (k5, k6, k7, k8, k9)")
    if np.any(k_c[[0, 1, 4]] != 0.0):
        raise ColorPlaneViolation("k_c must lie in the color plane")
    k_u = -(2.0 / 3.0) * k_e + (1.0 / 3.0) * k_nu + k_c
    k_d = (1.0 / 3.0) * k_e - (2.0 / 3.0) * k_nu + k_c
    sum_identity = np.max(
        np.abs((k_u + k_d) - (-(1.0 / 3.0) * (k_nu + k_e) + 2.0 * k_c))
    )
    eta = np.array([1.0, 1.0, 1.0, 1.0, -1.0])

    def dot(a, b):
        return float(np.sum(eta * a * b))

    omega_nu_sq = dot(k_nu, k_nu)
    kappa_sq = dot(k_nu, k_e)
    omega_e_sq = dot(k_e, k_e)
    Lambda = np.sqrt(omega_e_sq * omega_nu_sq - kappa_sq**2)
    # photon direction in the electroweak sub-space
    k_A = (kappa_sq / (np.sqrt(omega_nu_sq) * Lambda)) * k_nu - (
        np.sqrt(omega_nu_sq) / Lambda
    ) * k_e
    e_M = Lambda / np.sqrt(omega_nu_sq)
    charges = {
        "electron": dot(k_e, k_A) / e_M,
        "neutrino": dot(k_nu, k_A) / e_M,
        "up": dot(k_u, k_A) / e_M,
        "down": dot(k_d, k_A) / e_M,
    }
    lepton_cc = dot(k_nu + k_e, k_nu + k_e)
    quark_cc = dot(k_u + k_d, k_nu + k_e)
    z_dir = k_nu / np.sqrt(omega_nu_sq)
    z_couplings = {
        "neutrino": dot(k_nu, z_dir),
        "electron": dot(k_e, z_dir),
        "up": dot(k_u, z_dir),
        "down": dot(k_d, z_dir),
    }
    return {
        "k_u": k_u,
        "k_d": k_d,
        "sum_identity_residual": float(sum_identity),
        "charges_in_e_M": charges,
        "w_coupling_ratio": quark_cc / lepton_cc,
        "z_couplings": z_couplings,
    }


def standard_model_z_couplings(g1, g2):
    """Weinberg-Salam neutral-current coefficients for comparison runs."""
    root = np.sqrt(g1 * g1 + g2 * g2)
    return {
        "neutrino": root / 2.0,
        "electron_L": (g1 * g1 - g2 * g2) / (2.0 * root),
        "electron_R": g1 * g1 / root,
    }


# ---------------------------------------------------------------------------
# Gauge correspondence: diffeomorphism vs color rotation parameters
# ---------------------------------------------------------------------------

def gauge_correspondence(star, eps3, eps8, v_diag=None):
    """Map the two diagonal color-rotation parameters onto the three
    diffeomorphism amplitudes.

    Non-diagonal sector: with direction vectors v_(pq) = k_p - k_q the
    calibration constant is C = 2 k_p.k_q = -omega_f^2.  Diagonal sector:
    the 3x3 system  k_p . (sum_q v_(qq) eps_qq) = rhs_p(eps3, eps8)  has
    rank 2 because the star wavenumbers sum to zero; the minimum-norm
    solution is returned together with the residual of the full system.
    SingularVChoice is raised when the diagonal direction vectors have
    parallel color-plane projections.
    """
    ks = star["wavenumbers"]
    w2 = star["omega_hat_f"] ** 2
    C = 2.0 * float(ks[0] @ ks[1])
    if v_diag is None:
        v_diag = (
            np.array([1.0, 0.0]),
            np.array([0.0, 1.0]),
            np.array([1.0, 1.0]) / np.sqrt(2.0),
        )
    v_diag = tuple(np.asarray(v, dtype=float) for v in v_diag)
    W = np.column_stack(v_diag)  # 2 x 3 color-plane projections
    if np.linalg.matrix_rank(W, tol=1e-12) < 2:
        raise SingularVChoice("diagonal direction vectors are collinear")
    K = np.array(ks)  # 3 x 2
    M = K @ W  # 3 x 3, rank 2 because sum_p k_p = 0
    rhs = 0.5 * np.array(
        [
            eps3 + eps8 / np.sqrt(3.0),
            -eps3 + eps8 / np.sqrt(3.0),
            -2.0 * eps8 / np.sqrt(3.0),
        ]
    )
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    residual = float(np.max(np.abs(M @ sol - rhs)))
    eps_map = {}
    for p in range(3):
        for q in range(3):
            if p != q:
                eps_map[(p, q)] = 1.0 / C  # eps_pq = eps_rho / C per unit eps_rho
    return {
        "C": C,
        "C_equals_minus_mass_sq": abs(C + w2),
        "eps_diagonal": sol,
        "residual": residual,
        "rank": int(np.linalg.matrix_rank(M, tol=1e-12)),
        "row_sum": float(np.max(np.abs(M.sum(axis=0)))),
        "nondiagonal_scale": eps_map,
    }


# ---------------------------------------------------------------------------
# Physical-constant calibration
# ---------------------------------------------------------------------------

def calibrate_constants(a_sq, beta, M, k5, G_prime):
    """Calibration chain from core integrals to physical constants:

        G = |a|^2 / 2,  e' = k5 |a|,  q = e' beta / (2G),  m = M / (2G),
        hbar = G'/G,  epsilon = (1/2) (M / (beta k5))^2.

    The loop identity G (m/q)^2 = epsilon closes algebraically.
    """
    if a_sq <= 0 or beta <= 0:
        raise DivisionDegenerate("a_sq and beta must be positive")
    G = a_sq / 2.0
    e_prime = k5 * np.sqrt(a_sq)
    q = e_prime * beta / (2.0 * G)
    m = M / (2.0 * G)
    hbar = G_prime / G
    epsilon = 0.5 * (M / (beta * k5)) ** 2
    return {
        "G": G,
        "e_prime": e_prime,
        "q": q,
        "m": m,
        "hbar": hbar,
        "epsilon_ratio": epsilon,
    }


def scale_ratio(epsilon):
    """Core-to-far-field length-scale ratio epsilon^(1/6) under the
    order-one amplitude assumption."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    return float(epsilon ** (1.0 / 6.0))
