"""Hamiltonian pieces and nonlinearity models.

The linear part is H = -(1/2)Lap + V - Omega*Lz with the isotropic trap
V = (1/2) gamma^2 |x|^2 and Lz = i(x2 d/dx1 - x1 d/dx2).  Completing the
square with the rotation vector potential A = Omega*(-x2, x1, 0, ...)
gives the equivalent magnetic form with effective potential
V_e = (1/2)(gamma^2 - Omega^2)(x1^2 + x2^2) + (1/2) gamma^2 x3^2 + ...

Nonlinearities are of the form N(x, u) = G'(|u|^2) u.  Built-in variants:
a constant-coupling power law, the radially decaying inhomogeneous family
lam(x) = lam0 + (1 + |x|^2)^(-m/2), and a user-supplied G.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft

from .grid import GridSpec, WaveField, inner, integrate, spectral_derivative

MASS_CRITICAL_TOL = 1e-12


class ModelError(ValueError):
    """Parameter combination outside the supported regime."""


# --------------------------------------------------------------------------
# nonlinearity models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NonlinearityModel:
    """Base class; subclasses provide the coupling profile / G."""

    def coupling(self, grid: GridSpec) -> np.ndarray:
        """lam(x) sampled on the grid (power-law variants only)."""
        raise NotImplementedError

    @property
    def is_power_law(self) -> bool:
        return False


@dataclass(frozen=True)
class ConstantPower(NonlinearityModel):
    """N(u) = lam |u|^(p-1) u with constant lam >= 0 (lam = 0 is linear)."""

    lam: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ModelError(f"coupling must be >= 0, got {self.lam}")

    def coupling(self, grid: GridSpec) -> np.ndarray:
        return np.full(grid.points, self.lam)

    @property
    def is_power_law(self) -> bool:
        return True

    @property
    def lam_min(self) -> float:
        return self.lam

    @property
    def lam_max(self) -> float:
        return self.lam


@dataclass(frozen=True)
class InhomogeneousPower(NonlinearityModel):
    """N(x, u) = lam(x) |u|^(p-1) u with radial lam(x) = lam0 + (1+|x|^2)^(-m/2).

    The family satisfies the admissibility conditions required for the
    localized variance estimates: lam radial, 0 < lam_min <= lam <= lam_max,
    and x . grad lam <= 0.  A custom radial profile may be supplied instead
    and is sample-checked for the same conditions.
    """

    lam0: float = 1.0
    m: float = 2.0
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None  # lam(r)

    def __post_init__(self):
        if self.profile is None:
            if self.lam0 <= 0:
                raise ModelError("lam0 must be > 0")
            if self.m <= 0:
                raise ModelError("decay exponent m must be > 0")

    def radial_coupling(self, r: np.ndarray) -> np.ndarray:
        if self.profile is not None:
            return np.asarray(self.profile(r), dtype=float)
        return self.lam0 + (1.0 + r**2) ** (-self.m / 2.0)

    def coupling(self, grid: GridSpec) -> np.ndarray:
        return self.radial_coupling(np.sqrt(grid.radius_sq))

    @property
    def is_power_law(self) -> bool:
        return True

    @property
    def lam_min(self) -> float:
        # monotone decreasing profiles attain the inf at infinity
        if self.profile is not None:
            return float(self.radial_coupling(np.array([1e9]))[0])
        return self.lam0

    @property
    def lam_max(self) -> float:
        return float(self.radial_coupling(np.array([0.0]))[0])

    def check_admissible(self, grid: GridSpec, tol: float = 1e-10) -> None:
        """Sample-check radial admissibility on the grid's radius range."""
        r = np.linspace(0.0, float(np.sqrt(grid.radius_sq.max())), 4097)
        lam = self.radial_coupling(r)
        if not np.all(lam > 0):
            raise ModelError("coupling must be strictly positive")
        dr = r[1] - r[0]
        dlam = np.gradient(lam, dr)
        if np.max(r * dlam) > tol * max(1.0, np.max(np.abs(lam))):
            raise ModelError("coupling must satisfy x . grad lam <= 0 (radially non-increasing)")


@dataclass(frozen=True)
class GeneralG(NonlinearityModel):
    """N(u) = dG(|u|^2) u for a user-supplied G with growth bound.

    ``growth_C`` / ``growth_p`` parametrize the admissible envelope
    0 <= G(v) <= C (v + v^((p+1)/2)), sample-checked on a log grid.
    """

    G: Callable[[np.ndarray], np.ndarray] = field(repr=False, default=None)
    dG: Callable[[np.ndarray], np.ndarray] = field(repr=False, default=None)
    growth_C: float = 1.0
    growth_p: float = 3.0

    def __post_init__(self):
        if self.G is None or self.dG is None:
            raise ModelError("general model needs both G and dG callables")
        self.check_growth()

    def check_growth(self) -> None:
        v = np.logspace(-12, 6, 181)
        g = np.asarray(self.G(v), dtype=float)
        envelope = self.growth_C * (v + v ** ((self.growth_p + 1) / 2.0))
        if np.any(g < -1e-14) or np.any(g > envelope * (1 + 1e-9) + 1e-14):
            raise ModelError("G violates the declared growth envelope on sampled v")
        # derivative bound of the stronger hypothesis: sample-check only
        dg = np.asarray(self.dG(v), dtype=float)
        dv = self.growth_C * (1.0 + v ** ((self.growth_p - 1) / 2.0))
        if np.any(np.abs(dg) > 50.0 * dv + 1e-12):
            raise ModelError("dG far outside the declared derivative envelope")


# --------------------------------------------------------------------------
# physics parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicsParams:
    """Equation parameters: rotation Omega, trap gamma, power p, sign kappa."""

    n: int
    omega: float = 0.0
    gamma: float = 1.0
    p: float = 3.0
    kappa: int = 1
    nonlinearity: NonlinearityModel = field(default_factory=ConstantPower)

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ModelError(f"dimension must be 2 or 3, got {self.n}")
        if not self.gamma > 0:
            raise ModelError(f"gamma must be > 0, got {self.gamma}")
        if self.kappa not in (1, -1):
            raise ModelError(f"kappa must be +1 or -1, got {self.kappa}")
        p_max = np.inf if self.n == 2 else 1.0 + 4.0 / (self.n - 2)
        if not (1.0 <= self.p < p_max):
            raise ModelError(f"power p={self.p} outside energy-subcritical range for n={self.n}")

    @property
    def mass_critical(self) -> bool:
        return abs(self.p - (1.0 + 4.0 / self.n)) < MASS_CRITICAL_TOL

    @property
    def trap_period(self) -> float:
        return 2.0 * np.pi / self.gamma


# --------------------------------------------------------------------------
# sampled operator set
# --------------------------------------------------------------------------


class OperatorSet:
    """Grid-sampled multipliers for one (grid, params) pair.  Immutable."""

    def __init__(self, grid: GridSpec, params: PhysicsParams):
        if params.n != grid.n:
            raise ModelError("params dimension does not match grid")
        self.grid = grid
        self.params = params
        self.kinetic_multiplier = 0.5 * grid.k_sq
        self.potential = 0.5 * params.gamma**2 * grid.radius_sq
        x1, x2 = grid.coords[0], grid.coords[1]
        planar = x1**2 + x2**2
        self.effective_potential = 0.5 * (params.gamma**2 - params.omega**2) * planar + (
            0.5 * params.gamma**2 * (grid.radius_sq - planar)
        )
        nl = params.nonlinearity
        self.coupling = nl.coupling(grid) if nl.is_power_law else None
        if isinstance(nl, InhomogeneousPower):
            nl.check_admissible(grid)
        # rotation ADI multiplier bases in the mixed (k1,x2[,k3]) / (x1,k2) representations
        k1 = grid.wavenumbers[0]
        k2 = grid.wavenumbers[1]
        self.adi_a_base = 0.5 * k1**2 + params.omega * x2 * k1
        if grid.n == 3:
            self.adi_a_base = self.adi_a_base + 0.5 * grid.wavenumbers[2] ** 2
        self.adi_b_base = 0.5 * k2**2 - params.omega * x1 * k2

    # ---- pointwise nonlinearity --------------------------------------

    def coupling_times_density_power(self, density: np.ndarray) -> np.ndarray:
        """dG(|u|^2) sampled pointwise: lam(x) |u|^(p-1) for power models."""
        params = self.params
        nl = params.nonlinearity
        if nl.is_power_law:
            if params.p == 3.0:
                pw = density
            else:
                pw = density ** ((params.p - 1.0) / 2.0)
            return self.coupling * pw
        return np.asarray(nl.dG(density))

    def interaction_density(self, density: np.ndarray) -> np.ndarray:
        """G(|u|^2) pointwise; for power models (2 lam/(p+1)) |u|^(p+1)."""
        params = self.params
        nl = params.nonlinearity
        if nl.is_power_law:
            return (2.0 / (params.p + 1.0)) * self.coupling * density ** ((params.p + 1.0) / 2.0)
        return np.asarray(nl.G(density))


def apply_kinetic(field: WaveField) -> WaveField:
    """-(1/2) Lap u via the spectral multiplier |k|^2 / 2."""
    field.require_valid()
    grid = field.grid
    coeffs = sfft.fftn(field.values)
    coeffs *= 0.5 * grid.k_sq
    return WaveField(grid, sfft.ifftn(coeffs))


def apply_Lz(field: WaveField) -> WaveField:
    """Lz u = i (x2 du/dx1 - x1 du/dx2); annihilates radial fields."""
    field.require_valid()
    grid = field.grid
    if grid.n < 2:
        raise ModelError("Lz needs at least two dimensions")
    d1 = spectral_derivative(grid, field.values, 0)
    d2 = spectral_derivative(grid, field.values, 1)
    return WaveField(grid, 1j * (grid.coords[1] * d1 - grid.coords[0] * d2))


def apply_nonlinearity(field: WaveField, ops: OperatorSet) -> WaveField:
    """N(x, u) = dG(|u|^2) u; for power models lam(x) |u|^(p-1) u."""
    if ops.params.p < 1.0:
        raise ModelError("power below 1 not supported")
    density = np.abs(field.values) ** 2
    return WaveField(field.grid, ops.coupling_times_density_power(density) * field.values)


def apply_hamiltonian(field: WaveField, ops: OperatorSet) -> WaveField:
    """H u = -(1/2) Lap u + V u - Omega Lz u  (linear part only)."""
    out = apply_kinetic(field).values
    out += ops.potential * field.values
    if ops.params.omega != 0.0:
        out -= ops.params.omega * apply_Lz(field).values
    return WaveField(field.grid, out)


def angular_momentum_expectation(field: WaveField) -> float:
    """<Lz u, u>, real for any field (Lz is self-adjoint on the grid)."""
    val = inner(field.grid, apply_Lz(field).values, field.values)
    return float(val.real)


def magnetic_gradient_norm_sq(field: WaveField, omega: float) -> float:
    """integral |(grad - iA) u|^2 with A = Omega*(-x2, x1, 0, ...)."""
    grid = field.grid
    a = [-omega * grid.coords[1], omega * grid.coords[0]] + [0.0] * (grid.n - 2)
    total = 0.0
    for j in range(grid.n):
        dj = spectral_derivative(grid, field.values, j)
        cov = dj - 1j * a[j] * field.values
        total += float(np.real(integrate(grid, np.abs(cov) ** 2)))
    return total
