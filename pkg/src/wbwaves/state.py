"""Wave states (eta, v), physical parameters, and the weighted pair norm."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Field, Grid, SpectralError, _x_over_tanh, low_pass

CURL_TOL = 1e-10


@dataclass(frozen=True)
class Params:
    """Physical and regularity parameters.

    kappa -- surface tension coefficient (>= 0)
    mu    -- artificial viscosity in [0, 1); 0 means the unregularized system
    p     -- smoothing power of the viscous term, in (1/2, 1]
    s     -- regularity index (>= 1/2) used by norms and energies
    """

    kappa: float = 1.0
    mu: float = 0.0
    p: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not (0 <= self.mu < 1):
            raise ValueError(f"mu must lie in [0, 1), got {self.mu}")
        if not (0.5 < self.p <= 1):
            raise ValueError(f"p must lie in (1/2, 1], got {self.p}")
        if not (self.s >= 0.5):
            raise ValueError(f"s must be >= 1/2, got {self.s}")


class WaveState:
    """Surface elevation plus velocity (one component in 1D, two in 2D).

    All fields share one grid.  Two-dimensional velocities must be curl
    free: the relative homogeneous-L2 curl residue is checked on
    construction against ``CURL_TOL``.
    """

    __slots__ = ("eta", "vel", "time")

    def __init__(self, eta: Field, vel, time=0.0):
        if isinstance(vel, Field):
            vel = (vel,)
        vel = tuple(vel)
        grid = eta.grid
        for comp in vel:
            if comp.grid != grid:
                raise SpectralError("state fields live on different grids")
        if len(vel) != grid.dim:
            raise SpectralError(
                f"velocity needs {grid.dim} component(s), got {len(vel)}"
            )
        if grid.dim == 2:
            res = curl_residue(vel)
            scale = 1.0 + math.sqrt(
                sum(float(np.sum(np.abs(c.coeffs) ** 2)) for c in vel)
            )
            if res > CURL_TOL * scale:
                raise SpectralError(
                    f"velocity is not curl free: residue {res:.3e} "
                    f"exceeds {CURL_TOL:.0e} * {scale:.3e}"
                )
        self.eta = eta
        self.vel = vel
        self.time = float(time)

    @property
    def grid(self) -> Grid:
        return self.eta.grid

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def v(self) -> Field:
        """The single velocity component of a 1D state."""
        if self.dim != 1:
            raise SpectralError("v is only defined for 1D states; use vel")
        return self.vel[0]

    @classmethod
    def zero(cls, grid: Grid, time=0.0):
        return cls(grid.zero_field(), tuple(grid.zero_field() for _ in range(grid.dim)), time)

    def speed_linf(self) -> float:
        """Max pointwise speed |v| (Euclidean magnitude in 2D)."""
        if self.dim == 1:
            return self.vel[0].linf()
        mag2 = self.vel[0].values ** 2 + self.vel[1].values ** 2
        return float(math.sqrt(np.max(mag2)))


def curl_residue(vel) -> float:
    """Homogeneous-L2 norm of d1 v2 - d2 v1 computed spectrally."""
    v1, v2 = vel
    grid = v1.grid
    xi1, xi2 = grid.xi
    d1 = np.where(grid.axis_nyquist(0), 0.0, xi1)
    d2 = np.where(grid.axis_nyquist(1), 0.0, xi2)
    curl = 1j * d1 * v2.coeffs - 1j * d2 * v1.coeffs
    return float(math.sqrt(np.sum(np.abs(curl) ** 2)))


def _weighted_sq_coeffs(grid: Grid, eta_c, vel_cs, s, kappa) -> float:
    """Squared weighted norm from raw coefficient arrays.

    kappa*|grad eta|^2 + |eta|^2 weighted by <xi>^(2s-1), plus the velocity
    measured through K^-1 (symbol sqrt(|xi|/tanh|xi|)) at the same weight.
    """
    a = grid.xi_norm
    bess = (1.0 + a * a) ** (s - 0.5)
    kinv2 = _x_over_tanh(a)
    eta2 = np.abs(eta_c) ** 2
    total = np.sum(bess * (1.0 + kappa * a * a) * eta2)
    for vc in vel_cs:
        total += np.sum(bess * kinv2 * np.abs(vc) ** 2)
    return float(total)


def weighted_pair_norm(state: WaveState, s, kappa) -> float:
    """Norm ||eta, v|| with kappa-weighted extra half derivative on eta.

    The square is kappa*||grad eta||^2_{H^{s-1/2}} + ||eta||^2_{H^{s-1/2}}
    + ||K^-1 v||^2_{H^{s-1/2}}, velocity components summed in 2D.
    """
    s = float(s)
    if s < 0.5:
        raise ValueError(f"weighted pair norm needs s >= 1/2, got {s}")
    sq = _weighted_sq_coeffs(
        state.grid, state.eta.coeffs, [c.coeffs for c in state.vel], s, float(kappa)
    )
    return math.sqrt(sq)


def mollify(state: WaveState, epsilon) -> WaveState:
    """Sharp low-pass regularization keeping modes |xi| <= 1/epsilon.

    Idempotent, never increases any coefficient-weighted norm, and
    converges to the identity as epsilon -> 0.
    """
    epsilon = float(epsilon)
    if not (0 < epsilon < 1):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    cutoff = 1.0 / epsilon
    return WaveState(
        low_pass(state.eta, cutoff),
        tuple(low_pass(c, cutoff) for c in state.vel),
        time=state.time,
    )
