"""Conserved and monitored functionals: energy, momentum, cavitation checks.

The Hamiltonian

    H(eta, v) = 1/2 int( eta^2 + kappa |grad eta|^2 + v (D/tanh D) v
                         + eta v^2 ) dx

(in 2D the third term is |K^-1 v|^2) is conserved by the unregularized flow
and dissipated by the viscous one.  The energy with cubic correction

    E_s(eta, v) = 1/2 ||eta, v||_w^2 + 1/2 int eta (J^{s-1/2} v)^2 dx

uses the weighted pair norm and reduces to the Hamiltonian at s = 1/2.
Quadratic terms are coefficient sums (exact by Parseval); cubic integrands
use dealiased products and plain grid quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    SpectralError,
    SymbolCatalog,
    _x_over_tanh,
    apply_multiplier,
    sobolev_norm,
    triple_quadrature,
)
from .state import Params, WaveState, weighted_pair_norm

#: Default small-data level for invariant-region experiments.  The proofs
#: only assert existence of such a level; this value is calibrated so the
#: reference runs pass with at least a 2x margin.
DEFAULT_SMALLNESS = 0.05

CSV_COLUMNS = (
    "time",
    "hamiltonian",
    "momentum",
    "modified_energy",
    "weighted_norm",
    "eta_min",
    "eta_max",
    "linf_v",
)


def hamiltonian(state: WaveState, params: Params) -> float:
    grid = state.grid
    kappa = params.kappa
    eta = state.eta
    quad = grid.quadrature(eta.values**2)
    for axis in range(grid.dim):
        d = apply_multiplier(SymbolCatalog.partial(axis), eta, axis=axis)
        quad += kappa * grid.quadrature(d.values**2)
    kinv2 = _x_over_tanh(grid.xi_norm)
    cubic = 0.0
    for comp in state.vel:
        quad += float(np.sum(kinv2 * np.abs(comp.coeffs) ** 2))
        cubic += triple_quadrature(eta, comp, comp)
    return 0.5 * (quad + cubic)


def momentum(state: WaveState, params: Params) -> float:
    """int eta (D/tanh D) v dx; defined in one dimension only."""
    if state.dim != 1:
        raise SpectralError("momentum is only defined for 1D states")
    grid = state.grid
    kinv2 = _x_over_tanh(grid.xi_norm)
    return float(np.real(np.sum(np.conj(state.eta.coeffs) * kinv2 * state.v.coeffs)))


def _cubic_modifier(state: WaveState, order) -> float:
    """int eta |J^order v|^2 dx with dealiased products."""
    bess = SymbolCatalog.bessel(order)
    total = 0.0
    for comp in state.vel:
        jv = apply_multiplier(bess, comp)
        total += triple_quadrature(state.eta, jv, jv)
    return total


def modified_energy(state: WaveState, params: Params) -> float:
    s = params.s
    wsq = weighted_pair_norm(state, s, params.kappa) ** 2
    return 0.5 * wsq + 0.5 * _cubic_modifier(state, s - 0.5)


def difference_energy(state1: WaveState, state2: WaveState, r, params: Params) -> float:
    """Energy of the difference (theta, w) = state1 - state2 at regularity r.

    kappa/2 ||theta||^2_{H^{r+1/2}} + 1/2 ||w||^2_{H^r}
    + 1/2 int eta_1 (J^{r-1/2} w)^2, with the elevation of the first state
    weighting the cubic term.
    """
    r = float(r)
    if not (0 < r <= params.s - 0.5):
        raise ValueError(f"difference energy needs 0 < r <= s - 1/2, got r={r}")
    if state1.grid != state2.grid:
        raise SpectralError("difference energy needs states on the same grid")
    theta = state1.eta - state2.eta
    total = params.kappa * sobolev_norm(theta, r + 0.5) ** 2
    bess = SymbolCatalog.bessel(r - 0.5)
    for c1, c2 in zip(state1.vel, state2.vel):
        w = c1 - c2
        total += sobolev_norm(w, r) ** 2
        jw = apply_multiplier(bess, w)
        total += triple_quadrature(state1.eta, jw, jw)
    return 0.5 * total


@dataclass(frozen=True)
class NoncavitationBounds:
    """Band h - 1 <= eta <= H keeping the surface off the flat bottom."""

    h: float
    Hupper: float

    def __post_init__(self):
        if not (0 < self.h <= 1):
            raise ValueError(f"h must lie in (0, 1], got {self.h}")
        if not (self.Hupper > 0):
            raise ValueError(f"Hupper must be positive, got {self.Hupper}")


@dataclass(frozen=True)
class NoncavitationResult:
    ok: bool
    eta_min: float
    eta_max: float
    argmin: tuple
    argmax: tuple
    lower: float
    upper: float


def check_noncavitation(state: WaveState, bounds: NoncavitationBounds) -> NoncavitationResult:
    values = state.eta.values
    imin = np.unravel_index(int(np.argmin(values)), values.shape)
    imax = np.unravel_index(int(np.argmax(values)), values.shape)
    grid = state.grid
    loc_min = tuple(float(np.broadcast_to(grid.x[j], grid.shape)[imin]) for j in range(grid.dim))
    loc_max = tuple(float(np.broadcast_to(grid.x[j], grid.shape)[imax]) for j in range(grid.dim))
    eta_min = float(values[imin])
    eta_max = float(values[imax])
    lower = bounds.h - 1.0
    ok = eta_min >= lower and eta_max <= bounds.Hupper
    return NoncavitationResult(ok, eta_min, eta_max, loc_min, loc_max, lower, bounds.Hupper)


def smallness_threshold(override=None) -> float:
    """The small-data level used by invariant-region experiments.

    The underlying level exists but is not constructive, so it is a
    configuration value; pass ``override`` to replace the calibrated
    default."""
    if override is None:
        return DEFAULT_SMALLNESS
    eps = float(override)
    if eps <= 0:
        raise ValueError(f"smallness threshold must be positive, got {override}")
    return eps


def coercivity_ratio(state: WaveState, params: Params) -> float:
    """Modified energy over half the squared weighted norm.

    Equals 1 whenever eta vanishes; stays within a fixed bracket under
    non-cavitation (the test suite uses [0.25, 4] for its state family).
    """
    wsq = weighted_pair_norm(state, params.s, params.kappa) ** 2
    if wsq == 0.0:
        raise ValueError("coercivity ratio is undefined for the zero state")
    return modified_energy(state, params) / (0.5 * wsq)


@dataclass(frozen=True)
class EnergyReport:
    """All monitored quantities at one time, serializable as one CSV row."""

    time: float
    hamiltonian: float
    momentum: float
    modified_energy: float
    weighted_norm: float
    eta_min: float
    eta_max: float
    linf_v: float

    @classmethod
    def measure(cls, state: WaveState, params: Params):
        mom = momentum(state, params) if state.dim == 1 else math.nan
        return cls(
            time=state.time,
            hamiltonian=hamiltonian(state, params),
            momentum=mom,
            modified_energy=modified_energy(state, params),
            weighted_norm=weighted_pair_norm(state, params.s, params.kappa),
            eta_min=float(np.min(state.eta.values)),
            eta_max=float(np.max(state.eta.values)),
            linf_v=state.speed_linf(),
        )

    def csv_row(self) -> str:
        vals = [getattr(self, name) for name in CSV_COLUMNS]
        return ",".join(format(v, ".17g") for v in vals)

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_COLUMNS)
