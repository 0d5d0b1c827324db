"""Noncooperative energy-efficiency power control game.

Each user maximizes utility = (info_bits/total_bits) * rate * f(SINR) / p,
where f(g) = (1 - exp(-g/2))**total_bits approximates the packet success
rate. The unconstrained best response drives the user SINR to the target
g* solving

    f'(g*) g* (1 - g*/chi) = f(g*),        chi = h_sp / h_si,

and the transmit power is the interference-balancing level clamped to
p_max. Synchronous best-response sweeps converge to the Nash equilibrium
of this game class regardless of update order, so the iteration here is
plain Jacobi from the noise-only starting point.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import InfeasibleError
from .params import NetworkParams
from .rake import GainSet, compute_gains, sinr_all

BISECTION_REL_TOL = 1e-12
DEFAULT_POWER_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class EfficiencyModel:
    """S-shaped packet success approximation f(g) = (1 - e^(-g/2))^M."""

    total_bits: int = 100

    def __post_init__(self):
        if self.total_bits < 2:
            raise ValueError("total_bits must be an integer >= 2")

    def efficiency(self, gamma):
        """Packet success probability at linear SINR gamma (in [0, 1])."""
        g = np.asarray(gamma, dtype=float)
        if np.any(g < 0.0):
            raise ValueError("SINR must be non-negative")
        out = (-np.expm1(-g / 2.0)) ** self.total_bits
        return float(out) if np.isscalar(gamma) else out

    def efficiency_slope(self, gamma):
        """Derivative of the packet success curve; zero at the origin."""
        g = np.asarray(gamma, dtype=float)
        base = -np.expm1(-g / 2.0)
        out = 0.5 * self.total_bits * base ** (self.total_bits - 1) * np.exp(-g / 2.0)
        return float(out) if np.isscalar(gamma) else out

    def gamma_star_inf(self) -> float:
        """Target SINR with no self-interference (chi = +inf)."""
        return _gamma_star_inf(self.total_bits)


def _target_equation_scaled(gamma: float, chi: float, total_bits: int) -> float:
    """Well-scaled residual of the target equation, positive left of the root.

    Dividing the defining equation by f(gamma) gives
    M * gamma * (1 - gamma/chi) / (2 (e^(gamma/2) - 1)) - 1, which avoids
    underflow of f at small gamma and tends to M - 1 > 0 at the origin.
    """
    factor = 1.0 if math.isinf(chi) else 1.0 - gamma / chi
    return total_bits * gamma * factor / (2.0 * math.expm1(gamma / 2.0)) - 1.0


def solve_target_sinr(chi: float, model: EfficiencyModel) -> float:
    """Positive root of f'(g) g (1 - g/chi) = f(g) inside (0, chi).

    Args:
        chi: signal-to-self-interference ratio h_sp/h_si, may be +inf.
        model: efficiency model supplying f.

    Returns:
        The target SINR, linear scale.

    Raises:
        InfeasibleError: if no root exists inside the bracket.
    """
    if chi <= 0.0:
        raise ValueError("chi must be positive (or +inf)")
    if math.isinf(chi):
        return model.gamma_star_inf()

    lo = 1e-12 * min(chi, 1.0)
    hi = chi * (1.0 - 1e-12)
    return _bisect_target(lo, hi, chi, model.total_bits)


@lru_cache(maxsize=None)
def _gamma_star_inf(total_bits: int) -> float:
    lo, hi = 1e-12, 1.0
    while _target_equation_scaled(hi, math.inf, total_bits) > 0.0:
        hi *= 2.0
        if hi > 1e9:  # pragma: no cover - cannot happen for M >= 2
            raise InfeasibleError("no finite interference-free target SINR")
    return _bisect_target(lo, hi, math.inf, total_bits)


def _bisect_target(lo: float, hi: float, chi: float, total_bits: int) -> float:
    f_lo = _target_equation_scaled(lo, chi, total_bits)
    f_hi = _target_equation_scaled(hi, chi, total_bits)
    if f_lo <= 0.0 or f_hi >= 0.0:
        raise InfeasibleError(
            f"target-SINR equation has no root in (0, {chi:g})")
    while hi - lo > BISECTION_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if _target_equation_scaled(mid, chi, total_bits) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EquilibriumResult:
    """Converged state of the best-response iteration.

    ``saturated`` flags users pinned at p_max; for every non-saturated user
    the equilibrium SINR matches ``targets`` to solver tolerance. Non
    convergence within the sweep budget is reported through ``converged``
    rather than an exception so that outage experiments can tally it.
    """

    powers: np.ndarray
    sinrs: np.ndarray
    utilities: np.ndarray
    targets: np.ndarray
    iterations: int
    converged: bool
    saturated: np.ndarray


def utility(user: int, powers: np.ndarray, gains: GainSet,
            params: NetworkParams, model: EfficiencyModel) -> float:
    """Bits-per-joule payoff of one user; defined as 0 at zero power."""
    p = float(powers[user])
    if p == 0.0:
        return 0.0
    g = sinr_all(gains, powers, params.noise_variance)[user]
    scale = params.info_bits / params.total_bits * params.rate
    return scale * model.efficiency(g) / p


def _utilities(powers, gains, params, model):
    scale = params.info_bits / params.total_bits * params.rate
    g = sinr_all(gains, powers, params.noise_variance)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(powers > 0.0, scale * model.efficiency(g) / powers, 0.0)
    return u


def _targets_and_slopes(gains: GainSet, model: EfficiencyModel):
    """Per-user target SINR and the power-update coefficient.

    Users whose target equation is infeasible get a NaN target and are
    treated as maximum-power transmitters by the sweep.
    """
    chi = gains.si_ratio()
    targets = np.empty(gains.users)
    coeff = np.empty(gains.users)
    for k in range(gains.users):
        try:
            t = solve_target_sinr(chi[k], model)
        except InfeasibleError:
            targets[k] = np.nan
            coeff[k] = np.inf
            continue
        targets[k] = t
        margin = 1.0 if np.isinf(chi[k]) else 1.0 - t / chi[k]
        coeff[k] = t / (gains.h_sp[k] * margin)
    return targets, coeff


def best_response_power(user: int, gains: GainSet, powers: np.ndarray,
                        noise_variance: float, p_max: float,
                        model: EfficiencyModel) -> float:
    """Utility-maximizing power of one user against fixed opponent powers."""
    chi = gains.si_ratio()[user]
    target = solve_target_sinr(chi, model)
    margin = 1.0 if np.isinf(chi) else 1.0 - target / chi
    interference = gains.h_mai[user] @ np.asarray(powers, dtype=float)
    interior = target * (interference + noise_variance) / (gains.h_sp[user] * margin)
    return min(interior, p_max)


def solve_equilibrium(gains: GainSet, params: NetworkParams,
                      model: EfficiencyModel, tol: float = DEFAULT_POWER_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> EquilibriumResult:
    """Synchronous best-response iteration on a precomputed gain set."""
    gamma_inf = model.gamma_star_inf()
    targets, coeff = _targets_and_slopes(gains, model)

    powers = np.minimum(params.noise_variance * gamma_inf / gains.h_sp,
                        params.p_max)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        interference = gains.h_mai @ powers
        interior = coeff * (interference + params.noise_variance)
        new_powers = np.minimum(interior, params.p_max)
        delta = np.max(np.abs(new_powers - powers) / new_powers)
        powers = new_powers
        if delta < tol:
            converged = True
            break

    saturated = powers >= params.p_max
    sinrs = sinr_all(gains, powers, params.noise_variance)
    return EquilibriumResult(
        powers=powers,
        sinrs=sinrs,
        utilities=_utilities(powers, gains, params, model),
        targets=targets,
        iterations=sweeps,
        converged=converged,
        saturated=saturated,
    )


def iterate_nash(channels, weights, params: NetworkParams,
                 model: EfficiencyModel, tol: float = DEFAULT_POWER_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> EquilibriumResult:
    """Compute gains for a cell and run best responses to the fixed point."""
    gains = compute_gains(channels, weights, params)
    return solve_equilibrium(gains, params, model, tol=tol, max_iter=max_iter)


def reduced_power(user: int, gains: GainSet, params: NetworkParams,
                  model: EfficiencyModel) -> float:
    """Closed-form equilibrium power, valid when the cell is feasible.

    p_k = (1/h_sp) * noise * g_inf / (1 - g_inf (chi^-1 + mai^-1)); accurate
    when the processing gain is large relative to the user count.

    Raises:
        InfeasibleError: when the feasibility margin is not positive.
    """
    gamma_inf = model.gamma_star_inf()
    chi_inv = 1.0 / gains.si_ratio()[user]
    mai_inv = gains.mai_ratio_inv()[user]
    margin = 1.0 - gamma_inf * (chi_inv + mai_inv)
    if margin <= 0.0:
        raise InfeasibleError(f"user {user} violates the equilibrium "
                              "existence condition")
    return params.noise_variance * gamma_inf / (gains.h_sp[user] * margin)


def feasibility_check(gains: GainSet, params: NetworkParams,
                      model: EfficiencyModel) -> np.ndarray:
    """Boolean per user: strict inequality g_inf (chi^-1 + mai^-1) < 1."""
    gamma_inf = model.gamma_star_inf()
    chi_inv = 1.0 / gains.si_ratio()
    mai_inv = gains.mai_ratio_inv()
    return gamma_inf * (chi_inv + mai_inv) < 1.0
