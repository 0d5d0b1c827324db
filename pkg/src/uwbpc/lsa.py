"""Large-system closed forms for interference, utility, and combining loss.

With the tap count L and chips-per-frame Nc growing at fixed finger ratio
beta = P/L and load alpha = Nc/L, the per-user inverse interference ratios
converge almost surely:

    N * mai_ratio_inv / (K - 1)  ->  mu(pdp_ratio, beta)
    N * si_ratio_inv             ->  nu(pdp_ratio, beta, alpha)

``mu`` has a single closed form; ``nu`` is a five-branch piecewise
expression selected by the position of (alpha, beta) in the unit square.
Both are implemented verbatim from their published piecewise definitions.

KNOWN INCONSISTENCY: the fourth nu branch (max(beta, 1-beta) <= alpha <= 1,
off the alpha == beta line) disagrees with its neighboring branches at the
region boundaries and with independent quadrature and Monte Carlo oracles;
it can even turn negative. It appears to carry a typographical defect in
its source table. It is kept verbatim rather than silently repaired;
evaluating it raises :class:`FormulaInconsistencyWarning`, and the test
suite quantifies the discrepancy. The other four branches and all shipped
experiment defaults never touch it.

The flat-profile case pdp_ratio == 1 makes every expression 0/0; inputs
within FLAT_TOL of 1 are routed to the analytic limits. A thin band above
that threshold is evaluated in extended precision to suppress the
catastrophic cancellation the raw float64 expressions suffer near 1.

Everything here is in linear units; dB conversion belongs to the callers.
"""

import math
import warnings
from dataclasses import dataclass

import mpmath
from scipy.optimize import brentq

from .errors import FormulaInconsistencyWarning, InfeasibleError, UnattainableLossError
from .game import EfficiencyModel
from .params import NetworkParams

# |pdp_ratio - 1| below FLAT_TOL: analytic flat limits.
# Between FLAT_TOL and MP_BAND: extended-precision evaluation (the float64
# forms lose all significance from cancellation of O(1) terms down to
# O((pdp_ratio-1)^3)).
FLAT_TOL = 1e-6
MP_BAND = 1e-3
_MP_DPS = 50

BRANCH_NAMES = ("i", "ii", "iii", "iv", "v")


@dataclass(frozen=True)
class LsaPoint:
    """One large-system operating point (profile ratio, finger ratio, load)."""

    pdp_ratio: float
    rake_ratio: float
    load: float

    def __post_init__(self):
        if self.pdp_ratio < 1.0:
            raise ValueError("pdp_ratio must be >= 1")
        _check_domain(self.rake_ratio, self.load)

    @property
    def branch(self) -> str:
        return nu_branch(self.rake_ratio, self.load)

    def mu(self) -> float:
        return mu(self.pdp_ratio, self.rake_ratio)

    def nu(self) -> float:
        return nu(self.pdp_ratio, self.rake_ratio, self.load)


def nu_branch(rake_ratio: float, load: float) -> str:
    """Branch label of the nu table selected for (rake_ratio, load).

    Boundaries go to the earliest matching branch. Membership is unique off
    the boundaries; on them adjacent branches agree, except for the known
    fourth-branch defect.
    """
    _check_domain(rake_ratio, load)
    b, a = rake_ratio, load
    if 0.0 <= a <= min(b, 1.0 - b):
        return "i"
    if b <= a <= 1.0 - b and b <= 0.5:
        return "ii"
    if 1.0 - b <= a <= b and b >= 0.5:
        return "iii"
    if max(b, 1.0 - b) <= a <= 1.0:
        return "iv"
    return "v"


def _check_domain(rake_ratio, load):
    if not 0.0 < rake_ratio <= 1.0:
        raise ValueError("rake_ratio must lie in (0, 1]")
    if load <= 0.0:
        raise ValueError("load must be positive")


def mu(pdp_ratio: float, rake_ratio: float) -> float:
    """Large-system MAI coefficient.

    mu = (pdp_ratio - 1) * pdp_ratio^(rake_ratio - 1)
         / (pdp_ratio^rake_ratio - 1),
    continuously extended to 1/rake_ratio at a flat profile. Equals 1 for
    every profile when all fingers are kept, and decreases in both
    arguments.
    """
    if pdp_ratio < 1.0:
        raise ValueError("pdp_ratio must be >= 1")
    if not 0.0 < rake_ratio <= 1.0:
        raise ValueError("rake_ratio must lie in (0, 1]")
    if abs(pdp_ratio - 1.0) < FLAT_TOL:
        return 1.0 / rake_ratio
    # expm1/log1p form; the printed expression is exact but cancels near 1
    num = (pdp_ratio - 1.0) * pdp_ratio ** (rake_ratio - 1.0)
    return num / math.expm1(rake_ratio * math.log(pdp_ratio))


def mu_arake(pdp_ratio: float) -> float:
    """All-fingers limit of mu, identically 1."""
    if pdp_ratio < 1.0:
        raise ValueError("pdp_ratio must be >= 1")
    return 1.0


def _nu_branch_value(branch: str, lam, b: float, a: float):
    """One printed branch expression; ``lam`` may be float or mpmath.mpf."""
    log = mpmath.log if isinstance(lam, mpmath.mpf) else math.log
    lnl = log(lam)
    lb = lam ** b
    la = lam ** a
    if branch == "i":
        num = (lam * (la - 1) * (4 * lb**2 + 3 * la - 1)
               - 2 * lam ** (b + a) * (lb + 3 * lam - 1) * a * lnl)
        den = 2 * (lb - 1)**2 * a * lam ** (1 + a) * lnl
    elif branch == "ii":
        num = (lam * (4 * la - 1) * (lb**2 - 1)
               - 2 * lam ** (b + a) * (3 * lam * b - a + lb * a) * lnl)
        den = 2 * (lb - 1)**2 * a * lam ** (1 + a) * lnl
    elif branch == "iii":
        num = (-4 * lam ** (2 + 2 * b) - 4 * lam ** (2 + a)
               + lam ** (2 * (b + a)) + 4 * lam ** (2 + 2 * b + a)
               + 3 * lam ** (2 + 2 * a)
               - 2 * lam ** (1 + b + a) * (b + 3 * lam * a + lb * a - 1) * lnl)
        den = 2 * (lb - 1)**2 * a * lam ** (2 + a) * lnl
    elif branch == "iv":
        num = (-lam ** (2 + 2 * b) - 4 * lam ** (2 + a)
               + lam ** (2 * (b + a)) + 4 * lam ** (2 + 2 * b + a)
               - 2 * lam ** (1 + b + a) * (b + 3 * lam * a + lb * a - 1) * lnl)
        den = 2 * (lb - 1)**2 * a * lam ** (2 + a) * lnl
    elif branch == "v":
        num = (2 * lam * (lb**2 - 1)
               - (lb + b + 3 * lam * b - 1) * lb * lnl)
        den = (lb - 1)**2 * a * lam * lnl
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return num / den


def _nu_flat(branch: str, b: float, a: float) -> float:
    """Flat-profile limits of the printed branches.

    The fourth branch has no finite limit off the alpha == beta line (one
    more symptom of its defect), so it raises instead.
    """
    if branch == "i":
        return (a * a / 2.0 - 2.0 * a * b + b * b + b) / (b * b)
    if branch == "ii":
        return 1.0 / b - 0.5 - a / (2.0 * b) + b / (2.0 * a)
    if branch == "iii":
        return (4 * a**3 - 9 * a**2 * b - 3 * a**2 + 9 * a * b**2 + 3 * a
                + b**3 - 3 * b**2 + 3 * b - 1) / (6 * a * b**2)
    if branch == "v":
        return (4 * b * b - 3 * b + 3) / (6 * a * b)
    raise ValueError(
        "the fourth branch of the self-interference closed form diverges "
        "for a flat profile; its printed expression is inconsistent "
        "(see the package README)")


def _warn_branch_iv():
    warnings.warn(
        "evaluating the fourth branch of the self-interference closed form "
        "(max(beta, 1-beta) <= alpha <= 1): its printed expression is "
        "inconsistent with adjacent branches and with simulation, and is "
        "kept verbatim; do not trust values in this region",
        FormulaInconsistencyWarning, stacklevel=3)


def nu(pdp_ratio: float, rake_ratio: float, load: float,
       branch: str | None = None) -> float:
    """Large-system self-interference coefficient (five-branch closed form).

    Args:
        pdp_ratio: profile decay ratio, linear, >= 1 (1 means flat).
        rake_ratio: finger fraction beta in (0, 1].
        load: chips-to-paths ratio alpha > 0.
        branch: force a specific branch ("i".."v") instead of selecting by
            region; used by boundary-agreement tests.

    Returns:
        The branch value. See the module notes for the fourth-branch caveat.
    """
    if pdp_ratio < 1.0:
        raise ValueError("pdp_ratio must be >= 1")
    _check_domain(rake_ratio, load)
    selected = branch if branch is not None else nu_branch(rake_ratio, load)
    if selected not in BRANCH_NAMES:
        raise ValueError(f"unknown branch {selected!r}")
    if selected == "iv":
        _warn_branch_iv()
    if abs(pdp_ratio - 1.0) < FLAT_TOL:
        return _nu_flat(selected, rake_ratio, load)
    if abs(pdp_ratio - 1.0) < MP_BAND:
        with mpmath.workdps(_MP_DPS):
            return float(_nu_branch_value(selected, mpmath.mpf(pdp_ratio),
                                          rake_ratio, load))
    return _nu_branch_value(selected, pdp_ratio, rake_ratio, load)


def nu_arake(pdp_ratio: float, load: float) -> float:
    """All-fingers limit of nu (two branches in the load)."""
    if pdp_ratio < 1.0:
        raise ValueError("pdp_ratio must be >= 1")
    if load <= 0.0:
        raise ValueError("load must be positive")
    lam, a = pdp_ratio, load
    if abs(lam - 1.0) < FLAT_TOL:
        if a <= 1.0:
            return 2.0 * (a * a - 3.0 * a + 3.0) / 3.0
        return 2.0 / (3.0 * a)
    if abs(lam - 1.0) < MP_BAND:
        with mpmath.workdps(_MP_DPS):
            return float(_nu_arake_value(mpmath.mpf(lam), a))
    return _nu_arake_value(lam, a)


def _nu_arake_value(lam, a):
    log = mpmath.log if isinstance(lam, mpmath.mpf) else math.log
    lnl = log(lam)
    if a <= 1.0:
        num = 2 * (lam**2 - 1 + lam**a - lam ** (2 - a) - 2 * lam * a * lnl)
    else:
        num = 2 * (lam**2 - 1 - 2 * lam * lnl)
    return num / ((lam - 1)**2 * a * lnl)


def interference_bracket(params: NetworkParams, model: EfficiencyModel,
                         rake_ratio: float | None = None) -> float:
    """Feasibility margin 1 - g_inf [(K-1) mu + nu] / N for the given ratio."""
    beta = params.rake_ratio if rake_ratio is None else rake_ratio
    gamma_inf = model.gamma_star_inf()
    combined = ((params.users - 1) * mu(params.pdp_ratio, beta)
                + nu(params.pdp_ratio, beta, params.load))
    return 1.0 - gamma_inf * combined / params.processing_gain


def asymptotic_utility(h_sp: float, params: NetworkParams,
                       model: EfficiencyModel) -> float:
    """Large-system equilibrium utility of a user with signal gain h_sp.

    u = h_sp * (info/total) * rate * f(g_inf) / (noise * g_inf)
        * (1 - g_inf [(K-1) mu + nu] / N)

    Linear in h_sp and independent of the other users' realizations.

    Raises:
        InfeasibleError: if the bracket is not positive (the cell cannot
            reach the equilibrium simultaneously).
    """
    if h_sp <= 0.0:
        raise ValueError("h_sp must be positive")
    bracket = interference_bracket(params, model)
    if bracket <= 0.0:
        raise InfeasibleError("large-system feasibility bracket is not positive")
    gamma_inf = model.gamma_star_inf()
    scale = params.info_bits / params.total_bits * params.rate
    single_user = scale * model.efficiency(gamma_inf) / (
        params.noise_variance * gamma_inf)
    return h_sp * single_user * bracket


def min_frames(params: NetworkParams, model: EfficiencyModel) -> int:
    """Smallest frame count allowing all users to reach their targets.

    frames >= ceil( g_inf [(K-1) mu + nu] / chips ); nu depends on the load
    chips/paths only, so no self-consistency iteration is needed.
    """
    gamma_inf = model.gamma_star_inf()
    combined = ((params.users - 1) * mu(params.pdp_ratio, params.rake_ratio)
                + nu(params.pdp_ratio, params.rake_ratio, params.load))
    return int(math.ceil(gamma_inf * combined / params.chips))


def loss(params: NetworkParams, model: EfficiencyModel,
         rake_ratio: float | None = None) -> float:
    """Utility loss of the partial Rake relative to the all-Rake, linear.

    loss = mu * (N - g_inf [(K-1) + nu_arake])
              / (N - g_inf [(K-1) mu + nu])

    The leading mu factor is the large-system ratio of all-Rake to
    partial-Rake signal gains. Returns 1 when all fingers are kept.

    Raises:
        InfeasibleError: if either configuration has a non-positive bracket.
    """
    beta = params.rake_ratio if rake_ratio is None else rake_ratio
    gamma_inf = model.gamma_star_inf()
    n = params.processing_gain
    users = params.users
    mu_p = mu(params.pdp_ratio, beta)
    nu_p = nu(params.pdp_ratio, beta, params.load)
    nu_a = nu_arake(params.pdp_ratio, params.load)
    num = n - gamma_inf * ((users - 1) * mu_arake(params.pdp_ratio) + nu_a)
    den = n - gamma_inf * ((users - 1) * mu_p + nu_p)
    if num <= 0.0 or den <= 0.0:
        raise InfeasibleError("combining-loss brackets are not positive")
    return mu_p * num / den


def loss_db(params: NetworkParams, model: EfficiencyModel,
            rake_ratio: float | None = None) -> float:
    return 10.0 * math.log10(loss(params, model, rake_ratio))


def invert_loss(target_loss_db: float, params: NetworkParams,
                model: EfficiencyModel) -> float:
    """Finger ratio achieving a requested combining loss.

    Args:
        target_loss_db: desired all-Rake-to-partial-Rake utility loss in dB,
            >= 0 and at most the loss of the single-finger receiver.
        params: network constants; ``params.rake_ratio`` is ignored.
        model: efficiency model.

    Returns:
        beta in [1/paths, 1] with |loss(beta) - target| < 1e-6 dB.

    Raises:
        UnattainableLossError: target outside the achievable range.
    """
    if target_loss_db < 0.0:
        raise UnattainableLossError("loss targets below 0 dB are unattainable")
    if target_loss_db == 0.0:
        return 1.0

    beta_min = 1.0 / params.paths
    max_loss_db = loss_db(params, model, beta_min)
    if target_loss_db > max_loss_db:
        raise UnattainableLossError(
            f"target {target_loss_db:g} dB exceeds the achievable range "
            f"[0, {max_loss_db:.4f}] dB at these parameters")

    def objective(beta):
        return loss_db(params, model, beta) - target_loss_db

    lo, hi = beta_min, 1.0
    # the loss is decreasing in beta over the feasible range; verify on a
    # coarse grid and fall back to a scan for the first sign change if not
    grid = [lo + (hi - lo) * i / 32 for i in range(33)]
    values = [objective(b) for b in grid]
    monotone = all(values[i] >= values[i + 1] - 1e-12 for i in range(32))
    if not monotone:
        for i in range(32):
            if values[i] >= 0.0 >= values[i + 1]:
                lo, hi = grid[i], grid[i + 1]
                break
    beta = brentq(objective, lo, hi, xtol=1e-12, rtol=8.9e-16)
    if abs(objective(beta)) > 1e-6:
        raise UnattainableLossError(
            f"root refinement failed to reach the {target_loss_db:g} dB target")
    return float(beta)
