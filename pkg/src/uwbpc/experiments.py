"""Seeded Monte Carlo experiments and plot-ready result tables.

Every runner derives one generator per trial from (seed, trial index), so
results do not depend on execution order and rerunning a spec reproduces
its tables byte for byte. Tables are plain rows plus a metadata echo; no
plotting here.
"""

from dataclasses import dataclass, field, asdict
import io
import json
import math

import numpy as np

from . import lsa
from .channel import sample_cell
from .errors import InfeasibleError
from .game import EfficiencyModel, solve_equilibrium
from .params import NetworkParams
from .rake import GainSet, compute_gains, prake_weights
from .units import db_to_linear, linear_to_db

PO_CSV_COLUMNS = ("nf", "lambda_db", "po", "po_nonconverged", "trials",
                  "seed", "nf_min_pred")
UTILITY_CSV_COLUMNS = ("user", "distance_m", "channel_gain", "beta",
                       "p_watts", "sinr_db", "utility_sim", "utility_lsa",
                       "loss_db_pred", "saturated", "seed")
CURVES_CSV_COLUMNS = ("lambda_db", "beta", "alpha", "mu", "nu")
VALIDATE_CSV_COLUMNS = ("lambda_db", "beta", "alpha", "branch", "mu_pred",
                        "mu_mc", "mu_relerr", "nu_pred", "nu_mc",
                        "nu_relerr", "draws", "paths", "users", "seed")
EQUILIBRIUM_CSV_COLUMNS = ("user", "distance_m", "channel_gain", "p_watts",
                           "sinr_db", "target_sinr_db", "utility",
                           "saturated", "converged", "iterations", "seed")


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: network constants, trial budget, seed, and the sweep."""

    params: NetworkParams
    trials: int = 1000
    seed: int = 12345
    sweep_name: str = "frames"
    sweep_values: tuple = ()
    pdp_ratios_db: tuple = (0.0, 10.0, 20.0)
    loads: tuple = (0.25,)
    out: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.fmt not in ("csv", "jsonl"):
            raise ValueError("fmt must be 'csv' or 'jsonl'")
        if self.sweep_name == "frames":
            if any(int(v) != v or v < 1 for v in self.sweep_values):
                raise ValueError("frames sweep values must be positive integers")
        elif self.sweep_name == "rake_ratio":
            if any(not 0.0 < v <= 1.0 for v in self.sweep_values):
                raise ValueError("rake_ratio sweep values must lie in (0, 1]")
        else:
            raise ValueError(f"unknown sweep parameter {self.sweep_name!r}")


@dataclass
class ResultTable:
    """Columns, rows, and a flat metadata echo for the audit trail."""

    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)

    def _cell(self, value) -> str:
        if isinstance(value, (bool, np.bool_)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return repr(float(value))
        return str(value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.meta.items():
            buf.write(f"# {key} = {value}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(self._cell(v) for v in row) + "\n")
        return buf.getvalue()

    def to_jsonl(self) -> str:
        def clean(value):
            if isinstance(value, (bool, np.bool_)):
                return bool(value)
            if isinstance(value, (int, np.integer)):
                return int(value)
            if isinstance(value, (float, np.floating)):
                return float(value)
            return value

        lines = [json.dumps({"_meta": self.meta})]
        for row in self.rows:
            lines.append(json.dumps(
                {c: clean(v) for c, v in zip(self.columns, row)}))
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "jsonl":
            return self.to_jsonl()
        raise ValueError(f"unknown format {fmt!r}")


def trial_rng(seed: int, *indices: int) -> np.random.Generator:
    """Deterministic sub-generator for one trial (order independent)."""
    return np.random.default_rng([seed, *indices])


def _params_meta(params: NetworkParams) -> dict:
    meta = asdict(params)
    meta["pdp_ratio_db"] = float(linear_to_db(params.pdp_ratio))
    return meta


def _scaled_gains(gains: GainSet, n_old: int, n_new: int) -> GainSet:
    """Gains recomputed for a different processing gain.

    h_si and h_mai carry an exact 1/N factor while h_sp does not, so a
    frame sweep can reuse one gain computation per channel draw.
    """
    ratio = n_old / n_new
    return GainSet(h_sp=gains.h_sp, h_si=gains.h_si * ratio,
                   h_mai=gains.h_mai * ratio)


def run_po_vs_frames(spec: ExperimentSpec,
                     model: EfficiencyModel | None = None) -> ResultTable:
    """Saturation probability versus frame count, per profile ratio.

    Po is the fraction of trials whose equilibrium leaves at least one user
    at the power cap; trials that fail to converge inside the sweep budget
    are counted as saturated and also tallied separately. The predicted
    minimum frame count accompanies every row.
    """
    if spec.sweep_name != "frames":
        raise ValueError("run_po_vs_frames needs a 'frames' sweep")
    model = model or EfficiencyModel(total_bits=spec.params.total_bits)
    frames_list = [int(v) for v in spec.sweep_values]

    rows = []
    for lam_db in spec.pdp_ratios_db:
        params1 = NetworkParams(**{**asdict(spec.params),
                                   "pdp_ratio": float(db_to_linear(lam_db)),
                                   "frames": 1})
        nf_min = lsa.min_frames(params1, model)
        saturated_count = {nf: 0 for nf in frames_list}
        nonconv_count = {nf: 0 for nf in frames_list}
        for trial in range(spec.trials):
            rng = trial_rng(spec.seed, trial)
            channels = sample_cell(rng, params1)
            weights = [prake_weights(c, params1.rake_ratio) for c in channels]
            base = compute_gains(channels, weights, params1)
            for nf in frames_list:
                params_nf = params1.with_frames(nf)
                gains = _scaled_gains(base, params1.processing_gain,
                                      params_nf.processing_gain)
                result = solve_equilibrium(gains, params_nf, model)
                if not result.converged:
                    nonconv_count[nf] += 1
                    saturated_count[nf] += 1
                elif bool(np.any(result.saturated)):
                    saturated_count[nf] += 1
        for nf in frames_list:
            rows.append((nf, float(lam_db),
                         saturated_count[nf] / spec.trials,
                         nonconv_count[nf] / spec.trials,
                         spec.trials, spec.seed, nf_min))

    meta = _params_meta(spec.params)
    meta.update(seed=spec.seed, trials=spec.trials,
                experiment="po_vs_frames")
    return ResultTable(PO_CSV_COLUMNS, rows, meta)


def run_utility_vs_gain(spec: ExperimentSpec,
                        model: EfficiencyModel | None = None) -> ResultTable:
    """Single-realization equilibrium utilities with analytic overlays.

    One seeded channel draw; per finger ratio in the sweep, the simulated
    equilibrium utility of each user next to the large-system prediction.
    The overlay for partial-Rake rows is the all-Rake asymptote of that
    user divided by the predicted combining loss, so the same column works
    for every ratio (the loss is 1 at rake_ratio 1). Rows of an infeasible
    configuration carry NaN overlays.
    """
    if spec.sweep_name != "rake_ratio":
        raise ValueError("run_utility_vs_gain needs a 'rake_ratio' sweep")
    model = model or EfficiencyModel(total_bits=spec.params.total_bits)

    rng = trial_rng(spec.seed, 0)
    channels = sample_cell(rng, spec.params)
    arake_params = spec.params.with_rake_ratio(1.0)

    rows = []
    for beta in spec.sweep_values:
        params_b = spec.params.with_rake_ratio(float(beta))
        weights = [prake_weights(c, params_b.rake_ratio) for c in channels]
        gains = compute_gains(channels, weights, params_b)
        result = solve_equilibrium(gains, params_b, model)
        try:
            loss_lin = lsa.loss(arake_params, model, rake_ratio=float(beta))
            loss_pred_db = float(linear_to_db(loss_lin))
        except InfeasibleError:
            loss_lin = math.nan
            loss_pred_db = math.nan
        for user, chan in enumerate(channels):
            try:
                overlay = lsa.asymptotic_utility(chan.gain, arake_params,
                                                 model) / loss_lin
            except InfeasibleError:
                overlay = math.nan
            rows.append((user, chan.distance, chan.gain, float(beta),
                         float(result.powers[user]),
                         float(linear_to_db(result.sinrs[user])),
                         float(result.utilities[user]), overlay,
                         loss_pred_db, bool(result.saturated[user]),
                         spec.seed))

    meta = _params_meta(spec.params)
    meta.update(seed=spec.seed, trials=1, experiment="utility_vs_gain")
    return ResultTable(UTILITY_CSV_COLUMNS, rows, meta)


def emit_mu_nu_curves(pdp_ratios_db, rake_ratios, loads,
                      meta: dict | None = None) -> ResultTable:
    """Tabulate the interference coefficients on a grid for plotting."""
    rows = []
    for lam_db in pdp_ratios_db:
        lam = float(db_to_linear(lam_db))
        for alpha in loads:
            for beta in rake_ratios:
                rows.append((float(lam_db), float(beta), float(alpha),
                             lsa.mu(lam, beta), lsa.nu(lam, beta, alpha)))
    table_meta = {"experiment": "mu_nu_curves"}
    if meta:
        table_meta.update(meta)
    return ResultTable(CURVES_CSV_COLUMNS, rows, table_meta)


def run_equilibrium(params: NetworkParams, seed: int,
                    model: EfficiencyModel | None = None) -> ResultTable:
    """One seeded cell realization driven to its equilibrium."""
    model = model or EfficiencyModel(total_bits=params.total_bits)
    rng = trial_rng(seed, 0)
    channels = sample_cell(rng, params)
    weights = [prake_weights(c, params.rake_ratio) for c in channels]
    gains = compute_gains(channels, weights, params)
    result = solve_equilibrium(gains, params, model)

    rows = []
    for user, chan in enumerate(channels):
        target = result.targets[user]
        target_db = float(linear_to_db(target)) if np.isfinite(target) else math.nan
        rows.append((user, chan.distance, chan.gain,
                     float(result.powers[user]),
                     float(linear_to_db(result.sinrs[user])), target_db,
                     float(result.utilities[user]),
                     bool(result.saturated[user]), result.converged,
                     result.iterations, seed))
    meta = _params_meta(params)
    meta.update(seed=seed, experiment="equilibrium")
    return ResultTable(EQUILIBRIUM_CSV_COLUMNS, rows, meta)


def empirical_interference(params: NetworkParams, draws: int, seed: int,
                           *salt: int) -> tuple:
    """Monte Carlo means of the normalized interference ratios.

    Returns (mu_hat, nu_hat): the empirical means over draws and users of
    N * mai_ratio_inv / (K - 1) and N * si_ratio_inv, the quantities whose
    large-system limits are mu and nu.
    """
    mu_sum = 0.0
    nu_sum = 0.0
    count = 0
    for draw in range(draws):
        rng = trial_rng(seed, *salt, draw)
        channels = sample_cell(rng, params)
        weights = [prake_weights(c, params.rake_ratio) for c in channels]
        gains = compute_gains(channels, weights, params)
        n = params.processing_gain
        mu_sum += float(np.sum(n * gains.mai_ratio_inv() / (params.users - 1)))
        nu_sum += float(np.sum(n * (1.0 / gains.si_ratio())))
        count += params.users
    return mu_sum / count, nu_sum / count


def validate_lsa(points, params: NetworkParams, draws: int,
                 seed: int) -> ResultTable:
    """Check the closed forms against finite-size Monte Carlo estimates.

    Args:
        points: iterable of (lambda_db, beta, alpha) triples; alpha * paths
            must be a whole number of chips.
        params: template for users/paths and the game constants.
        draws: channel draws per point.
        seed: master seed.

    Returns:
        One row per point with predictions, estimates, and relative errors.
    """
    rows = []
    for index, (lam_db, beta, alpha) in enumerate(points):
        chips = alpha * params.paths
        if abs(chips - round(chips)) > 1e-9:
            raise ValueError(f"load {alpha} is not a whole number of chips "
                             f"at paths={params.paths}")
        point_params = NetworkParams(**{**asdict(params),
                                        "pdp_ratio": float(db_to_linear(lam_db)),
                                        "rake_ratio": float(beta),
                                        "chips": int(round(chips)),
                                        "frames": 1})
        mu_hat, nu_hat = empirical_interference(point_params, draws,
                                                seed, index)
        mu_pred = lsa.mu(point_params.pdp_ratio, beta)
        nu_pred = lsa.nu(point_params.pdp_ratio, beta, alpha)
        rows.append((float(lam_db), float(beta), float(alpha),
                     lsa.nu_branch(beta, alpha), mu_pred, mu_hat,
                     abs(mu_hat - mu_pred) / mu_pred, nu_pred, nu_hat,
                     abs(nu_hat - nu_pred) / nu_pred, draws, params.paths,
                     params.users, seed))

    meta = _params_meta(params)
    meta.update(seed=seed, draws=draws, experiment="validate_lsa")
    return ResultTable(VALIDATE_CSV_COLUMNS, rows, meta)
