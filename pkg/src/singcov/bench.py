r"""Experiment runner, spectrum reports, and verification suites.

A JSON config fixes the ground-truth Toeplitz family, the estimator
set, the parameter grids, the Monte Carlo budget, the trial count and
the seed. ``run_experiment`` replays it into per-trial Frobenius error
rows plus aggregated means; with the same config the emitted CSV files
are byte identical, which the acceptance tests rely on. ``verify``
hosts the oracle-equivalence suites used both from pytest and from the
command line.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ewens as ew
from . import haar
from . import toeplitz as tp
from .linalg import (
    RandomSource,
    block_pinv_update,
    esd,
    frobenius_norm,
    hermitize,
    pseudoinverse,
    sample_gaussian_covariance,
    save_density_csv,
    save_esd_csv,
)

__all__ = [
    "ExperimentConfig",
    "MetricRow",
    "MetricReport",
    "run_experiment",
    "spectrum_report",
    "VerifyCheck",
    "VerifyReport",
    "verify",
    "VERIFY_SUITES",
]

ESTIMATORS = (
    "truth",
    "sample",
    "loading",
    "covp",
    "invcovp",
    "ewens",
    "hybrid",
    "hybrid_inverse",
)

_NEEDS_THETA = {"ewens", "hybrid", "hybrid_inverse"}
_NEEDS_P = {"covp", "invcovp", "hybrid", "hybrid_inverse"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (mirrors the JSON schema)."""

    m: int
    n: int
    truth_kind: str
    truth_param: float
    estimators: tuple
    theta_grid: tuple = ()
    p_grid: tuple = ()
    loading_grid: tuple = ()
    mc_samples: int = 2000
    seed: int = 0
    trials: int = 10

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mc_samples < 2:
            raise ValueError("mc_samples must be >= 2")
        tp.toeplitz_truth(self.truth_kind, self.m, self.truth_param)  # validates
        if not self.estimators:
            raise ValueError("estimators must be a nonempty list")
        for name in self.estimators:
            if name not in ESTIMATORS:
                raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
        used = set(self.estimators)
        if used & _NEEDS_THETA and not self.theta_grid:
            raise ValueError("theta_grid must be nonempty for the selected estimators")
        if used & _NEEDS_P and not self.p_grid:
            raise ValueError("p_grid must be nonempty for the selected estimators")
        if "loading" in used and not self.loading_grid:
            raise ValueError("loading_grid must be nonempty for the 'loading' estimator")
        if any(t <= 0 or not math.isfinite(t) for t in self.theta_grid):
            raise ValueError("theta_grid entries must be positive and finite")
        if any(not (1 <= p <= self.m) for p in self.p_grid):
            raise ValueError(f"p_grid entries must lie in [1, {self.m}]")
        for pair in self.loading_grid:
            haar.LoadingParameters(*pair)  # validates

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        truth = doc.pop("truth", None)
        if not isinstance(truth, dict):
            raise ValueError("config requires a 'truth' object")
        truth = dict(truth)
        kind = truth.pop("kind", None)
        if kind == "tridiagonal":
            param = truth.pop("b", None)
        elif kind == "power":
            param = truth.pop("alpha", None)
        else:
            raise ValueError("truth.kind must be 'tridiagonal' or 'power'")
        if param is None:
            raise ValueError("truth lacks its family parameter ('b' or 'alpha')")
        if truth:
            raise ValueError(f"unknown truth keys: {sorted(truth)}")
        known = {
            "m",
            "n",
            "estimators",
            "theta_grid",
            "p_grid",
            "loading_grid",
            "mc_samples",
            "seed",
            "trials",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "m" not in doc or "n" not in doc:
            raise ValueError("config requires 'm' and 'n'")
        return ExperimentConfig(
            m=int(doc["m"]),
            n=int(doc["n"]),
            truth_kind=kind,
            truth_param=float(param),
            estimators=tuple(doc.get("estimators", ("sample",))),
            theta_grid=tuple(float(t) for t in doc.get("theta_grid", ())),
            p_grid=tuple(int(p) for p in doc.get("p_grid", ())),
            loading_grid=tuple(
                (float(a), float(b)) for a, b in doc.get("loading_grid", ())
            ),
            mc_samples=int(doc.get("mc_samples", 2000)),
            seed=int(doc.get("seed", 0)),
            trials=int(doc.get("trials", 10)),
        )

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config {path!r} is not valid JSON: {exc}") from exc
        return ExperimentConfig.from_dict(doc)

    def to_dict(self) -> dict:
        truth = {"kind": self.truth_kind}
        truth["b" if self.truth_kind == "tridiagonal" else "alpha"] = self.truth_param
        return {
            "m": self.m,
            "n": self.n,
            "truth": truth,
            "estimators": list(self.estimators),
            "theta_grid": list(self.theta_grid),
            "p_grid": list(self.p_grid),
            "loading_grid": [list(p) for p in self.loading_grid],
            "mc_samples": self.mc_samples,
            "seed": self.seed,
            "trials": self.trials,
        }


@dataclass
class MetricRow:
    """One (estimator, parameter, metric) cell with its per-trial values."""

    estimator: str
    parameter: str
    metric: str
    values: list = field(default_factory=list)
    valid: bool = True
    reason: str = ""

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else float("nan")

    @property
    def std(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1))


_FMT = "%.17g"


@dataclass
class MetricReport:
    config: ExperimentConfig
    rows: list

    def row(self, estimator, parameter, metric) -> MetricRow:
        for r in self.rows:
            if (r.estimator, r.parameter, r.metric) == (estimator, parameter, metric):
                return r
        raise KeyError((estimator, parameter, metric))

    def write(self, outdir):
        os.makedirs(outdir, exist_ok=True)
        raw = os.path.join(outdir, "metrics_raw.csv")
        agg = os.path.join(outdir, "metrics_mean.csv")
        cfg = os.path.join(outdir, "config.json")
        with open(raw, "w", newline="") as fh:
            fh.write("estimator,parameter,metric,trial,value\n")
            for r in self.rows:
                if not r.valid:
                    continue
                for t, v in enumerate(r.values):
                    fh.write(
                        f"{r.estimator},{r.parameter},{r.metric},{t}," + _FMT % v + "\n"
                    )
        with open(agg, "w", newline="") as fh:
            fh.write("estimator,parameter,metric,trials,mean,std,valid,reason\n")
            for r in self.rows:
                if r.valid:
                    fh.write(
                        f"{r.estimator},{r.parameter},{r.metric},{len(r.values)},"
                        + _FMT % r.mean
                        + ","
                        + _FMT % r.std
                        + ",true,\n"
                    )
                else:
                    fh.write(
                        f"{r.estimator},{r.parameter},{r.metric},0,,,false,{r.reason}\n"
                    )
        with open(cfg, "w") as fh:
            json.dump(self.config.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return raw, agg, cfg


def _truth_matrices(config: ExperimentConfig):
    family = tp.toeplitz_truth(config.truth_kind, config.m, config.truth_param)
    a = family.matrix()
    if isinstance(family, tp.PowerToeplitz):
        a_inv = family.inverse()
    else:
        dec = family.eigensystem()
        a_inv = hermitize(
            dec.eigenvectors @ np.diag(1.0 / dec.eigenvalues) @ dec.eigenvectors.conj().T
        )
    return family, a, a_inv


def _numeric_rank(k) -> int:
    w = np.linalg.eigvalsh(k)
    tol = k.shape[0] * np.finfo(float).eps * max(1e-300, float(np.abs(w).max()))
    return int((w > tol).sum())


def _trial_errors(config: ExperimentConfig, trial: int, plan, a, a_inv):
    """All metric values of one trial, keyed like the report rows."""
    base = RandomSource(config.seed).substream(trial)
    k = sample_gaussian_covariance(a, config.n, base.substream(0))
    rank = _numeric_rank(k)
    out = {}
    for jobid, (est, parameter, metric) in enumerate(plan):
        rng = base.substream(jobid + 1)
        key = (est, parameter, metric)
        if est == "truth":
            out[key] = 0.0
        elif est == "sample":
            out[key] = frobenius_norm(a - k)
        elif est == "loading":
            best = min(
                frobenius_norm(a - haar.diagonal_loading(k, haar.LoadingParameters(al, be)))
                for al, be in config.loading_grid
            )
            out[key] = best
        elif est == "covp":
            p = int(parameter.split("=")[1])
            out[key] = frobenius_norm(a - haar.cov_p_closed(k, p))
        elif est == "invcovp":
            p = int(parameter.split("=")[1])
            if p > rank:
                out[key] = ("invalid", f"p={p} exceeds rank {rank} of K")
                continue
            est_mc = haar.invcov_p_mc(k, p, config.mc_samples, rng)
            if metric == "fro_direct":
                inv_back = pseudoinverse(est_mc.estimate)
                out[key] = frobenius_norm(a - (p / config.m) * inv_back)
            else:
                out[key] = frobenius_norm(a_inv - (config.m / p) * est_mc.estimate)
        elif est == "ewens":
            theta = float(parameter.split("=")[1])
            out[key] = frobenius_norm(a - ew.ewens_estimator(k, theta))
        elif est == "hybrid":
            theta, p = _split_theta_p(parameter)
            out[key] = frobenius_norm(a - ew.hybrid_estimator(k, theta, p))
        elif est == "hybrid_inverse":
            theta, p = _split_theta_p(parameter)
            est_mc = ew.hybrid_inverse_mc(k, theta, p, config.mc_samples, rng)
            out[key] = frobenius_norm(a_inv - est_mc.estimate)
        else:  # pragma: no cover - guarded by config validation
            raise AssertionError(est)
    return out


def _split_theta_p(parameter: str):
    theta_part, p_part = parameter.split(",")
    return float(theta_part.split("=")[1]), int(p_part.split("=")[1])


def _fmt_param(x: float) -> str:
    return "%g" % x


def _build_plan(config: ExperimentConfig):
    plan = []
    for est in config.estimators:
        if est in ("truth", "sample"):
            plan.append((est, "", "fro_direct"))
        elif est == "loading":
            plan.append((est, "grid-min", "fro_direct"))
        elif est == "covp":
            for p in config.p_grid:
                plan.append((est, f"p={p}", "fro_direct"))
        elif est == "invcovp":
            for p in config.p_grid:
                plan.append((est, f"p={p}", "fro_direct"))
                plan.append((est, f"p={p}", "fro_inverse"))
        elif est == "ewens":
            for theta in config.theta_grid:
                plan.append((est, f"theta={_fmt_param(theta)}", "fro_direct"))
        elif est == "hybrid":
            for theta in config.theta_grid:
                for p in config.p_grid:
                    plan.append((est, f"theta={_fmt_param(theta)},p={p}", "fro_direct"))
        elif est == "hybrid_inverse":
            for theta in config.theta_grid:
                for p in config.p_grid:
                    plan.append((est, f"theta={_fmt_param(theta)},p={p}", "fro_inverse"))
    return plan


def run_experiment(config: ExperimentConfig, threads: int = 1) -> MetricReport:
    """Execute every (estimator, parameter, trial) job of the config.

    Trials are independent jobs on substreams of the config seed, so a
    thread pool changes wall time but never results. A row where the
    parameter cannot apply to the drawn matrix (p above the sample rank,
    say) is marked invalid with a reason instead of aborting the run.
    """
    _, a, a_inv = _truth_matrices(config)
    plan = _build_plan(config)
    rows = {key: MetricRow(*key) for key in plan}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_trial_errors, config, t, plan, a, a_inv)
                for t in range(config.trials)
            ]
            results = [f.result() for f in futures]
    else:
        results = [
            _trial_errors(config, t, plan, a, a_inv) for t in range(config.trials)
        ]
    for per_trial in results:
        for key, value in per_trial.items():
            row = rows[key]
            if isinstance(value, tuple):
                row.valid = False
                row.reason = value[1]
                row.values = []
            elif row.valid:
                row.values.append(float(value))
    return MetricReport(config, [rows[key] for key in plan])


def spectrum_report(config: ExperimentConfig, outdir) -> list:
    """Write spectra: truth and sample ESDs, Ewens-average ESDs on the
    theta grid, and the matching analytic limiting densities.

    Returns the list of written paths.
    """
    os.makedirs(outdir, exist_ok=True)
    family, a, _ = _truth_matrices(config)
    paths = []

    def _emit_esd(name, mat):
        path = os.path.join(outdir, name)
        save_esd_csv(path, esd(mat))
        paths.append(path)

    _emit_esd("esd_truth.csv", a)
    k = sample_gaussian_covariance(
        a, config.n, RandomSource(config.seed).substream(0).substream(0)
    )
    _emit_esd("esd_sample.csv", k)

    sym = family.symbol()
    grid = _density_grid(sym)
    path = os.path.join(outdir, "density_truth.csv")
    save_density_csv(path, grid, tp.limiting_density(sym, grid))
    paths.append(path)

    for theta in config.theta_grid:
        tag = _fmt_param(theta)
        _emit_esd(f"esd_ewens_theta_{tag}.csv", ew.ewens_estimator(a, theta))
        beta = theta / config.m
        rsym = tp.rescaled_symbol(config.truth_kind, config.truth_param, beta)
        path = os.path.join(outdir, f"density_ewens_beta_{_fmt_param(beta)}.csv")
        if rsym.is_degenerate:
            xs = np.array([1.0])
            save_density_csv(path, xs, np.array([math.inf]))
        else:
            grid = _density_grid(rsym)
            save_density_csv(path, grid, tp.limiting_density(rsym, grid))
        paths.append(path)
    return paths


def _density_grid(sym: tp.SymbolFunction, points: int = 513) -> np.ndarray:
    # image of a uniform angle grid: clusters abscissae near the
    # density's edge singularities where resolution matters
    theta = np.linspace(0.0, np.pi, points + 2)[1:-1]
    return np.sort(np.asarray(sym(theta), dtype=float))


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------


@dataclass
class VerifyCheck:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)


@dataclass
class VerifyReport:
    suite: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "value": c.value, "tol": c.tol, "passed": c.passed}
                for c in self.checks
            ],
        }


def _random_hermitian(m, rng, psd=False):
    g = rng.generator
    z = g.standard_normal((m, m)) + 1j * g.standard_normal((m, m))
    if psd:
        return hermitize(z @ z.conj().T / m)
    return hermitize((z + z.conj().T) / 2)


def _suite_ewens_closedform() -> list:
    checks = []
    rng = RandomSource(2024)
    worst = 0.0
    for m in range(2, 7):
        for theta in (0.5, 1.0, 2.0, 5.0):
            for rep in range(3):
                k = _random_hermitian(m, rng.substream(m * 100 + rep))
                ref = ew.ewens_estimator_bruteforce(k, theta)
                got = ew.ewens_estimator(k, theta)
                worst = max(worst, float(np.abs(ref - got).max()))
    checks.append(VerifyCheck("ewens closed form vs m! enumeration", worst, 1e-12))
    return checks


def _suite_hybrid_closedform() -> list:
    checks = []
    rng = RandomSource(77)
    worst = 0.0
    for m in range(2, 6):
        k = _random_hermitian(m, rng.substream(m))
        for p in range(1, m + 1):
            for theta in (0.5, 1.7, 4.0):
                ref = ew.hybrid_estimator_bruteforce(k, theta, p)
                got = ew.hybrid_estimator(k, theta, p)
                worst = max(worst, float(np.abs(ref - got).max()))
    checks.append(VerifyCheck("hybrid closed form vs injection enumeration", worst, 1e-12))
    worst = 0.0
    for m in range(2, 6):
        dvals = RandomSource(5).substream(m).generator.uniform(0.5, 2.0, m)
        for n in range(1, m + 1):
            d = np.zeros(m)
            d[:n] = dvals[:n]
            for p in range(1, n + 1):
                for theta in (0.8, 2.0):
                    ref = ew.hybrid_inverse_bruteforce(np.diag(d), theta, p)
                    got = ew.hybrid_inverse_diagonal(d, theta, p)
                    worst = max(worst, float(np.abs(ref - got).max()))
    checks.append(
        VerifyCheck("diagonal inverse closed form vs enumeration", worst, 1e-12)
    )
    return checks


def _suite_haar_moments() -> list:
    from fractions import Fraction

    checks = []
    rng = RandomSource(31)
    m, samples = 5, 40_000
    k = _random_hermitian(m, rng.substream(0), psd=True)
    for i, p in enumerate((2, 3)):
        mc = haar.cov_p_mc(k, p, samples, rng.substream(i + 1))
        resid = np.abs(mc.estimate - haar.cov_p_closed(k, p))
        z = float((resid / np.maximum(mc.stderr, 1e-300)).max())
        checks.append(VerifyCheck(f"cov average closed form vs MC (p={p})", z, 5.0))
    n, p = 4, 2
    dvals = [Fraction(2), Fraction(3), Fraction(5), Fraction(7)]
    d = np.diag(np.asarray([float(x) for x in dvals]))
    for l in (1, 2):
        coeffs = haar.moment_matrix_coeffs(dvals, p, l)
        pred = coeffs.as_matrix([float(x) for x in dvals])
        phi_rng = rng.substream(10 + l)
        acc_est = _mc_matrix_moment(d, p, l, 60_000, phi_rng)
        resid = np.abs(acc_est.estimate - pred)
        z = float((resid / np.maximum(acc_est.stderr, 1e-300)).max())
        checks.append(VerifyCheck(f"matrix moment closed form vs MC (l={l})", z, 5.0))
        tr_identity = coeffs.trace(dvals) - haar.trace_moment(dvals, p, l)
        checks.append(
            VerifyCheck(f"trace identity exact (l={l})", float(abs(tr_identity)), 0.0)
        )
    return checks


def _mc_matrix_moment(d, p, l, samples, rng):
    from .linalg import WelfordAccumulator, sample_haar_stiefel_batch

    n = d.shape[0]
    acc = WelfordAccumulator()
    done = 0
    while done < samples:
        b = min(8192, samples - done)
        phi = sample_haar_stiefel_batch(p, n, b, rng)
        w = np.einsum("bpi,ij,bqj->bpq", phi, d.astype(complex), phi.conj(), optimize=True)
        wl = w.copy()
        for _ in range(l - 1):
            wl = wl @ w
        back = np.einsum("bpi,bpq,bqj->bij", phi.conj(), wl, phi, optimize=True)
        acc.add_batch(back)
        done += b
    return haar.MonteCarloEstimate(acc.mean, acc.stderr(), acc.count)


def _suite_block_pinv() -> list:
    checks = []
    worst = 0.0
    for trial in range(50):
        rng = RandomSource(900 + trial).generator
        m = int(rng.integers(2, 7))
        n = int(rng.integers(2, 7))
        a = rng.standard_normal((m, n - 1)) + 1j * rng.standard_normal((m, n - 1))
        if trial % 2 == 0:
            col = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        else:
            col = a @ (rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1))
        full = np.hstack([a, col[:, None]])
        ref = np.linalg.pinv(full.conj().T @ full)
        got = block_pinv_update(a, col)
        worst = max(worst, float(np.abs(ref - got).max() / (1 + np.abs(ref).max())))
    checks.append(VerifyCheck("bordered pseudoinverse vs SVD (both branches)", worst, 1e-8))
    return checks


def _suite_toeplitz_decomp() -> list:
    checks = []
    worst_b = worst_a = 0.0
    for m in (5, 40):
        trid = tp.TridiagonalToeplitz(m, 0.3)
        powf = tp.PowerToeplitz(m, 0.5)
        for theta in (0.5, 2.0, 7.0):
            ref = ew.ewens_estimator(trid.matrix(), theta)
            got = tp.ewens_transform_closedform(trid, theta)
            worst_b = max(worst_b, float(np.abs(ref - got).max()))
            ref = ew.ewens_estimator(powf.matrix(), theta)
            got = tp.ewens_transform_closedform(powf, theta)
            worst_a = max(worst_a, float(np.abs(ref - got).max()))
    checks.append(VerifyCheck("tridiagonal decomposition vs closed form", worst_b, 1e-10))
    checks.append(VerifyCheck("power decomposition vs closed form", worst_a, 1e-10))
    return checks


def _suite_toeplitz_spectra() -> list:
    checks = []
    m, b = 200, 0.3
    trid = tp.TridiagonalToeplitz(m, b)
    dec = trid.eigensystem()
    resid = frobenius_norm(dec.reconstruct() - trid.matrix())
    checks.append(VerifyCheck("tridiagonal eigensystem residual", resid, 1e-10))
    numeric = np.sort(np.linalg.eigvalsh(trid.matrix()))
    closed = np.sort(dec.eigenvalues)
    checks.append(
        VerifyCheck("closed vs numeric eigenvalues", float(np.abs(numeric - closed).max()), 1e-10)
    )
    powf = tp.PowerToeplitz(6, 0.5)
    det_gap = abs(powf.det() - float(np.linalg.det(powf.matrix())))
    checks.append(VerifyCheck("power determinant closed form", det_gap, 1e-12))
    inv_gap = float(np.abs(powf.matrix() @ powf.inverse() - np.eye(6)).max())
    checks.append(VerifyCheck("power inverse closed form", inv_gap, 1e-12))
    big = tp.TridiagonalToeplitz(300, b)
    measure = tp.limiting_measure(big.symbol())
    ks = esd(big.matrix()).kolmogorov_distance(measure.cdf)
    checks.append(VerifyCheck("ESD vs symbol push-forward (m=300)", ks, 0.05))
    return checks


VERIFY_SUITES = {
    "ewens-closedform": _suite_ewens_closedform,
    "hybrid-closedform": _suite_hybrid_closedform,
    "haar-moments": _suite_haar_moments,
    "block-pinv": _suite_block_pinv,
    "toeplitz-decomp": _suite_toeplitz_decomp,
    "toeplitz-spectra": _suite_toeplitz_spectra,
}


def verify(suite: str) -> VerifyReport:
    """Run one named oracle suite; raises KeyError for unknown names."""
    if suite not in VERIFY_SUITES:
        raise KeyError(
            f"unknown suite {suite!r}; available: {', '.join(sorted(VERIFY_SUITES))}"
        )
    return VerifyReport(suite, VERIFY_SUITES[suite]())
