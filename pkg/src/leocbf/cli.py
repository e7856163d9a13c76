"""Command-line entry point: ``leocbf {coverage,validate,optimal-k,dists,ergodic-se}``.

Every command reads an INI experiment file and writes CSV with a ``#``
provenance header (tool version, config hash, resolved config).  Exit codes:
0 ok, 1 numerical failure, 2 config error, 3 validation failure.
"""
import argparse
from dataclasses import replace
import io
import os
import sys

import numpy as np
from scipy import stats

from . import __version__
from . import coverage as cov
from . import distributions as dist
from . import montecarlo as mc
from .config import ConfigError, load_config
from .interference import db_to_linear
from .quadrature import QuadratureError

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2, 3
THREADS_ENV = "LEOCBF_THREADS"
CONDITIONED_ALLOWANCE = 0.015    # analytic vs delta-binned MC, on top of the 95% half-width
MARGINAL_ALLOWANCE = 0.005


class ValidationFailed(Exception):
    pass


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "pass" if x else "fail"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.10g}"


def _write_csv(out, cfg, command, columns, rows, notes=()):
    buf = io.StringIO()
    buf.write(f"# leocbf {__version__}\n# command: {command}\n# config_sha256: {cfg.digest}\n")
    for line in cfg.canonical().splitlines():
        buf.write(f"#   {line}\n")
    for line in notes:
        buf.write(f"# {line}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigError("threads must be >= 1")
    return n


def _sim_params(cfg, K=None, mode="ring"):
    K = cfg.K if K is None else K
    return mc.SimulationParams(cfg.geometry, cfg.lam, cfg.budget(K), cfg.fading, K, mode)


def cmd_coverage(cfg, args):
    mode = args.mode or cfg.mode
    deltas = args.delta or cfg.deltas
    gamma = db_to_linear(cfg.gamma_db)
    ring, budget, K = cfg.ring, cfg.budget(), cfg.K
    rows = []
    if mode == "marginal":
        res = cov.coverage_marginal(ring, budget, cfg.fading, K, gamma)
        for g, p, f, m in zip(cfg.gamma_db, *map(np.atleast_1d, (res.probability, res.few, res.many))):
            rows.append((g, p, f, m, mode, ""))
    else:
        if K < 2 and mode == "approx":
            raise ConfigError("[network] k: approx mode needs k >= 2")
        for d in deltas:
            if mode == "exact":
                res = cov.coverage_cond_delta(ring, budget, cfg.fading, K, d, gamma)
            else:
                res = cov.coverage_approx_mixed(ring, budget, cfg.fading, K, d, gamma)
            for g, p, f, m in zip(cfg.gamma_db, *map(np.atleast_1d, (res.probability, res.few, res.many))):
                rows.append((g, p, f, m, mode, d))
    _write_csv(args.out, cfg, "coverage",
               ["gamma_db", "probability", "branch_few", "branch_many", "mode", "delta"], rows)


def cmd_validate(cfg, args):
    trials = cfg.trials if args.trials is None else args.trials
    if trials < mc.MIN_TRIALS:
        raise ConfigError(f"trials: must be >= {mc.MIN_TRIALS}")
    mode = args.mode or cfg.mode
    gamma = db_to_linear(cfg.gamma_db)
    out = mc.simulate(_sim_params(cfg), trials, seed=args.seed if args.seed is not None else cfg.seed,
                      threads=_threads(args))
    ring, budget, K = cfg.ring, cfg.budget(), cfg.K
    rows = []
    if mode == "marginal" or K < 2:
        analytic = np.atleast_1d(cov.coverage_marginal(ring, budget, cfg.fading, K, gamma).probability)
        est = mc.coverage_from_outcomes(out, gamma)
        cases = [("", analytic, est, MARGINAL_ALLOWANCE)]
    else:
        cases = []
        for d in cfg.deltas:
            analytic = np.atleast_1d(cov.sinr_coverage_many(ring, budget, cfg.fading, K, d, gamma))
            try:
                est = mc.coverage_from_outcomes(out, gamma, (d, args.halfwidth))
            except mc.InsufficientTrialsError as e:
                raise ValidationFailed(f"delta={d}: {e}") from None
            cases.append((d, analytic, est, CONDITIONED_ALLOWANCE))
    worst = 0.0
    all_ok = True
    for d, analytic, est, allow in cases:
        for g, a, e in zip(cfg.gamma_db, analytic, est):
            gap = abs(a - e.value)
            ok = gap <= e.half_width_95 + allow
            all_ok &= ok
            worst = max(worst, gap)
            rows.append((g, d, a, e.value, e.half_width_95, e.trials, ok))
    summary = f"max |analytic - mc| = {worst:.6f}; {'all pass' if all_ok else 'FAIL'}"
    _write_csv(args.out, cfg, "validate",
               ["gamma_db", "delta", "analytic", "mc", "mc_half_width", "mc_trials", "pass"], rows,
               notes=(f"trials: {trials}", summary))
    print(summary, file=sys.stderr)
    if not all_ok:
        raise ValidationFailed(summary)


def cmd_optimal_k(cfg, args):
    densities = args.densities or cfg.densities
    n_ts = args.nt or (cfg.radio.n_t,)
    rows = []
    for n_t in n_ts:
        radio = replace(cfg.radio, n_t=n_t)
        for mu in densities:
            if mu <= 0:
                raise ConfigError("densities: must be positive")
            ring = cfg.with_mean_count(mu).ring
            k_star, se = cov.optimal_cluster_size(ring, radio, cfg.fading)
            rows.append((float(mu), n_t, k_star, se[k_star]))
    _write_csv(args.out, cfg, "optimal-k", ["density", "N_t", "K_star", "ergodic_se_at_K_star"], rows)


def cmd_ergodic_se(cfg, args):
    ks = args.k or (cfg.K,)
    rows = []
    for K in ks:
        if not 1 <= K <= cfg.radio.n_t:
            raise ConfigError(f"k: {K} outside 1..n_t={cfg.radio.n_t}")
        rows.append((K, cov.ergodic_se(cfg.ring, cfg.budget(K), cfg.fading, K)))
    _write_csv(args.out, cfg, "ergodic-se", ["K", "ergodic_se"], rows)


def _chi2(counts, expected):
    """Pearson statistic after pooling bins with expected count below 5."""
    obs, exp_ = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(counts, expected):
        o_acc += o
        e_acc += e
        if e_acc >= 5:
            obs.append(o_acc)
            exp_.append(e_acc)
            o_acc = e_acc = 0.0
    if exp_:
        obs[-1] += o_acc
        exp_[-1] += e_acc
    obs, exp_ = np.array(obs), np.array(exp_)
    if obs.size < 2:
        return float("nan"), 0, float("nan")
    exp_ *= obs.sum() / exp_.sum()
    stat = float(np.sum((obs - exp_) ** 2 / exp_))
    dof = obs.size - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def cmd_dists(cfg, args):
    ring, K = cfg.ring, cfg.K
    delta = cfg.deltas[0]
    trials = cfg.trials if args.trials is None else args.trials
    out = mc.simulate(_sim_params(cfg), trials, seed=args.seed if args.seed is not None else cfg.seed,
                      threads=_threads(args))
    which = args.which
    if which == "nearest":
        if K < 2:
            raise ConfigError("[network] k: nearest-given-few needs k >= 2")
        edges = np.linspace(ring.r_min, ring.r_max, args.bins + 1)
        pdf = dist.nearest_pdf_given_few(ring, K, edges)
        cdf = 1.0 - dist.nearest_ccdf_given_few(ring, K, edges)
        sample = out.r1[mc.condition_mask(out, branch="few")]
        ref = None
    elif which == "kth":
        lo = ring.r_min / delta if K > 1 else ring.r_min
        edges = np.linspace(lo, ring.r_max, args.bins + 1)
        d = delta if K > 1 else 1.0
        pdf = dist.kth_pdf_given_many(ring, K, d, edges)
        cdf = 1.0 - dist.kth_ccdf_given_many(ring, K, d, edges)
        # sampled from the same event the density conditions on
        keep = (out.count >= K) & (out.rK >= lo)
        sample = out.rK[keep] if K > 1 else out.r1[out.count >= 1]
        ref = dist.nearest_pdf_any(ring, edges) if K == 1 \
            else dist.kth_pdf_given_delta_exact(ring, K, d, edges)
    else:
        if K < 2:
            raise ConfigError("[network] k: delta distribution needs k >= 2")
        edges = np.linspace(ring.r_min / ring.r_max, 1.0, args.bins + 1)
        pdf = dist.delta_pdf(ring, K, edges)
        cdf = dist.delta_cdf(ring, K, edges)
        sample = out.delta[mc.condition_mask(out, branch="many")]
        ref = None
    counts, _ = np.histogram(sample, bins=edges)
    n = int(sample.size)
    widths = np.diff(edges)
    dens = counts / (n * widths) if n else np.full(counts.shape, np.nan)
    stat, dof, pval = _chi2(counts, n * np.diff(cdf)) if n else (float("nan"), 0, float("nan"))
    extra = {"nearest": [], "delta": [], "kth": ["nearest_any_pdf" if K == 1 else "joint_pdf"]}
    columns = ["x", "pdf", "mc_histogram"] + extra[which]
    rows = []
    for i, x in enumerate(edges):
        row = [x, pdf[i], dens[i] if i < counts.size else ""]
        if ref is not None:
            row.append(ref[i])
        rows.append(row)
    notes = (f"which: {which}; conditioned samples: {n}",
             f"chi2: {stat:.6g}; dof: {dof}; p_value: {pval:.6g}")
    _write_csv(args.out, cfg, "dists", columns, rows, notes)
    print(notes[1], file=sys.stderr)


def build_parser():
    p = argparse.ArgumentParser(prog="leocbf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"leocbf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mc_flags=False):
        sp.add_argument("config", help="INI experiment file")
        sp.add_argument("--out", default=None, help="CSV path (default stdout)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
        if mc_flags:
            sp.add_argument("--trials", type=int, default=None)

    sp = sub.add_parser("coverage", help="analytic coverage over the gamma grid")
    common(sp)
    sp.add_argument("--mode", choices=("exact", "approx", "marginal"), default=None)
    sp.add_argument("--delta", type=float, nargs="+", default=None)
    sp.set_defaults(func=cmd_coverage)

    sp = sub.add_parser("validate", help="analytic coverage against Monte Carlo")
    common(sp, mc_flags=True)
    sp.add_argument("--mode", choices=("exact", "marginal"), default=None)
    sp.add_argument("--halfwidth", type=float, default=0.01,
                    help="relative-distance bin half-width")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("optimal-k", help="best cluster size per density")
    common(sp)
    sp.add_argument("--densities", type=float, nargs="+", default=None,
                    help="mean visible counts")
    sp.add_argument("--nt", type=int, nargs="+", default=None, help="antenna counts to sweep")
    sp.set_defaults(func=cmd_optimal_k)

    sp = sub.add_parser("dists", help="distance distributions against MC histograms")
    common(sp, mc_flags=True)
    sp.add_argument("--which", choices=("nearest", "kth", "delta"), required=True)
    sp.add_argument("--bins", type=int, default=40)
    sp.set_defaults(func=cmd_dists)

    sp = sub.add_parser("ergodic-se", help="ergodic spectral efficiency")
    common(sp)
    sp.add_argument("--k", type=int, nargs="+", default=None)
    sp.set_defaults(func=cmd_ergodic_se)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if getattr(args, "trials", None) is not None and args.trials < 1:
            raise ConfigError("trials: must be >= 1")
        args.func(cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationFailed as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, ArithmeticError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
