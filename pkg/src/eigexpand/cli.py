"""
Command line interface.

Exit status is 0 on success, 2 for invalid input and 3 for numerical
degeneracy (repeated eigenvalues, vanishing variances, ...).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as eio
from .errors import DegeneracyError, EigexpandError, ValidationError
from .expansion import (I_matrix, eigfun_residual, eigval_residual, expansion_report,
                        population_system, svd_f_residual)
from .harness import ExperimentConfig, ks_two_sample, run_experiment
from .inference import empirical_scores, gauss_max_sample, longrun_var, simultaneous_band
from .operators import (WeightScheme, cov_op, lag_op, longrun_op, population_operator,
                        sym_lag_op)
from .simulate import ProcessSpec, SamplePath, SeedSpec, arh1_burnin, gen_process
from .spectral import align_signs, eig_sym


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def _load_spec(path) -> ProcessSpec:
    try:
        return ProcessSpec.from_dict(_load_json(path))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: bad process spec ({exc})") from exc


def _read_sample(path) -> SamplePath:
    if not Path(path).exists():
        raise ValidationError(f"no such file: {path}")
    return eio.read_sample_csv(path)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def cmd_simulate(args):
    spec = _load_spec(args.spec)
    burnin = args.burnin
    if burnin is None:
        burnin = arh1_burnin(spec.phi) if spec.kind == "arh1" else 0
    s = gen_process(spec, args.n, burnin, SeedSpec(args.seed))
    eio.write_sample_csv(args.out, s)
    if args.scores_out:
        eio.write_matrix_csv(args.scores_out, s.true_scores, spec.grid.T, "scores")


def _estimate(sample, kind, h, b, weights, center):
    if kind == "cov":
        return cov_op(sample, center)
    if kind == "lag":
        return lag_op(sample, h, center)
    if kind == "symlag":
        return sym_lag_op(sample, h, center)
    if kind == "longrun":
        return longrun_op(sample, b, WeightScheme(weights), center)
    raise ValidationError(f"unknown kind {kind!r}")


def cmd_estimate(args):
    est = _estimate(_read_sample(args.input), args.kind, args.h, args.b, args.weights, args.center)
    eio.write_kernel_csv(args.out, est.op)


def cmd_expand(args):
    sample = _read_sample(args.input)
    spec = _load_spec(args.spec)
    if spec.grid != sample.grid:
        raise ValidationError("curves and spec use different grids")
    hatK = _estimate(sample, args.kind, args.h, args.b, args.weights, args.center).op
    pkind = "lag" if args.kind == "lag" else args.kind
    if pkind == "lag":
        raise ValidationError("expand needs a symmetric estimator: cov, symlag or longrun")
    popops = population_operator(spec, pkind, h=args.h, b=args.b)
    pop = population_system(popops)
    J = args.J or min(10, pop.J - 1)
    hat = align_signs(eig_sym(hatK, J), pop.truncate(J))
    m = sample.n / max(args.b, 1) if args.kind == "longrun" else float(sample.n)
    RF = None
    if args.kind == "symlag":
        s2 = SamplePath(sample.grid, sample.data, spec)
        RF = svd_f_residual(s2, args.h, hat, pop.truncate(J), center=args.center)
    rep = expansion_report(hatK, popops.op, hat, pop, J, m, RF)
    _write(args.out, rep.to_csv())


def _maxdev(sample, args):
    eig = eig_sym(cov_op(sample, True).op, args.jplus)
    panel = empirical_scores(sample, eig, args.jplus)
    lrv = longrun_var(panel, args.bandwidth, args.weights)
    lam_ref = sig_ref = None
    if args.spec:
        from .harness import population_sigma
        spec = _load_spec(args.spec)
        lam_ref = np.sort(spec.lambda_tilde())[::-1][: args.jplus]
        sig_ref = population_sigma(spec, args.jplus)
    return lrv, simultaneous_band(eig.lambdas, lrv.sigma_hat, sample.n, args.jplus, args.level,
                             args.method, rho=lrv.rho_hat, reps=args.reps,
                             seed=SeedSpec(args.seed), lambda_ref=lam_ref, sigma_ref=sig_ref,
                             constant=args.gumbel_constant)


def cmd_maxdev(args):
    lrv, res = _maxdev(_read_sample(args.input), args)
    d = res.to_dict()
    d["bandwidth"] = lrv.L_b
    _write(args.out, _dump(d))


def cmd_band(args):
    A, _ = eio.read_matrix_csv(args.estimates)
    if A.shape[1] < 2:
        raise ValidationError("estimates need columns lambda_hat,sigma_hat")
    lh, sg = A[:, -2], A[:, -1]
    jplus = args.jplus or lh.size
    res = simultaneous_band(lh, sg, args.n, jplus, args.level, args.method,
                            reps=args.reps, seed=SeedSpec(args.seed),
                            constant=args.gumbel_constant)
    lines = ["j,lambda_hat,lower,upper,upper_infinite"]
    for j in range(jplus):
        up = "inf" if res.upper_infinite[j] else "%.17g" % res.upper[j]
        lines.append("%d,%.17g,%.17g,%s,%d" % (j + 1, res.lambda_hat[j], res.lower[j], up,
                                              int(res.upper_infinite[j])))
    _write(args.out, "\n".join(lines) + "\n")


def _experiment(args, experiment):
    d = _load_json(args.experiment)
    d.setdefault("seed", args.seed)
    d["experiment"] = experiment
    try:
        cfg = ExperimentConfig.from_dict(d)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad experiment config ({exc})") from exc
    return cfg, run_experiment(cfg, threads=args.threads)


def cmd_mc_rate(args):
    cfg, rep = _experiment(args, "expansion")
    _write(args.out, rep.to_json() + "\n")


def cmd_mc_dist(args):
    cfg, rep = _experiment(args, "tstat")
    body = rep.body()
    for cell in body["cells"]:
        n = cell["n"]
        if n in rep.raw:
            Z = gauss_max_sample(np.eye(cfg.jplus_for(n)), args.reference_reps,
                                 SeedSpec(cfg.seed).spawn(n, 999_983))
            cell["ks_vs_gaussian_max"] = ks_two_sample(rep.raw[n]["T"][:, 0], Z)
    _write(args.out, _dump(body))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eigexpand", description=__doc__.splitlines()[1])
    p.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for Monte Carlo")
    p.add_argument("--config", help="JSON file with default values for subcommand options")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw curves from a process spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--burnin", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--scores-out")
    s.set_defaults(func=cmd_simulate)

    def est_flags(q):
        q.add_argument("--kind", choices=["cov", "lag", "symlag", "longrun"], default="cov")
        q.add_argument("--h", type=int, default=1)
        q.add_argument("--b", type=int, default=0)
        q.add_argument("--weights", choices=["flat", "bartlett"], default="flat")
        q.add_argument("--center", action="store_true")

    e = sub.add_parser("estimate", help="estimate an operator kernel from curves")
    e.add_argument("--input", required=True)
    est_flags(e)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    x = sub.add_parser("expand", help="expansion residuals of an estimate against the population")
    x.add_argument("--input", required=True)
    x.add_argument("--spec", required=True)
    est_flags(x)
    x.add_argument("--J", type=int)
    x.add_argument("--out")
    x.set_defaults(func=cmd_expand)

    def band_flags(q):
        q.add_argument("--level", type=float, default=0.95)
        q.add_argument("--method", choices=["gumbel", "gaussian-mc"], default="gumbel")
        q.add_argument("--reps", type=int, default=100_000)
        q.add_argument("--gumbel-constant", choices=["stated", "classical", "one-sided"])

    m = sub.add_parser("maxdev", help="max-deviation statistic and simultaneous band")
    m.add_argument("--input", required=True)
    m.add_argument("--jplus", type=int, required=True)
    m.add_argument("--bandwidth", type=int)
    m.add_argument("--weights", choices=["flat", "bartlett"], default="bartlett")
    m.add_argument("--spec", help="process spec for population-mode T")
    band_flags(m)
    m.add_argument("--out")
    m.set_defaults(func=cmd_maxdev)

    b = sub.add_parser("band", help="simultaneous band from eigenvalue and sigma estimates")
    b.add_argument("--estimates", required=True, help="CSV with columns lambda_hat,sigma_hat")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--jplus", type=int)
    band_flags(b)
    b.add_argument("--out")
    b.set_defaults(func=cmd_band)

    r = sub.add_parser("mc-rate", help="Monte Carlo expansion-rate experiment")
    r.add_argument("--experiment", required=True, help="experiment config JSON")
    r.add_argument("--out")
    r.set_defaults(func=cmd_mc_rate)

    dd = sub.add_parser("mc-dist", help="Monte Carlo distribution of T versus Gaussian maxima")
    dd.add_argument("--experiment", required=True)
    dd.add_argument("--reference-reps", type=int, default=100_000)
    dd.add_argument("--out")
    dd.set_defaults(func=cmd_mc_dist)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            defaults = _load_json(args.config)
            if not isinstance(defaults, dict):
                raise ValidationError("--config must hold a JSON object")
            given = set(a[2:].split("=")[0].replace("-", "_") for a in (argv or sys.argv[1:])
                        if a.startswith("--"))
            for k, v in defaults.items():
                k = k.replace("-", "_")
                if hasattr(args, k) and k not in given:
                    setattr(args, k, v)
        args.func(args)
    except DegeneracyError as exc:
        print(f"eigexpand: degenerate: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, EigexpandError) as exc:
        print(f"eigexpand: invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"eigexpand: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
