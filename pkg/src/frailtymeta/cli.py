"""Command-line interface: ``frailtymeta fit | simulate | validate``.

Exit status: 0 success, 1 some studies failed, 2 invalid descriptor or
arguments, 3 every study failed.
"""

import argparse
import sys

from .exceptions import ConfigurationError, DescriptorValidationError, FrailtyDomainError
from .exposure import FixedWindow, LifetimeWindow
from .criteria import CriteriaVariant, VARIANT_TAGS
from .fitting import R_HYP_SET, StudySpec, fit_from_params
from .bootstrap import simulate_study
from . import io


def _r_hyp_list(text):
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(not -1 < v < 1 for v in values):
        raise argparse.ArgumentTypeError("r_hyp values must lie in (-1, 1)")
    return values


def build_parser():
    p = argparse.ArgumentParser(prog="frailtymeta",
                                description="Gamma-frailty meta-analysis of study summaries.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit every study in a descriptor file")
    f.add_argument("descriptor")
    f.add_argument("--r-hyp", type=_r_hyp_list, default=R_HYP_SET,
                   help="comma-separated correlation hypotheses (default 0.1,0.3,0.5)")
    f.add_argument("--bootstrap", type=int, default=1000,
                   help="bootstrap replicates per cell, 0 to skip (default 1000)")
    f.add_argument("--seed", type=int, default=None,
                   help=f"master seed (default ${io.SEED_ENV} or 0)")
    f.add_argument("--out", default="results", help="output directory (default ./results)")
    f.add_argument("--report-positive-good", action="store_true",
                   help="flip the sign of Cohen's d so positive means beneficial")
    f.add_argument("--emit-plots", action="store_true", help="write forest plots per outcome")
    f.add_argument("--jobs", type=int, default=1, help="parallel workers across cells")
    f.add_argument("--failure-policy", choices=("drop-and-count", "abort-over-threshold"),
                   default="drop-and-count")

    v = sub.add_parser("validate", help="check a descriptor file without fitting")
    v.add_argument("descriptor")

    s = sub.add_parser("simulate",
                       help="simulate one study from given parameters; prints a descriptor")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--mu-con", type=float, required=True)
    s.add_argument("--mu-exp", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--template", help="descriptor file whose first study sets the design")
    s.add_argument("--study", help="study_id to use from the template")
    s.add_argument("--n-con", type=int, default=100)
    s.add_argument("--n-exp", type=int, default=100)
    s.add_argument("--baseline", type=float, default=1.0, help="fixed baseline length (years)")
    s.add_argument("--lifetime", metavar="MIN,MAX,MEAN,SD",
                   help="lifetime baseline from enrolment ages, instead of --baseline")
    s.add_argument("--flup", type=float, default=1.0, help="follow-up length (years)")
    s.add_argument("--criteria", choices=VARIANT_TAGS, default="Default")
    s.add_argument("--outcome", default="SHB")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--replicates", type=int, default=1, help="number of synthetic studies")
    return p


def _design(args):
    if args.template:
        specs = io.load_descriptors(args.template).studies
        if args.study:
            specs = [s for s in specs if s.study_id == args.study]
        if not specs:
            raise ConfigurationError("template has no matching study")
        return specs[0]
    if args.lifetime:
        lo, hi, mean, sd = (float(x) for x in args.lifetime.split(","))
        base = LifetimeWindow(lo, hi, mean, sd)
    else:
        base = FixedWindow(args.baseline)
    # placeholder observations; simulate_study replaces them
    return StudySpec("simulated", args.outcome, args.n_con, args.n_exp, 0.5, 0.5, 0.5, base,
                     FixedWindow(args.flup), FixedWindow(args.flup), CriteriaVariant(args.criteria))


def cmd_simulate(args):
    seed = io.default_seed() if args.seed is None else args.seed
    template = _design(args)
    fit = fit_from_params(args.lam, args.mu_con, args.mu_exp, args.alpha)
    specs = []
    for b in range(args.replicates):
        s = simulate_study(fit, template, seed, b)
        specs.append(s if args.replicates == 1 else
                     s.with_observations(study_id=f"{template.study_id}-{b}"))
    sys.stdout.write(io.dump_descriptors(
        specs, notes=f"simulated at lambda={args.lam}, mu_con={args.mu_con}, "
                     f"mu_exp={args.mu_exp}, alpha={args.alpha}, seed={seed}"))
    return io.EXIT_OK


def cmd_validate(args):
    d = io.load_descriptors(args.descriptor)
    for s in d.studies:
        print(f"{s.study_id}\t{s.arm}\t{s.outcome}\t{s.criteria.tag}")
    for s in d.ideation:
        print(f"{s.study_id}\texp\tideation\tlognormal")
    print(f"ok: {len(d.studies)} study arms, {len(d.ideation)} ideation studies")
    return io.EXIT_OK


def cmd_fit(args):
    seed = io.default_seed() if args.seed is None else args.seed
    config = io.BatchConfig(r_hyp=args.r_hyp, bootstrap=args.bootstrap, seed=seed,
                            positive_good=args.report_positive_good, n_jobs=args.jobs,
                            failure_policy=args.failure_policy)
    d = io.load_descriptors(args.descriptor, allowed_r_hyp=None)
    result = io.run_batch(d, config)
    paths = io.write_results(result, config, args.out)
    if args.emit_plots:
        paths += io.emit_plots(result, config, args.out)
    print(io.summary_table(result, config))
    for path in paths:
        print(f"wrote {path}")
    return result.exit_status


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"fit": cmd_fit, "simulate": cmd_simulate, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except DescriptorValidationError as exc:
        print(str(exc), file=sys.stderr)
        return io.EXIT_INVALID
    except (ConfigurationError, FrailtyDomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return io.EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
