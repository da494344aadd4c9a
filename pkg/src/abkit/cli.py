"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import datasets
from .elicit import ElicitationError, QuantileSpec, elicit_prior
from .implied import DerivedQuantity, QuadratureError, TruncationSide
from .inference import BF_TYPES, ab_test, robustness_grid, sequential_analysis
from .laplace import ModeFindingError
from .model import Hypothesis, HypothesisProbs, PriorParams, TrialData
from .oracle import QuadratureSpec, RefinementError, oracle_log_marginals
from .plotdata import (
    posterior_density_series,
    posterior_mixture,
    posterior_p1p2_grid,
    prior_density_series,
    prior_mixture,
    prior_p1p2_grid,
)
from .sampling import DEFAULT_DOF, DEFAULT_SAMPLES, ImportanceSamplingError, fresh_seed, sir_sample, summarize

EXIT_USAGE = 2
EXIT_NUMERIC = 3
NUMERIC_ERRORS = (ModeFindingError, ImportanceSamplingError, QuadratureError, ElicitationError, RefinementError)


class UsageError(Exception):
    pass


def fmt(v) -> str:
    return f"{float(v):.10g}"


def write_csv(out, header, rows):
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(r if isinstance(r, str) else fmt(r) for r in row) + "\n")


# -- argument parsing helpers ---------------------------------------------------


def float_list(flag: str, text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected a comma-separated list of numbers, got {text!r}") from None


def parse_range(flag: str, text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"{flag}: expected from:to:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"{flag}: expected from:to:steps, got {text!r}") from None
    if steps < 1:
        raise UsageError(f"{flag}: steps must be at least 1")
    if hi < lo:
        raise UsageError(f"{flag}: reversed range {lo} > {hi}")
    if steps == 1 and hi != lo:
        raise UsageError(f"{flag}: a single step needs from == to")
    return np.linspace(lo, hi, steps)


def parse_prior_probs(text: str) -> HypothesisProbs:
    mapping = {}
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"--prior-prob: expected name=value pairs, got {item!r}")
        k, v = item.split("=", 1)
        try:
            mapping[Hypothesis.parse(k)] = float(v)
        except ValueError as exc:
            raise UsageError(f"--prior-prob: {exc}") from None
    try:
        return HypothesisProbs.from_mapping(mapping)
    except ValueError as exc:
        raise UsageError(f"--prior-prob: {exc}") from None


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ABKIT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"ABKIT_SEED must be an integer, got {env!r}") from None
    seed = fresh_seed()
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def resolve_prior(args) -> PriorParams:
    sources = [s for s in (args.prior_file, args.prior, args.elicit_what) if s is not None]
    if len(sources) > 1:
        raise UsageError("choose one prior source: --prior-file, --prior or --elicit-what")
    try:
        if args.prior_file is not None:
            with open(args.prior_file) as fh:
                return datasets.read_prior_json(fh.read())
        if args.prior is not None:
            vals = float_list("--prior", args.prior)
            if len(vals) != 4:
                raise UsageError("--prior: expected mu_beta,sigma_beta,mu_psi,sigma_psi")
            return PriorParams(*vals)
        if args.elicit_what is not None:
            if args.elicit_q is None or args.elicit_prob is None:
                raise UsageError("--elicit-what needs --elicit-q and --elicit-prob")
            spec = _quantile_spec("--elicit-q", args.elicit_q, "--elicit-prob", args.elicit_prob)
            return elicit_prior(spec, args.elicit_what, (args.mu_beta, args.sigma_beta)).prior
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"prior: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"prior: {exc}") from None
    return PriorParams(args.mu_beta, args.sigma_beta, 0.0, 1.0)


def _quantile_spec(qflag, qtext, pflag, ptext) -> QuantileSpec:
    q, p = float_list(qflag, qtext), float_list(pflag, ptext)
    if len(q) != len(p):
        raise UsageError(f"{qflag} and {pflag} must have the same length ({len(q)} vs {len(p)})")
    try:
        return QuantileSpec(q, p)
    except ValueError as exc:
        raise UsageError(f"{qflag}/{pflag}: {exc}") from None


def resolve_data(args, required: bool = True) -> TrialData | None:
    flags = [args.y1, args.n1, args.y2, args.n2]
    if args.data is not None and any(f is not None for f in flags):
        raise UsageError("give either --data or --y1/--n1/--y2/--n2, not both")
    try:
        if args.data is not None:
            with open(args.data) as fh:
                return datasets.read_trial_json(fh.read())
        if all(f is not None for f in flags):
            return TrialData(*flags)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--data: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"data: {exc}") from None
    if any(f is not None for f in flags):
        raise UsageError("--y1, --n1, --y2 and --n2 must be given together")
    if required:
        raise UsageError("data required: --data FILE or --y1/--n1/--y2/--n2")
    return None


# -- commands -------------------------------------------------------------------


def cmd_elicit(args, out):
    spec = _quantile_spec("--q", args.q, "--prob", args.prob)
    try:
        PriorParams(args.mu_beta, args.sigma_beta)
        res = elicit_prior(spec, args.what, (args.mu_beta, args.sigma_beta))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    payload = res.prior.as_dict()
    payload["what"] = res.quantity.value
    payload["objective"] = res.objective
    payload["quantiles"] = [
        {"q": v, "target": p, "implied": ip} for v, p, ip in zip(spec.values, spec.probs, res.implied_probs())
    ]
    json.dump(payload, out, indent=2)
    out.write("\n")


def cmd_test(args, out):
    data = resolve_data(args)
    prior = resolve_prior(args)
    probs = parse_prior_probs(args.prior_prob) if args.prior_prob else HypothesisProbs.default()
    res = ab_test(data, prior, probs, args.samples, args.dof, resolve_seed(args))
    payload = res.to_dict()
    if args.oracle:
        spec = QuadratureSpec(args.oracle_nodes)
        orc = oracle_log_marginals(data, prior, spec)
        payload["oracle"] = {
            "nodes_per_axis": spec.nodes_per_axis,
            "log_marginal": {h.value: v for h, v in orc.items()},
            "log_bf": {
                "BF10": orc[Hypothesis.H1] - orc[Hypothesis.H0],
                "BF+0": orc[Hypothesis.HPLUS] - orc[Hypothesis.H0],
                "BF-0": orc[Hypothesis.HMINUS] - orc[Hypothesis.H0],
            },
        }
    if args.format == "csv":
        rows = []
        for section in ("bf", "log_bf", "prior_probs", "posterior_probs", "mc_se"):
            rows += [(f"{section}.{k}", v) for k, v in payload[section].items()]
        if "oracle" in payload:
            rows += [(f"oracle.log_bf.{k}", v) for k, v in payload["oracle"]["log_bf"].items()]
        write_csv(out, ["quantity", "value"], rows)
    else:
        json.dump(payload, out, indent=2)
        out.write("\n")


def cmd_sequential(args, out):
    try:
        if args.seqdata:
            ds = datasets.load_seqdata()
        elif args.data is not None:
            with open(args.data) as fh:
                ds = datasets.parse_sequential_csv(fh.read())
        else:
            raise UsageError("sequential data required: --data FILE or --seqdata")
    except OSError as exc:
        raise UsageError(f"--data: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"--data: {exc}") from None
    if args.thin < 1:
        raise UsageError("--thin must be a positive integer")
    prior = resolve_prior(args)
    probs = parse_prior_probs(args.prior_prob) if args.prior_prob else HypothesisProbs.default()
    trace = sequential_analysis(ds, prior, probs, args.thin, args.samples, args.dof, resolve_seed(args))
    rows = ([str(int(r[0]))] + list(r[1:]) for r in trace.as_array())
    write_csv(out, ["n_total", "p_h0", "p_h1", "p_hplus", "p_hminus"], rows)


def cmd_robustness(args, out):
    data = resolve_data(args)
    if args.bftype not in BF_TYPES:
        raise UsageError(f"--bftype must be one of {', '.join(BF_TYPES)}")
    mu = parse_range("--mu", args.mu)
    sigma = parse_range("--sigma", args.sigma)
    if np.any(sigma <= 0):
        raise UsageError("--sigma: range must stay above 0")
    try:
        PriorParams(args.mu_beta, args.sigma_beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    grid = robustness_grid(
        data, args.bftype, mu, sigma, (args.mu_beta, args.sigma_beta), args.samples, args.dof, resolve_seed(args)
    )
    write_csv(out, ["mu_psi", "sigma_psi", "bf"], grid.rows())


def cmd_plotdata(args, out):
    what = args.what
    prior = resolve_prior(args)
    grid = parse_range("--grid", args.grid) if args.grid else None
    if args.stage == "prior":
        trunc = TruncationSide.parse(args.hypothesis)
        if what == "p1p2":
            write_csv(out, ["p1", "p2", "density"], zip(*prior_p1p2_grid(prior, trunc=trunc)))
        elif what == "mixture":
            probs = parse_prior_probs(args.prior_prob) if args.prior_prob else HypothesisProbs.undirected()
            _write_mixture(out, prior_mixture(prior, probs, grid))
        else:
            x, dens = prior_density_series(what, prior, grid, trunc)
            write_csv(out, ["x", "density"], zip(x, dens))
        return

    data = resolve_data(args, required=False)
    if data is None:
        raise UsageError("posterior plot data needs --data or --y1/--n1/--y2/--n2")
    seed = resolve_seed(args)
    if what == "mixture":
        probs = parse_prior_probs(args.prior_prob) if args.prior_prob else HypothesisProbs.undirected()
        res = ab_test(data, prior, probs, args.samples, args.dof, seed)
        _write_mixture(out, posterior_mixture(res, grid))
        return
    h = Hypothesis.parse(args.hypothesis if args.hypothesis not in (None, "none") else "H1")
    if h is Hypothesis.H0:
        raise UsageError("--hypothesis: posterior draws exist only under H1, H+ and H-")
    draws = sir_sample(h, data, prior, args.samples, seed, args.dof)
    if args.summary:
        cols = ["p1", "p2"] if what == "p1p2" else [what]
        payload = {}
        for c in cols:
            med, (lo, hi) = summarize(draws.column(c), args.level)
            payload[c] = {"median": med, "lower": lo, "upper": hi, "level": args.level}
        json.dump({"hypothesis": h.value, "summaries": payload, "ess": draws.effective_sample_size}, out, indent=2)
        out.write("\n")
    elif what == "p1p2":
        write_csv(out, ["p1", "p2", "density"], zip(*posterior_p1p2_grid(draws)))
    else:
        x, dens = posterior_density_series(draws, what, grid)
        write_csv(out, ["x", "density"], zip(x, dens))


def _write_mixture(out, mix):
    rows = [("spike", 0.0, mix["spike"])] + [("slab", x, y) for x, y in zip(mix["x"], mix["slab"])]
    write_csv(out, ["component", "x", "height"], rows)


# -- parser ---------------------------------------------------------------------


def _add_sampling(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (falls back to ABKIT_SEED, then entropy)")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="importance samples S")
    p.add_argument("--dof", type=float, default=DEFAULT_DOF, help="degrees of freedom of the t proposal")


def _add_data(p):
    p.add_argument("--data", help='JSON file {"y1":..,"n1":..,"y2":..,"n2":..}')
    for name in ("y1", "n1", "y2", "n2"):
        p.add_argument(f"--{name}", type=int, default=None)


def _add_prior(p):
    g = p.add_argument_group("prior (at most one source; default standard normal)")
    g.add_argument("--prior-file", help="prior JSON {mu_beta, sigma_beta, mu_psi, sigma_psi}")
    g.add_argument("--prior", help="mu_beta,sigma_beta,mu_psi,sigma_psi")
    g.add_argument("--elicit-what", choices=[q.value for q in DerivedQuantity])
    g.add_argument("--elicit-q")
    g.add_argument("--elicit-prob")
    g.add_argument("--mu-beta", type=float, default=0.0)
    g.add_argument("--sigma-beta", type=float, default=1.0)
    p.add_argument("--prior-prob", help="e.g. h0=.5,h1=0,h+=.25,h-=.25")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abkit", description="Bayesian A/B tests for two proportions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("elicit", help="fit the log odds ratio prior to quantiles")
    p.add_argument("--what", required=True, choices=[q.value for q in DerivedQuantity])
    p.add_argument("--q", required=True, help="comma-separated quantile values")
    p.add_argument("--prob", required=True, help="comma-separated probabilities")
    p.add_argument("--mu-beta", type=float, default=0.0)
    p.add_argument("--sigma-beta", type=float, default=1.0)
    p.set_defaults(func=cmd_elicit)

    p = sub.add_parser("test", help="Bayes factors and posterior hypothesis probabilities")
    _add_data(p)
    _add_prior(p)
    _add_sampling(p)
    p.add_argument("--oracle", action="store_true", help="add brute-force quadrature values")
    p.add_argument("--oracle-nodes", type=int, default=2001)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("sequential", help="posterior probabilities as data accumulate")
    p.add_argument("--data", help="CSV with header y1,n1,y2,n2 and cumulative rows")
    p.add_argument("--seqdata", action="store_true", help="use the bundled example dataset")
    p.add_argument("--thin", type=int, default=1)
    _add_prior(p)
    _add_sampling(p)
    p.set_defaults(func=cmd_sequential)

    p = sub.add_parser("robustness", help="Bayes factor over a grid of psi priors")
    _add_data(p)
    p.add_argument("--bftype", required=True)
    p.add_argument("--mu", required=True, help="from:to:steps for mu_psi")
    p.add_argument("--sigma", required=True, help="from:to:steps for sigma_psi")
    p.add_argument("--mu-beta", type=float, default=0.0)
    p.add_argument("--sigma-beta", type=float, default=1.0)
    _add_sampling(p)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("plotdata", help="density series for prior/posterior plots")
    p.add_argument("--what", required=True, choices=["logor", "or", "rrisk", "arisk", "p1p2", "mixture"])
    p.add_argument("--stage", required=True, choices=["prior", "posterior"])
    p.add_argument("--hypothesis", default=None, help="H1, H+ or H- (truncation side for priors)")
    p.add_argument("--grid", help="from:to:steps evaluation grid")
    p.add_argument("--summary", action="store_true", help="print median and credible interval instead")
    p.add_argument("--level", type=float, default=0.95)
    _add_data(p)
    _add_prior(p)
    _add_sampling(p)
    p.set_defaults(func=cmd_plotdata)
    return parser


# Flags whose values may legitimately start with "-" (negative numbers).
VALUE_FLAGS = {"--q", "--prob", "--elicit-q", "--elicit-prob", "--prior", "--mu", "--sigma", "--grid",
               "--mu-beta", "--sigma-beta"}


def _attach_values(argv: list[str]) -> list[str]:
    """Rewrite ``--q -1,0,1`` as ``--q=-1,0,1`` so argparse does not read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2] in "0123456789.":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    argv = _attach_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "samples", DEFAULT_SAMPLES) < 1000:
            raise UsageError("--samples must be at least 1000")
        if getattr(args, "dof", 1.0) <= 0:
            raise UsageError("--dof must be positive")
        args.func(args, out)
    except (UsageError, ValueError) as exc:
        # library validation failures surface as ValueError
        print(f"abkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"abkit {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
