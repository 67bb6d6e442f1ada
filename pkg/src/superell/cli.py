import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from rich.console import Console

from superell.config import Settings
from superell.curvemodel import SuperellipticModel, profile
from superell.errors import ConfigError, SuperellError
from superell.ff import make_field
from superell.models import (
    ExperimentConfig,
    ExperimentReport,
    Mode,
    Statistic,
    SubsetFilter,
    field_record,
)
from superell.orchestrator import ExperimentOrchestrator, package_version
from superell.parser import PolynomialParser, parse_int_list, parse_range
from superell.reporter import ReportGenerator
from superell.theorydist import (
    TheoremParams,
    Variant,
    printed_normalization_masses,
    total_dist,
    trigonal_contrast,
    xj,
)
from superell.verifier import LemmaVerifier

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

SUITES = ("counting", "local", "theory", "printed")


def _add_field_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", type=int, required=True, help="Characteristic (prime)")
    parser.add_argument("--k", type=int, default=1, help="Extension degree, q = p^k")


def _add_curve_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--m", type=int, default=2, help="Exponent of y in y^m = f(x)")
    parser.add_argument("--n", type=int, default=2, help="Admit n-th power-free f")
    parser.add_argument(
        "--variant",
        choices=[v.value for v in Variant],
        default=Variant.SINGULAR.value,
        help="Count points on the affine model or on its normalization",
    )


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", choices=["json", "csv", "table"], default="json")
    parser.add_argument("--output", type=Path, help="Write the report here instead of stdout")
    parser.add_argument("--quiet", action="store_true", help="No progress on stderr")
    parser.add_argument(
        "--reproducible",
        action="store_true",
        help="Omit wall-clock time so identical runs give identical reports",
    )


def _add_scan_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--d", type=int, help="Degree of f")
    parser.add_argument(
        "--statistic",
        choices=[s.value for s in Statistic],
        default=Statistic.TOTAL.value,
    )
    parser.add_argument(
        "--filter",
        dest="subset",
        choices=[f.value for f in SubsetFilter],
        default=SubsetFilter.ALL.value,
    )
    parser.add_argument("--site", type=int, default=0, help="Element index for --statistic marginal")
    parser.add_argument("--seed", type=int, default=0, help="64-bit seed for all randomness")
    parser.add_argument("--budget", type=int, help="Maximum polynomials per exhaustive scan")
    parser.add_argument("--threads", type=int, default=None, help="Worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superell",
        description="Point counts on superelliptic curves y^m = f(x) over finite fields",
    )
    parser.add_argument("--version", action="version", version=package_version())
    sub = parser.add_subparsers(dest="command", required=True)

    theory = sub.add_parser("theory", help="Print the limiting per-site or total law")
    _add_field_flags(theory)
    _add_curve_flags(theory)
    theory.add_argument(
        "--statistic",
        choices=[Statistic.MARGINAL.value, Statistic.TOTAL.value],
        default=Statistic.MARGINAL.value,
        help="Per-site law (default) or the law of the total over all q sites",
    )
    theory.add_argument(
        "--printed-form",
        action="store_true",
        help="Also report the unweighted P(0) masses of the normalization law",
    )
    _add_output_flags(theory)

    scan = sub.add_parser("scan", help="Exhaustive scan of one degree or a degree range")
    _add_field_flags(scan)
    _add_curve_flags(scan)
    _add_scan_flags(scan)
    scan.add_argument("--d-range", help="Degrees a..b for a convergence table")
    scan.add_argument("--gate", type=float, help="Largest acceptable TV at the top degree")
    _add_output_flags(scan)

    sample = sub.add_parser("sample", help="Seeded Monte-Carlo estimate")
    _add_field_flags(sample)
    _add_curve_flags(sample)
    _add_scan_flags(sample)
    sample.add_argument("--samples", type=int, required=True)
    _add_output_flags(sample)

    verify = sub.add_parser("verify", help="Exact verification suites")
    verify.add_argument("--suite", choices=SUITES, required=True)
    verify.add_argument("--p", type=int, help="Characteristic (with --k gives a single q)")
    verify.add_argument("--k", type=int, default=1)
    verify.add_argument("--q-list", help="Field orders, e.g. 3,4,5 or 3..9")
    verify.add_argument("--m", type=int, default=2)
    verify.add_argument("--m-range", help="Exponents for the local suite, e.g. 2..8")
    verify.add_argument("--n", type=int, default=2)
    verify.add_argument("--n-range", help="Power-free exponents for the counting suite")
    verify.add_argument("--d", type=int, help="Degree of the adjudication scan (printed suite)")
    verify.add_argument("--d-range", help="Degrees for the counting suite, e.g. 2..8")
    verify.add_argument("--s-range", default="0..8", help="Valuations for the local suite")
    verify.add_argument("--samples", type=int, default=20, help="Sampled tuples per case")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--budget", type=int)
    verify.add_argument("--threads", type=int, default=None)
    _add_output_flags(verify)

    contrast = sub.add_parser("contrast", help="Trigonal laws: degree limit vs signature limit")
    _add_field_flags(contrast)
    _add_output_flags(contrast)

    prof = sub.add_parser("profile", help="Per-x point data for one polynomial")
    _add_field_flags(prof)
    prof.add_argument("--m", type=int, default=2)
    prof.add_argument("--n", type=int, default=2)
    prof.add_argument("--poly", required=True, help="Coefficients low to high, e.g. 1,0,2")
    _add_output_flags(prof)

    return parser


def _settings(args: argparse.Namespace) -> Settings:
    settings = Settings.from_env()
    budget = getattr(args, "budget", None)
    if budget is not None:
        if budget < 1:
            raise ConfigError(f"--budget: must be >= 1, got {budget}")
        settings = replace(settings, budget=budget)
    return settings


def _threads(args: argparse.Namespace) -> Optional[int]:
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 1:
        raise ConfigError(f"--threads: must be >= 1, got {threads}")
    return threads


def _config(args: argparse.Namespace, mode: Mode) -> ExperimentConfig:
    if args.d is None:
        raise ConfigError("--d: a degree is required")
    return ExperimentConfig(
        p=args.p,
        k=args.k,
        m=args.m,
        n=args.n,
        d=args.d,
        variant=Variant(args.variant),
        statistic=Statistic(args.statistic),
        mode=mode,
        samples=getattr(args, "samples", 0) or 0,
        seed=args.seed,
        subset=SubsetFilter(args.subset),
        site=args.site,
    )


def _orchestrator(args: argparse.Namespace, console: Console) -> ExperimentOrchestrator:
    return ExperimentOrchestrator(
        settings=_settings(args),
        max_workers=_threads(args),
        console=console,
        reproducible=args.reproducible,
    )


def cmd_theory(args: argparse.Namespace, console: Console) -> ExperimentReport:
    spec = make_field(args.p, args.k, max_order=_settings(args).max_field_order)
    params = TheoremParams(spec.q, args.m, args.n, Variant(args.variant))
    site = xj(params)
    dist = total_dist(site, spec.q) if args.statistic == Statistic.TOTAL.value else site
    report = ExperimentReport(
        kind="theory",
        config={
            "p": args.p,
            "k": args.k,
            "q": spec.q,
            "m": args.m,
            "n": args.n,
            "variant": args.variant,
            "statistic": args.statistic,
        },
        field_info=field_record(spec.p, spec.k, spec.modulus_str),
        theory=list(dist.items()),
        mean=dist.mean(),
        version=package_version(),
    )
    if args.printed_form:
        if params.variant is not Variant.NORMALIZATION:
            raise ConfigError("--printed-form: only defined for --variant normalization")
        report.extras["printed"] = [
            {"outcome": k, "num": str(v.numerator), "den": str(v.denominator)}
            for k, v in printed_normalization_masses(params).items()
        ]
    return report


def cmd_scan(args: argparse.Namespace, console: Console) -> ExperimentReport:
    orchestrator = _orchestrator(args, console)
    if args.d_range:
        degrees = parse_range(args.d_range)
        config = _config(argparse.Namespace(**{**vars(args), "d": degrees[0]}), Mode.EXHAUSTIVE)
        return orchestrator.convergence_scan(config, degrees, gate=args.gate)
    return orchestrator.run_exhaustive(_config(args, Mode.EXHAUSTIVE))


def cmd_sample(args: argparse.Namespace, console: Console) -> ExperimentReport:
    orchestrator = _orchestrator(args, console)
    return orchestrator.run_montecarlo(_config(args, Mode.MONTECARLO))


def _field_orders(args: argparse.Namespace) -> list[int]:
    if args.q_list:
        return parse_int_list(args.q_list)
    if args.p is None:
        raise ConfigError("--p/--q-list: give a field or a list of field orders")
    return [make_field(args.p, args.k, max_order=_settings(args).max_field_order).q]


def cmd_verify(args: argparse.Namespace, console: Console) -> ExperimentReport:
    settings = _settings(args)
    verifier = LemmaVerifier(
        settings=settings,
        console=console,
        version=package_version(),
        reproducible=args.reproducible,
        max_workers=_threads(args),
    )
    if args.suite == "theory":
        return verifier.verify_theory_identities()
    if args.suite == "local":
        ms = parse_int_list(args.m_range) if args.m_range else [args.m]
        return verifier.verify_local_lemma(_field_orders(args), ms, parse_int_list(args.s_range))
    if args.suite == "counting":
        if not args.d_range and args.d is None:
            raise ConfigError("--d-range: the counting suite needs degrees")
        ds = parse_int_list(args.d_range) if args.d_range else [args.d]
        ns = parse_int_list(args.n_range) if args.n_range else [args.n]
        if args.samples < 0:
            raise ConfigError(f"--samples: must be >= 0, got {args.samples}")
        return verifier.verify_counting_lemmas(
            _field_orders(args), ns, ds, samples=args.samples, seed=args.seed
        )

    if args.p is None:
        raise ConfigError("--p: the printed suite needs a field")
    spec = make_field(args.p, args.k, max_order=_settings(args).max_field_order)
    params = TheoremParams(spec.q, args.m, args.n, Variant.NORMALIZATION)
    empirical = None
    if args.d is not None:
        orchestrator = ExperimentOrchestrator(
            settings=settings,
            max_workers=_threads(args),
            console=console,
            reproducible=args.reproducible,
        )
        scan = orchestrator.run_exhaustive(
            ExperimentConfig(
                p=args.p,
                k=args.k,
                m=args.m,
                n=args.n,
                d=args.d,
                variant=Variant.NORMALIZATION,
                statistic=Statistic.MARGINAL,
            )
        )
        empirical = scan.histogram
    report = verifier.printed_form_discrepancy(params, empirical)
    report.field_info = field_record(spec.p, spec.k, spec.modulus_str)
    return report


def cmd_contrast(args: argparse.Namespace, console: Console) -> ExperimentReport:
    spec = make_field(args.p, args.k, max_order=_settings(args).max_field_order)
    contrast = trigonal_contrast(spec.q)
    outcomes = sorted(set(contrast.degree_limit) | set(contrast.signature_limit))
    cases = [
        {
            "outcome": k,
            "degree_limit": str(contrast.degree_limit.prob(k)),
            "signature_limit": str(contrast.signature_limit.prob(k)),
            "difference": str(contrast.degree_limit.prob(k) - contrast.signature_limit.prob(k)),
        }
        for k in outcomes
    ]
    return ExperimentReport(
        kind="contrast",
        config={"p": args.p, "k": args.k, "q": spec.q, "m": 3, "n": 3},
        field_info=field_record(spec.p, spec.k, spec.modulus_str),
        theory=list(contrast.degree_limit.items()),
        mean=contrast.degree_limit.mean(),
        version=package_version(),
        cases=cases,
        extras={"signature_limit": contrast.signature_limit.to_json()},
    )


def cmd_profile(args: argparse.Namespace, console: Console) -> ExperimentReport:
    spec = make_field(args.p, args.k, max_order=_settings(args).max_field_order)
    f = PolynomialParser(spec).parse(args.poly)
    model = SuperellipticModel(spec, args.m, f)
    data = profile(model, args.n)
    return ExperimentReport(
        kind="profile",
        config={"p": args.p, "k": args.k, "q": spec.q, "m": args.m, "n": args.n, "poly": f.to_text()},
        field_info=field_record(spec.p, spec.k, spec.modulus_str),
        version=package_version(),
        cases=[site.to_dict() for site in data.sites],
        extras={"profile": data.to_dict()},
    )


COMMANDS = {
    "theory": cmd_theory,
    "scan": cmd_scan,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "contrast": cmd_contrast,
    "profile": cmd_profile,
}


def emit(report: ExperimentReport, out: str, output: Optional[Path]) -> None:
    reporter = ReportGenerator()
    if out == "table":
        if output is not None:
            with output.open("w") as fh:
                Console(file=fh, width=120).print(reporter.generate_table(report))
        else:
            Console().print(reporter.generate_table(report))
        return
    text = reporter.generate_json(report) if out == "json" else reporter.generate_csv(report)
    if output is not None:
        output.write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    console = Console(stderr=True, quiet=args.quiet)
    try:
        report = COMMANDS[args.command](args, console)
        emit(report, args.out, args.output)
    except SuperellError as e:
        print(f"superell: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"superell: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if report.passed else EXIT_FAILED
