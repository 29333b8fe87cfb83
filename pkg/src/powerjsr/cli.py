"""Command line front end: ``powerjsr {estimate,simulate,check}``.

Exit codes: 0 bounded (or estimate/check succeeded), 10 diverged,
20 inconclusive, 64 usage error, 65 bad scenario data, 70 internal error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field, replace

from . import __version__
from ._backend import BACKEND
from .jsr import (
    BudgetExceeded,
    CertificateError,
    JsrEstimate,
    StabilityCertificate,
    UpdateSet,
    brute_force_bounds,
    certificate_from_upper,
    gripenberg_certificate,
    scale_set,
)
from .matrix_core import MatrixError, NormKind, norm_equivalence
from .outputs import atomic_write, fmt, summary_csv, write_json, write_trajectory_csv
from .power_control import (
    CProductVerdict,
    CSchedule,
    build_update_set,
    c_product_verdict,
)
from .scenario import JsrConfig, ScenarioConfig, ScenarioError, load_scenario
from .simulator import (
    BoundednessVerdict,
    SwitchingPolicy,
    Verdict,
    run_trajectory,
    verdict,
)

EXIT_BOUNDED = 0
EXIT_DIVERGED = 10
EXIT_INCONCLUSIVE = 20
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70

_MASK64 = (1 << 64) - 1


@dataclass
class RunReport:
    jsr_estimate: JsrEstimate
    c_verdict: CProductVerdict
    certificate: StabilityCertificate | None = None
    verdict: BoundednessVerdict | None = None
    trajectory_refs: list = field(default_factory=list)
    wall_times: dict = field(default_factory=dict)
    budget_capped: bool = False

    def to_dict(self, config: ScenarioConfig, command: str) -> dict:
        est = self.jsr_estimate
        out = {
            "command": command,
            "scenario": config.name,
            "scheme": config.scheme.value if config.power_mode else None,
            "jsr": {
                "lower": fmt(est.lower),
                "upper": fmt(est.upper),
                "witness": list(est.witness),
                "depth_explored": est.depth_explored,
                "products_evaluated": est.products_evaluated,
                "norm": est.norm_used.value,
                "conclusive": est.conclusive,
            },
            "c_product": self.c_verdict.value,
            "certificate": None,
            "verdict": None,
            "trajectories": list(self.trajectory_refs),
            "budget_capped": self.budget_capped,
            "wall_times": {k: round(v, 6) for k, v in self.wall_times.items()},
        }
        if self.certificate is not None:
            out["certificate"] = {
                "C": fmt(self.certificate.C),
                "gamma": fmt(self.certificate.gamma),
                "depth": self.certificate.depth,
                "norm": self.certificate.norm_used.value,
            }
        if self.verdict is not None:
            v = self.verdict
            out["verdict"] = {
                "tag": v.tag.value,
                "decay_rate": None if v.decay_rate is None else fmt(v.decay_rate),
                "crossing_step": v.crossing_step,
                "crossing_trajectory": v.crossing_trajectory,
            }
        return out


def update_sets(config: ScenarioConfig) -> tuple[UpdateSet, UpdateSet]:
    """``(base, scaled)``: the c-free alphabet and the set whose JSR is tested.

    The scaled set multiplies every member by the largest ``c(n)`` over the
    run, so a bound on its JSR covers every time-varying choice of ``c``.
    """
    if config.power_mode:
        base = build_update_set(config.gain_matrices(), CSchedule.constant(1.0), config.scheme)
    else:
        base = config.raw_set()
    c_max = config.c_schedule.envelope(config.steps)
    return base, (base if c_max == 1.0 else scale_set(base, c_max))


def estimate_phase(bset: UpdateSet, jcfg: JsrConfig):
    """Gripenberg bracket plus an explicit certificate when ``upper < 1``."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BudgetExceeded)
        est, cert = gripenberg_certificate(bset, jcfg.delta, jcfg.norm, jcfg.budget)
        if cert is None and est.upper < 1.0:
            bf = brute_force_bounds(bset, jcfg.depth, jcfg.norm, jcfg.budget)
            if bf.upper < 1.0:
                try:
                    cert = certificate_from_upper(bset, bf.upper, jcfg.norm, jcfg.depth, jcfg.budget)
                except CertificateError:
                    pass
    capped = not est.conclusive or any(issubclass(w.category, BudgetExceeded) for w in caught)
    return est, cert, capped


def _print_estimate(est: JsrEstimate, out) -> None:
    print(f"lower={fmt(est.lower)} upper={fmt(est.upper)}", file=out)
    print(f"witness={','.join(map(str, est.witness))} (length {len(est.witness)})", file=out)
    print(
        f"norm={est.norm_used.value} depth_explored={est.depth_explored} "
        f"products={est.products_evaluated} conclusive={'yes' if est.conclusive else 'no'}",
        file=out,
    )


def cmd_estimate(config: ScenarioConfig, out_dir: str, out=None) -> tuple[RunReport, int]:
    out = out or sys.stdout
    t0 = time.perf_counter()
    _, bset = update_sets(config)
    est, cert, capped = estimate_phase(bset, config.jsr)
    report = RunReport(est, c_product_verdict(config.c_schedule, config.steps), cert, budget_capped=capped)
    report.wall_times["estimate"] = time.perf_counter() - t0
    _print_estimate(est, out)
    if est.upper < 1.0:
        print("certification: upper < 1", file=out)
    else:
        print(f"certification: refused (upper={fmt(est.upper)} >= 1)", file=out)
    _write_report(config, out_dir, "estimate", report)
    return report, EXIT_BOUNDED if est.conclusive else EXIT_INCONCLUSIVE


def cmd_check(config: ScenarioConfig, out_dir: str, out=None) -> tuple[RunReport, int]:
    """Both hypotheses of the boundedness theorem, without simulating."""
    out = out or sys.stdout
    t0 = time.perf_counter()
    _, bset = update_sets(config)
    est, cert, capped = estimate_phase(bset, config.jsr)
    c_verdict = c_product_verdict(config.c_schedule, config.steps)
    report = RunReport(est, c_verdict, cert, budget_capped=capped)
    report.wall_times["check"] = time.perf_counter() - t0
    print(f"c-product: {c_verdict.value}", file=out)
    print(f"rho(B): lower={fmt(est.lower)} upper={fmt(est.upper)}", file=out)
    code = EXIT_INCONCLUSIVE
    if c_verdict is not CProductVerdict.BOUNDED:
        print(f"conclusion withheld: c-product is {c_verdict.value}", file=out)
    elif est.upper < 1.0:
        print("Theorem applies: bounded", file=out)
        code = EXIT_BOUNDED
    elif est.lower > 1.0:
        word = ",".join(map(str, est.witness))
        print(f"Theorem silent (sufficiency only); instability witness available: {word}", file=out)
    else:
        print("Theorem silent (sufficiency only); bracket straddles 1", file=out)
    if cert is not None:
        print(f"certificate: C={fmt(cert.C)} gamma={fmt(cert.gamma)} (depth {cert.depth})", file=out)
    _write_report(config, out_dir, "check", report)
    return report, code


def ensemble_policies(config: ScenarioConfig, witness) -> list[tuple[str, SwitchingPolicy]]:
    sw = config.switching
    out = []
    if sw.kind == "iid_uniform":
        for k in range(config.ensemble.random):
            seed = (config.seed + k) & _MASK64
            out.append((str(seed), SwitchingPolicy.iid_uniform(seed)))
    elif sw.kind == "cyclic":
        out.append(("cyclic", sw))
    else:
        out.append(("greedy", sw))
    if config.ensemble.greedy and sw.kind != "greedy_adversarial":
        out.append(("greedy", SwitchingPolicy.greedy_adversarial(config.jsr.norm)))
    if config.ensemble.witness and witness:
        out.append(("witness", SwitchingPolicy.witness_replay(witness)))
    return out


def run_ensemble(config: ScenarioConfig, base: UpdateSet, witness):
    gains = config.gain_matrices() if config.power_mode else None
    runs = []
    for tag, policy in ensemble_policies(config, witness):
        traj = run_trajectory(
            base,
            config.c_schedule,
            policy,
            config.p0,
            config.steps,
            gains=gains,
            diverge=config.thresholds.diverge,
            absorb=config.thresholds.absorb,
        )
        runs.append((tag, traj))
    return runs


def cmd_simulate(config: ScenarioConfig, out_dir: str, out=None) -> tuple[RunReport, int]:
    out = out or sys.stdout
    t0 = time.perf_counter()
    base, bset = update_sets(config)
    est, cert, capped = estimate_phase(bset, config.jsr)
    t1 = time.perf_counter()
    runs = run_ensemble(config, base, est.witness)
    t2 = time.perf_counter()
    result = verdict(
        bset,
        config.c_schedule,
        est,
        [traj for _, traj in runs],
        threshold=config.thresholds.diverge,
        horizon=config.steps,
        certificate=cert,
    )
    os.makedirs(out_dir, exist_ok=True)
    refs = []
    for tag, traj in runs:
        path = os.path.join(out_dir, f"{config.name}-{tag}.csv")
        write_trajectory_csv(path, traj)
        refs.append(path)
    atomic_write(os.path.join(out_dir, f"{config.name}-summary.csv"), summary_csv(runs))
    report = RunReport(
        est, result.c_verdict, cert, result, refs,
        {"estimate": t1 - t0, "simulate": t2 - t1, "output": time.perf_counter() - t2},
        capped,
    )
    _print_estimate(est, out)
    print(f"c-product: {result.c_verdict.value}", file=out)
    if cert is not None:
        kappa = norm_equivalence(cert.norm_used, base.dim)
        print(f"certificate: C={fmt(cert.C)} gamma={fmt(cert.gamma)} kappa={fmt(kappa)}", file=out)
    for (tag, traj) in runs:
        print(f"trajectory {tag}: status={traj.status} final_norm={fmt(traj.norms[-1])}", file=out)
    line = f"verdict: {result.tag.value}"
    if result.decay_rate is not None:
        line += f" decay_rate={fmt(result.decay_rate)}"
    if result.crossing_step is not None:
        line += f" crossing_step={result.crossing_step} (trajectory {runs[result.crossing_trajectory][0]})"
    print(line, file=out)
    _write_report(config, out_dir, "simulate", report)
    code = {
        Verdict.CERTIFIED_BOUNDED: EXIT_BOUNDED,
        Verdict.EMPIRICALLY_BOUNDED: EXIT_BOUNDED,
        Verdict.DIVERGED: EXIT_DIVERGED,
        Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
    }[result.tag]
    return report, code


def _write_report(config, out_dir, command, report):
    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, f"{config.name}-{command}-report.json"), report.to_dict(config, command))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    value = int(text)
    if not 0 <= value <= _MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text):
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError("must be a positive number")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="powerjsr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario file (YAML or JSON)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--steps", type=_positive_int)
    common.add_argument("--delta", type=_positive_float)
    common.add_argument("--norm", choices=[k.value for k in NormKind])
    common.add_argument("--depth", type=_positive_int)
    common.add_argument("--budget", type=_positive_int)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("estimate", parents=[common], help="bracket the joint spectral radius")
    sub.add_parser("simulate", parents=[common], help="estimate, simulate an ensemble, give a verdict")
    sub.add_parser("check", parents=[common], help="check both boundedness hypotheses")
    return parser


def apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    jsr = config.jsr
    for key in ("delta", "depth", "budget"):
        if getattr(args, key) is not None:
            jsr = replace(jsr, **{key: getattr(args, key)})
    if args.norm is not None:
        jsr = replace(jsr, norm=NormKind.parse(args.norm))
    config = replace(config, jsr=jsr)
    if args.steps is not None:
        config = replace(config, steps=args.steps)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
        if config.switching.kind == "iid_uniform":
            config = replace(config, switching=SwitchingPolicy.iid_uniform(args.seed))
    return config


COMMANDS = {"estimate": cmd_estimate, "simulate": cmd_simulate, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = apply_overrides(load_scenario(args.scenario), args)
        _, code = COMMANDS[args.command](config, args.out)
    except (ScenarioError, MatrixError) as exc:
        print(f"powerjsr: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"powerjsr: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"powerjsr: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return code


if __name__ == "__main__":
    sys.exit(main())
