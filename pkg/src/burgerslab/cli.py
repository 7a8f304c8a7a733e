"""Command-line entry point.

Exit status: 0 when every asserted check passes, 2 when a check fails,
1 on configuration, usage or integration errors.
"""

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import gaussian, rng
from .config import ConfigError, ExperimentConfig, load_config
from .dynamics import IntegrationError, simulate_trajectory, write_trajectory_csv
from .reporting import emit_report, result
from .semigroup import EstimationError
from .spectral import DomainError

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2

SUBCOMMANDS = (
    "simulate",
    "sample-invariant",
    "estimate",
    "verify-commutation",
    "verify-ibp",
    "ratio-scan",
    "inequality-suite",
    "full-acceptance",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--modes", type=int, help="number of retained sine modes N")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dynamics", choices=("burgers", "heat"))
    common.add_argument("--t-final", type=float, dest="t_final", help="simulation horizon")
    common.add_argument("--ensemble", help="reuse a saved ensemble CSV (metadata next to it)")
    common.add_argument("--quick", action="store_true",
                        help="full-acceptance only: reduced Monte-Carlo budgets")

    parser = _Parser(prog="burgerslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=_COMMANDS_HELP[name])
    return parser


_COMMANDS_HELP = {
    "simulate": "one trajectory with its tangent and accumulators",
    "sample-invariant": "ensemble of approximately invariant states",
    "estimate": "P_t, S_t and both gradient estimators at one point",
    "verify-commutation": "derivative/semigroup commutation identity",
    "verify-ibp": "integration by parts (heat) or the integrated identity (Burgers)",
    "ratio-scan": "gradient-to-L^p ratio over a test family",
    "inequality-suite": "interpolation and Agmon margins on random fields",
    "full-acceptance": "every acceptance criterion",
}


def resolve_config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.dynamics is not None:
        changes["dynamics"] = args.dynamics
    if args.modes is not None:
        changes["integrator.n_modes"] = args.modes
    if args.t_final is not None:
        changes["integrator.t_final"] = args.t_final
    return cfg.override(**changes) if changes else cfg


def _estimate_dict(est):
    out = est.to_dict()
    out["valid"] = est.valid
    out["wall_time_s"] = None
    return out


def cmd_simulate(cfg, args, out):
    icfg = cfg.integrator_config()
    h = cfg.parse_field(cfg.experiment.h)
    rec = simulate_trajectory(cfg.parse_field(cfg.experiment.x0), h, icfg)
    write_trajectory_csv(rec, out / "trajectory.csv")
    monotone = bool(np.all(np.diff(rec.fk_integral) >= 0) and np.all(np.diff(rec.l4_83_integral) >= 0))
    data = {
        "steps": len(rec.times) - 1,
        "t_final": float(rec.times[-1]),
        "fk_integral": float(rec.fk_integral[-1]),
        "l4_83_integral": float(rec.l4_83_integral[-1]),
        "ito_integral": float(rec.ito_integral[-1]),
        "cube_pairing_integral": float(rec.cube_pairing_integral[-1]),
        "final_state": rec.states[-1],
        "trajectory_csv": "trajectory.csv",
    }
    return [result("simulate", monotone, data)]


def _ensemble(cfg, args):
    from .invariant import load_ensemble, sample_invariant

    if args.ensemble:
        path = Path(args.ensemble)
        ens = load_ensemble(path, path.with_suffix(".meta.json"))
        if ens.n_modes != cfg.n_modes or ens.dynamics_tag != cfg.dynamics:
            raise ConfigError(f"ensemble {path} has N={ens.n_modes}, {ens.dynamics_tag} dynamics; "
                              f"config asks for N={cfg.n_modes}, {cfg.dynamics}")
        return ens
    e = cfg.ensemble
    return sample_invariant(cfg.integrator_config(), e.burn_in, e.gap, e.count, e.chains,
                            seed=rng.derive_seed(cfg.master_seed, "ensemble"))


def cmd_sample_invariant(cfg, args, out):
    from .invariant import estimate_moment, save_ensemble

    ens = _ensemble(cfg, args)
    save_ensemble(ens, out / "ensemble.csv", out / "ensemble.meta.json")
    energy = estimate_moment(ens, lambda x: np.sum(x * x, axis=-1))
    mode1 = estimate_moment(ens, lambda x: x[:, 0] ** 2)
    data = {"count": len(ens), "restarts": ens.restarts, "burn_in": ens.burn_in, "gap": ens.gap,
            "energy": _estimate_dict(energy), "mode1_second_moment": _estimate_dict(mode1),
            "ensemble_csv": "ensemble.csv"}
    passed = True
    if cfg.dynamics == "heat":
        target = gaussian.truncated_energy(cfg.n_modes)
        data["energy_series_value"] = target
        passed = abs(energy.mean - target) <= 3 * energy.std_error
    return [result("sample_invariant", passed, data)]


def cmd_estimate(cfg, args, out):
    from .semigroup import estimate_pt, estimate_st, grad_pt_tangent, grad_st_bel, paired_difference

    icfg = cfg.integrator_config()
    phi = cfg.phi()
    x = cfg.parse_field(cfg.experiment.x0)
    h = cfg.parse_field(cfg.experiment.h)
    t = cfg.experiment.t
    m = cfg.estimator.m_samples
    seed = cfg.master_seed
    pt = estimate_pt(phi, x, t, m, icfg, seed)
    st = estimate_st(phi, x, t, m, icfg, seed)
    grad = grad_pt_tangent(phi, x, t, h, m, icfg, seed)
    results = [
        result("estimate_pt", pt.valid, _estimate_dict(pt)),
        result("estimate_st", st.valid, _estimate_dict(st)),
        result("grad_pt_tangent", grad.valid, _estimate_dict(grad)),
    ]
    if t > 0 and icfg.noise:
        bel = grad_st_bel(phi, x, t, h, m, icfg, seed)
        data = _estimate_dict(bel)
        passed = bel.valid
        if icfg.k_fk == 0:
            diff = paired_difference(bel, grad)
            data["minus_tangent"] = _estimate_dict(diff)
            passed = passed and abs(diff.mean) <= 3 * diff.std_error
        results.append(result("grad_st_bel", passed, data))
    if cfg.dynamics == "heat" and icfg.noise:
        exact_pt = gaussian.ou_transition_expectation(phi, x, t)
        exact_grad = gaussian.ou_gradient(phi, x, t, h)
        results.append(result("ou_closed_form", abs(pt.mean - exact_pt) <= 3 * pt.std_error
                              and abs(grad.mean - exact_grad) <= 3 * grad.std_error,
                              {"pt": exact_pt, "grad": exact_grad}))
    return results


def cmd_verify_commutation(cfg, args, out):
    from .semigroup import verify_commutation

    rep = verify_commutation(cfg.phi(), cfg.parse_field(cfg.experiment.x0), cfg.experiment.t,
                             cfg.parse_field(cfg.experiment.h), cfg.estimator.m_samples,
                             cfg.integrator_config(), cfg.master_seed, cfg.estimator.s_nodes)
    data = rep.to_dict()
    rows = [(s, est.mean, est.std_error) for s, est in rep.node_estimates]
    return [result("verify_commutation", rep.passed, data, (["s", "mean", "std_error"], rows))]


def cmd_verify_ibp(cfg, args, out):
    from .ibp import ou_ibp_identity_closed_form, verify_ibp_burgers, verify_ibp_gaussian

    ens = _ensemble(cfg, args)
    phi = cfg.phi()
    h = cfg.parse_field(cfg.experiment.h)
    if cfg.dynamics == "heat":
        rep = verify_ibp_gaussian(phi, h, ens)
        lhs, grad, corr = ou_ibp_identity_closed_form(phi, h, cfg.experiment.t)
        identity = abs(lhs - (grad - corr))
        return [
            result("ibp_gaussian", rep.passed, rep.to_dict()),
            result("ou_identity_closed_form", identity <= 1e-12,
                   {"lhs": lhs, "rhs_grad": grad, "rhs_correction": corr, "residual": identity}),
        ]
    rep = verify_ibp_burgers(phi, h, cfg.experiment.t, ens, cfg.integrator_config(),
                             rng.derive_seed(cfg.master_seed, "ibp"), s_nodes=cfg.estimator.s_nodes)
    return [result("ibp_burgers", rep.passed and rep.lhs.valid, rep.to_dict())]


def cmd_ratio_scan(cfg, args, out):
    from .ibp import gaussian_ratio, theorem1_ratio_scan
    from .test_functions import random_family

    family = cfg.family() or random_family(50, cfg.n_modes, rng.derive_seed(cfg.master_seed, "family"))
    ens = _ensemble(cfg, args)
    h = cfg.parse_field(cfg.experiment.h)
    p, delta = cfg.estimator.p, cfg.estimator.delta
    scan = theorem1_ratio_scan(family, h, p, delta, ens, cfg.experiment.h)
    passed = math.isfinite(scan.max_ratio) and all(r >= 0 for _, r in scan.ratios)
    data = {"max_ratio": scan.max_ratio, "p": p, "delta": delta, "h": scan.h_label,
            "skipped": scan.skipped, "members": len(family)}
    if cfg.dynamics == "heat":
        data["gaussian_closed_forms"] = {phi.label: gaussian_ratio(phi, h, p, delta)
                                         for phi in family if phi.label not in scan.skipped}
    table = (["phi_label", "ratio", "std_error"], scan.rows())
    return [result("ratio_scan", passed, data, table)]


def cmd_inequality_suite(cfg, args, out):
    from .inequalities import inequality_suite

    rows = inequality_suite(1000, cfg.n_modes, rng.derive_seed(cfg.master_seed, "fields"))
    worst = min(r[-1] for r in rows)
    data = {"cases": len(rows), "worst_margin": worst, "n_modes": cfg.n_modes}
    return [result("inequality_suite", worst >= -1e-9, data,
                   (["case", "alpha", "beta", "gamma", "margin"], rows))]


def cmd_full_acceptance(cfg, args, out):
    from . import acceptance

    scale = acceptance.QUICK if args.quick else acceptance.FULL
    start = [time.perf_counter()]

    def progress(entry):
        now = time.perf_counter()
        status = "PASS" if entry["pass"] else "FAIL"
        print(f"{status} {entry['name']} ({now - start[0]:.1f} s)", file=sys.stderr, flush=True)
        start[0] = now

    return acceptance.run_all(cfg.master_seed, scale, progress)


HANDLERS = {
    "simulate": cmd_simulate,
    "sample-invariant": cmd_sample_invariant,
    "estimate": cmd_estimate,
    "verify-commutation": cmd_verify_commutation,
    "verify-ibp": cmd_verify_ibp,
    "ratio-scan": cmd_ratio_scan,
    "inequality-suite": cmd_inequality_suite,
    "full-acceptance": cmd_full_acceptance,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        results = HANDLERS[args.command](cfg, args, out)
        report = out / f"{args.command}.json"
        passed = emit_report(results, report, cfg.to_flat())
    except (UsageError, ConfigError) as exc:
        print(f"burgerslab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except IntegrationError as exc:
        print(f"burgerslab: integration error at t={exc.time}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (DomainError, EstimationError, ValueError, OSError) as exc:
        print(f"burgerslab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for entry in sorted(results, key=lambda r: r["name"]):
        print(f"{'PASS' if entry['pass'] else 'FAIL'} {entry['name']}")
    print(f"report: {report}")
    return EXIT_OK if passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
