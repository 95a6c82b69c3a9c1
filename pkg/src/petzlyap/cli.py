"""Command-line front end.

Subcommands ``simulate``, ``steady-state``, ``contraction`` and ``cat-demo``
read an optional JSON config, apply command-line overrides, and write CSV
time series plus a JSON report into the output directory.  Reports are
byte-deterministic for a fixed config and seed; wall-clock timings go to a
separate ``*_timings.json``.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 certification
violation.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .cat import (
    commutant_dimension,
    equilibrium_state,
    frame_equivalence_defect,
    kraus_lindblad_consistency,
    sampled_lyapunov_series,
)
from .dynamics import equilibrium_residual, steady_state
from .ensembles import random_density
from .errors import ConfigError, PetzLyapError, TruncationWarning
from .linalg import hermitian_eig
from .states import SINGULAR_TOL, bures_distance, coherent_state, fidelity, ket_to_dm, oscillator_ops
from .suites import contraction_suite, flow_contraction_suite

logger = logging.getLogger("petzlyap")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CERT = 0, 2, 3, 4
LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
CSV_COLUMNS = ("t", "V_bures", "rate_eq14", "rate_fd", "d_trace", "d_bures", "min_eig", "trace_defect")

CROSSCHECK_TOL = 1e-3
EQ_RESIDUAL_TOL = 1e-4
CONVERGED_TOL = 1e-4
COHERENT_FIDELITY_TOL = 1e-5
CONSISTENCY_TOL = 1e-4
CONSISTENCY_MIN_RATIO = 6.0
FRAME_TOL = 1e-10


class CertificationFailed(Exception):
    pass


# -- output helpers ----------------------------------------------------------


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def write_json(path: Path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def run_ordered(fn, items, jobs: int) -> list:
    """``[fn(x) for x in items]``, threaded when ``jobs > 1``; order is preserved."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _verdict(passed: bool, **detail) -> dict:
    return {"pass": bool(passed), **detail}


# -- trajectories ------------------------------------------------------------


def trajectory_summary(rep, lyapunov: bool) -> dict:
    """Verdicts recomputable from the CSV columns of one trajectory."""
    out = {
        "label": rep.label,
        "samples": int(len(rep.times)),
        "final_d_trace": rep.d_trace[-1],
        "final_d_bures": rep.d_bures[-1],
        "min_eigenvalue": float(np.min(rep.min_eig)),
        "max_trace_defect": float(np.max(rep.trace_defect)),
        "converged": _verdict(rep.d_bures[-1] < CONVERGED_TOL, tol=CONVERGED_TOL),
    }
    if lyapunov:
        viol = rep.monotone_violation
        max_rate = rep.max_rate
        out["monotone"] = _verdict(viol <= 0.0, worst_violation=viol)
        out["strict_rate"] = _verdict(max_rate < 0.0, max_rate=max_rate, max_positive_excursion=max(max_rate, 0.0))
        out["rate_fd_max_rel_error"] = rep.max_rate_rel_error
    else:
        out["monotone"] = {"pass": None, "notice": "equilibrium not full rank; Lyapunov columns are NaN"}
    return out


def _run_trajectories(gen, rho_inf, states, cfg, lyapunov: bool, prefix: str, out_dir: Path):
    def one(item):
        i, (label, rho0) = item
        try:
            rep = sampled_lyapunov_series(
                gen, rho_inf, rho0, cfg.horizon, cfg.h, cfg.sample_every, label=label, lyapunov=lyapunov
            )
        except (PetzLyapError, ArithmeticError) as exc:
            exc.args = (f"trajectory {i} ({label}): {exc}",)
            raise
        name = f"{prefix}_traj{i:02d}_{label}.csv"
        rows = np.column_stack(
            [rep.times, rep.V, rep.rate, rep.rate_fd, rep.d_trace, rep.d_bures, rep.min_eig, rep.trace_defect]
        )
        write_csv(out_dir / name, CSV_COLUMNS, rows)
        logger.info("trajectory %d (%s): final Bures distance %.3e", i, label, rep.d_bures[-1])
        return {"index": i, "csv": name, **trajectory_summary(rep, lyapunov)}

    return run_ordered(one, list(enumerate(states)), cfg.jobs)


def _steady(gen):
    ss = steady_state(gen)
    lam = float(hermitian_eig(ss.rho).eigenvalues[0])
    return ss, lam, lam > SINGULAR_TOL


def _rank_notice(lam_min: float) -> str:
    return (
        f"equilibrium min eigenvalue {lam_min:.3e} is not above {SINGULAR_TOL:g}; "
        "the Bures Lyapunov function is undefined there and full-rank certification is skipped"
    )


# -- commands ----------------------------------------------------------------


def cmd_simulate(cfg, out_dir: Path, timings: dict) -> int:
    gen = cfgmod.build_generator(cfg)
    states = cfgmod.build_initial_states(cfg)
    t0 = time.perf_counter()
    ss, lam_min, full_rank = _steady(gen)
    timings["steady_state"] = time.perf_counter() - t0
    report = {
        "command": "simulate",
        "config": cfg.echo(),
        "steady_state": {
            "residual": equilibrium_residual(gen, ss.rho),
            "kernel_dimension": ss.kernel_dimension,
            "min_eigenvalue": lam_min,
            "full_rank": full_rank,
        },
        "notices": [] if full_rank else [_rank_notice(lam_min)],
    }
    t0 = time.perf_counter()
    report["trajectories"] = _run_trajectories(gen, ss.rho, states, cfg, full_rank, "simulate", out_dir)
    timings["trajectories"] = time.perf_counter() - t0
    failed = [t["index"] for t in report["trajectories"] if t["monotone"]["pass"] is False or
              (full_rank and not t["strict_rate"]["pass"])]
    report["certified"] = None if not full_rank else not failed
    write_json(out_dir / "simulate_report.json", report)
    if failed:
        raise CertificationFailed(f"Lyapunov decrease violated on trajectories {failed}")
    return EXIT_OK


def cmd_steady_state(cfg, out_dir: Path, timings: dict) -> int:
    gen = cfgmod.build_generator(cfg)
    t0 = time.perf_counter()
    ss, lam_min, full_rank = _steady(gen)
    timings["steady_state"] = time.perf_counter() - t0
    p = cfg.params
    report = {
        "command": "steady-state",
        "config": cfg.echo(),
        "rho_inf": cfgmod.complex_matrix_to_json(ss.rho),
        "residual": equilibrium_residual(gen, ss.rho),
        "kernel_dimension": ss.kernel_dimension,
        "min_eigenvalue": lam_min,
        "full_rank": full_rank,
        "checks": {},
    }
    checks = report["checks"]
    if cfg.model == "photon_loss":
        vac = ket_to_dm(oscillator_ops(p.nmax).identity[:, 0])
        checks["vacuum_fidelity"] = {"value": fidelity(ss.rho, vac)}
    elif cfg.model == "eq18" and p.kappa_c > 0:
        t0 = time.perf_counter()
        rho_eq = equilibrium_state(p, cfg.equilibrium_nodes)
        timings["equilibrium_state"] = time.perf_counter() - t0
        dist = bures_distance(ss.rho, rho_eq)
        checks["equilibrium_crosscheck"] = _verdict(
            dist < CROSSCHECK_TOL,
            bures_distance=dist,
            tol=CROSSCHECK_TOL,
            mixture_residual=equilibrium_residual(gen, rho_eq),
            nodes=cfg.equilibrium_nodes,
        )
    elif cfg.model in ("eq16", "eq18"):
        kap = p.kappa
        alpha = 2.0 * p.beta / kap
        target = ket_to_dm(coherent_state(alpha, p.nmax))
        fid = fidelity(ss.rho, target)
        checks["coherent_fidelity"] = _verdict(
            fid > 1.0 - COHERENT_FIDELITY_TOL, alpha=alpha, fidelity=fid, tol=COHERENT_FIDELITY_TOL
        )
    write_json(out_dir / "steady_state.json", report)
    bad = [k for k, v in checks.items() if v.get("pass") is False]
    if bad:
        raise CertificationFailed(f"steady-state checks failed: {bad}")
    return EXIT_OK


def cmd_contraction(cfg, out_dir: Path, timings: dict) -> int:
    c = cfg.contraction
    extra = () if cfg.measure is None else (cfg.measure,)

    def channel_suite(_):
        return contraction_suite(
            seed=cfg.seed, channels=c.channels, pairs=c.pairs, dim=c.dim, kinds=c.kinds,
            unitary_only=c.unitary_only, measures=c.measures, dual_checks=c.dual_checks, slack=c.slack,
        )

    def flow_suite(_):
        if c.flow_generators == 0:
            return None
        return flow_contraction_suite(
            seed=cfg.seed, measures=c.measures, generators=c.flow_generators, dim=c.flow_dim,
            t_end=c.flow_t_end, h=c.flow_h, extra_measures=extra,
        )

    t0 = time.perf_counter()
    chan, flow = run_ordered(lambda f: f(None), [channel_suite, flow_suite], cfg.jobs)
    timings["suites"] = time.perf_counter() - t0
    total = chan["total_violations"] + (flow["violations"] if flow else 0)
    report = {
        "command": "contraction",
        "config": cfg.echo(),
        "channels": chan,
        "lindblad_flow": flow,
        "total_violations": total,
    }
    write_json(out_dir / "contraction_report.json", report)
    if total:
        raise CertificationFailed(f"{total} contraction violations")
    return EXIT_OK


def cmd_cat_demo(cfg, out_dir: Path, timings: dict) -> int:
    cfg.model = "eq18"
    p = cfg.params
    verdicts, notices = {}, []
    report = {"command": "cat-demo", "config": cfg.echo(), "alpha_c": p.alpha_c, "verdicts": verdicts,
              "notices": notices}
    report["truncation_ok"] = p.check_truncation()

    t0 = time.perf_counter()
    d_full = kraus_lindblad_consistency(0.05, 0.05, nmax=p.nmax)
    d_half = kraus_lindblad_consistency(0.025, 0.025, nmax=p.nmax)
    ratio = d_full / d_half if d_half > 0 else math.inf
    verdicts["kraus_lindblad_consistency"] = _verdict(
        d_full < CONSISTENCY_TOL and ratio >= CONSISTENCY_MIN_RATIO,
        defect=d_full, defect_halved=d_half, ratio=ratio, tol=CONSISTENCY_TOL, min_ratio=CONSISTENCY_MIN_RATIO,
    )
    rng = np.random.default_rng(cfg.seed)
    frame = max(frame_equivalence_defect(p, random_density(p.nmax + 1, rng), 5) for _ in range(3))
    verdicts["frame_equivalence"] = _verdict(frame < FRAME_TOL, defect=frame, tol=FRAME_TOL)
    timings["discrete_checks"] = time.perf_counter() - t0

    gen = cfgmod.build_generator(cfg)
    t0 = time.perf_counter()
    ss, lam_min, full_rank = _steady(gen)
    timings["steady_state"] = time.perf_counter() - t0
    report["steady_state"] = {
        "residual": equilibrium_residual(gen, ss.rho),
        "kernel_dimension": ss.kernel_dimension,
        "min_eigenvalue": lam_min,
        "full_rank": full_rank,
    }
    if p.kappa_c > 0:
        t0 = time.perf_counter()
        rho_eq = equilibrium_state(p, cfg.equilibrium_nodes)
        timings["equilibrium_state"] = time.perf_counter() - t0
        dist = bures_distance(ss.rho, rho_eq)
        res = equilibrium_residual(gen, rho_eq)
        verdicts["equilibrium_crosscheck"] = _verdict(
            dist < CROSSCHECK_TOL and res < EQ_RESIDUAL_TOL,
            bures_distance=dist, mixture_residual=res, tol=CROSSCHECK_TOL, residual_tol=EQ_RESIDUAL_TOL,
        )
    else:
        notices.append("kappa_c = 0: the equilibrium is the pure coherent state |alpha_c>, which is rank deficient")
        target = ket_to_dm(coherent_state(p.alpha_c, p.nmax))
        fid = fidelity(ss.rho, target)
        verdicts["coherent_equilibrium"] = _verdict(
            fid > 1.0 - COHERENT_FIDELITY_TOL, fidelity=fid, tol=COHERENT_FIDELITY_TOL
        )
    if not full_rank:
        notices.append(_rank_notice(lam_min))
    elif p.kappa_c == 0:
        # any positive spectrum here is a truncation artifact of a pure state
        full_rank = False
        notices.append("full-rank certification skipped: without photon loss the equilibrium is pure")

    states = cfgmod.build_initial_states(cfg)
    t0 = time.perf_counter()
    trajs = _run_trajectories(gen, ss.rho, states, cfg, full_rank, "cat_demo", out_dir)
    timings["trajectories"] = time.perf_counter() - t0
    report["trajectories"] = trajs
    verdicts["convergence"] = _verdict(
        all(t["converged"]["pass"] for t in trajs),
        worst_final_d_bures=max(t["final_d_bures"] for t in trajs), tol=CONVERGED_TOL,
    )
    if full_rank:
        verdicts["lyapunov_certification"] = _verdict(
            all(t["monotone"]["pass"] and t["strict_rate"]["pass"] for t in trajs),
            worst_violation=max(t["monotone"]["worst_violation"] for t in trajs),
            max_rate=max(t["strict_rate"]["max_rate"] for t in trajs),
        )
    else:
        verdicts["lyapunov_certification"] = {"pass": None, "skipped": True}

    t0 = time.perf_counter()
    cdim = commutant_dimension(oscillator_ops(p.nmax).a)
    timings["commutant"] = time.perf_counter() - t0
    verdicts["commutant_dimension"] = _verdict(cdim == 1, value=cdim)

    failed = sorted(k for k, v in verdicts.items() if v["pass"] is False)
    report["failed"] = failed
    write_json(out_dir / "cat_demo_report.json", report)
    for k in sorted(verdicts):
        v = verdicts[k]["pass"]
        print(f"{k}: {'skipped' if v is None else 'pass' if v else 'FAIL'}")
    if failed:
        raise CertificationFailed(f"failed verdicts: {failed}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "steady-state": cmd_steady_state,
    "contraction": cmd_contraction,
    "cat-demo": cmd_cat_demo,
}


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="petzlyap", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--nmax", type=int)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--kappa", type=float)
        sp.add_argument("--kappa-c", dest="kappa_c", type=float)
        sp.add_argument("--h", type=float)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--output-dir", dest="output_dir")
    return parser


def setup_logging() -> None:
    level_name = os.environ.get("LYAP_LOG", "info").strip().lower()
    if level_name not in LOG_LEVELS:
        raise ConfigError(f"LYAP_LOG must be one of {sorted(LOG_LEVELS)}, got {level_name!r}")
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("petzlyap")
    root.handlers[:] = [handler]
    root.setLevel(LOG_LEVELS[level_name])
    root.propagate = False


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging()
        cfg = cfgmod.load_config(args.config)
        overrides = {k: getattr(args, k) for k in cfgmod.OVERRIDES}
        cfg = cfgmod.check(cfgmod.apply_overrides(cfg, **overrides))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    prefix = args.command.replace("-", "_")
    code = EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        t0 = time.perf_counter()
        try:
            code = COMMANDS[args.command](cfg, out_dir, timings)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except CertificationFailed as exc:
            print(f"certification violation: {exc}", file=sys.stderr)
            code = EXIT_CERT
        except (PetzLyapError, ArithmeticError, np.linalg.LinAlgError) as exc:
            print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        timings["total"] = time.perf_counter() - t0
    msgs = sorted({str(w.message) for w in caught if issubclass(w.category, TruncationWarning)})
    for m in msgs:
        logger.warning("truncation: %s", m)
    if msgs:
        _attach_warnings(out_dir, prefix, msgs)
    write_json(out_dir / f"{prefix}_timings.json", timings)
    return code


def _attach_warnings(out_dir: Path, prefix: str, msgs) -> None:
    # surface truncation warnings inside the command's JSON report
    names = {"simulate": "simulate_report.json", "steady_state": "steady_state.json",
             "contraction": "contraction_report.json", "cat_demo": "cat_demo_report.json"}
    path = out_dir / names[prefix]
    if not path.exists():
        return
    data = json.loads(path.read_text())
    data["truncation_warnings"] = list(msgs)
    write_json(path, data)


if __name__ == "__main__":
    sys.exit(main())
