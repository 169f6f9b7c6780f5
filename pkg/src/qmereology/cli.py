"""Command-line front end: ``qmereology {gpo,correlate,sweep,decohere}``.

Exit codes: 0 success, 1 a requested expectation failed (``--expect-qc``),
2 usage or configuration error.  Every command writes CSV files and a
``manifest.json`` into the output directory (``$QMEREOLOGY_OUTPUT_DIR``
overrides it).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import re
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .config import OUTPUT_ENV, ConfigError, load_config
from .cpo import find_cpo
from .dynamics import decoherence_rates
from .experiments import (CORRELATE_COLUMNS, correlate_ensemble, decoherence_summary,
                          decoherence_trajectory, monitoring_state, pointer_basis_for,
                          random_hermitian)
from .factorization import factorization_unitary, split_hamiltonian, transform_hamiltonian
from .gpo import build_gpo, schwinger_expand, shift_profile
from .mereology import (SWEEP_COLUMNS, build_coupled_oscillators, default_coupling,
                        scrambled_hamiltonian, sweep)

log = logging.getLogger("qmereology")

EXIT_OK, EXIT_EXPECT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(v):
    """17 significant digits for floats (round-trip exact)."""
    if isinstance(v, (bool, np.bool_)):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(outdir, command, config, started, outputs, summary=None):
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "runtime_seconds": time.time() - started,
        "outputs": sorted(outputs),
        "summary": summary or {},
    }
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=fmt)
        fh.write("\n")


def resolve_outdir(cli_value, default="qmereology-output"):
    out = os.environ.get(OUTPUT_ENV) or cli_value or default
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# gpo

_TOKEN = re.compile(r"^(?:(pi|phi)(?:\^(\d+))?|cos\((pi|phi)\)|random\((\d+)\))$")


def parse_operator(spec, g):
    """Build an operator from ``pi^N``, ``phi^N``, ``cos(pi)``, ``cos(phi)``
    or ``random(seed)``."""
    token = spec.strip().replace(" ", "")
    m = _TOKEN.match(token)
    if not m:
        raise UsageError(f"malformed operator spec: {spec!r}")
    base, power, cos_arg, seed = m.groups()
    if base:
        n = 1 if power is None else int(power)
        if n < 1:
            raise UsageError(f"malformed operator spec: power must be >= 1 in {spec!r}")
        return np.linalg.matrix_power(g.pi if base == "pi" else g.phi, n)
    if cos_arg == "pi":
        return 0.5 * (g.shift + g.shift.conj().T)
    if cos_arg == "phi":
        return 0.5 * (g.clock + g.clock.conj().T)
    return random_hermitian(np.random.default_rng(int(seed)), g.d)


def cmd_gpo(args):
    started = time.time()
    try:
        g = build_gpo(args.dim, args.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    specs = args.operator or ["pi^2"]
    ops = [(s, parse_operator(s, g)) for s in specs]
    outdir = resolve_outdir(args.output_dir)
    prof_rows, coll_rows = [], []
    print("a,weight")
    for spec, op in ops:
        p = shift_profile(schwinger_expand(op, g), args.axis)
        for a, w in zip(p.labels, p.weights):
            prof_rows.append((spec, a, w))
            print(f"{a},{fmt(w)}")
        coll_rows.append((spec, p.collimation))
        print(f"# operator={spec} axis={args.axis} collimation={fmt(p.collimation)}")
    write_csv(os.path.join(outdir, "gpo_profile.csv"), ("operator", "a", "weight"), prof_rows)
    write_csv(os.path.join(outdir, "gpo_collimation.csv"), ("operator", "collimation"), coll_rows)
    config = {"dim": args.dim, "alpha": g.alpha, "axis": args.axis, "operators": specs}
    write_manifest(outdir, "gpo", config, started, ["gpo_profile.csv", "gpo_collimation.csv"],
                   {s: c for s, c in coll_rows})
    return EXIT_OK


# ---------------------------------------------------------------------------
# correlate

def cmd_correlate(args):
    started = time.time()
    if args.ensemble < 5:
        raise UsageError(f"--ensemble must be >= 5, got {args.ensemble}")
    try:
        build_gpo(args.dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    outdir = resolve_outdir(args.output_dir)
    res = correlate_ensemble(d=args.dim, n_instances=args.ensemble, seed=args.seed,
                             width=args.width, s_min=args.s_min, n_jobs=args.n_jobs)
    rows = [(int(r[0]),) + tuple(r[1:]) for r in res.rows]
    write_csv(os.path.join(outdir, "correlate.csv"), CORRELATE_COLUMNS, rows)
    summary = {"spearman_collimation_variance_rate": res.spearman_collimation,
               "spearman_s_pointer_ddot_variance_rate": res.spearman_pointer}
    config = {"dim": args.dim, "ensemble": args.ensemble, "seed": args.seed,
              "width": args.width, "s_min": args.s_min}
    write_manifest(outdir, "correlate", config, started, ["correlate.csv"], summary)
    print(f"instances: {args.ensemble}  written to {os.path.join(outdir, 'correlate.csv')}")
    print(f"spearman(collimation, variance_rate) = {res.spearman_collimation:.4f}")
    print(f"spearman(s_pointer_ddot, variance_rate) = {res.spearman_pointer:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep / decohere

def _load(args):
    try:
        cfg = load_config(args.config) if args.config else load_config(text="")
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    try:
        H, split = build_coupled_oscillators(cfg.model, cfg.sweep.qml_guard)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    resolved = {s: dict(v) for s, v in cfg.resolved.items()}
    if cfg.model.lam is None:
        resolved["model"]["lambda"] = fmt(default_coupling(cfg.model))
    return cfg, H, split, resolved


def _echo_config(outdir, cfg, resolved):
    text = replace(cfg, resolved=resolved).to_ini()
    with open(os.path.join(outdir, "config.resolved.ini"), "w", encoding="utf-8") as fh:
        fh.write(text)
    log.info("resolved configuration:\n%s", text.rstrip())


def _cpo_rows(H, record, shape, config):
    """Residual and Gell-Mann coordinates of the CPO of the selected factorization."""
    Hp = transform_hamiltonian(H, factorization_unitary(record.theta, shape.dim))
    split = split_hamiltonian(0.5 * (Hp + Hp.conj().T), shape)
    if split.n_int == 0:
        return []
    seed = np.random.SeedSequence([config.seed, record.index]).generate_state(1)[0]
    cpo = find_cpo(split, config.n_restarts, config.max_iters, config.tol, seed=int(seed))
    rows = [("residual", 0, cpo.residual)]
    rows += [("o_a", k, c) for k, c in enumerate(cpo.coeffs_a)]
    rows += [("o_b", k, c) for k, c in enumerate(cpo.coeffs_b)]
    return rows


def cmd_sweep(args):
    started = time.time()
    cfg, H, _, resolved = _load(args)
    if args.descent:
        cfg = replace(cfg, sweep=replace(cfg.sweep, descent=True))
        resolved["sweep"]["descent"] = "true"
    outdir = resolve_outdir(cfg.output_dir)
    _echo_config(outdir, cfg, resolved)
    shape = cfg.model.shape
    if cfg.scramble > 0:
        H, _ = scrambled_hamiltonian(H, shape, cfg.scramble, cfg.scramble_seed)
    n_jobs = args.n_jobs if args.n_jobs is not None else cfg.n_jobs
    records, argmin = sweep(H, shape, cfg.sweep, n_jobs=n_jobs)
    write_csv(os.path.join(outdir, "sweep.csv"), SWEEP_COLUMNS, [r.row() for r in records])
    best = records[0 if argmin is None else argmin]
    write_csv(os.path.join(outdir, "cpo.csv"), ("quantity", "index", "value"),
              _cpo_rows(H, best, shape, cfg.sweep))
    outputs = ["sweep.csv", "cpo.csv", "config.resolved.ini"]
    if cfg.emit_plots:
        write_csv(os.path.join(outdir, "sweep_plot.csv"), ("theta_norm", "s_schwinger"),
                  [(r.theta_norm, r.s_schwinger) for r in records])
        outputs.append("sweep_plot.csv")
    s = np.array([r.s_schwinger for r in records])
    summary = {"argmin": argmin, "s_schwinger_identity": float(s[0]),
               "s_schwinger_min": float(s.min()), "n_records": len(records),
               "n_qml_violated": sum("qml_violated" in r.flags for r in records)}
    write_manifest(outdir, "sweep", resolved, started, outputs, summary)
    if argmin is None:
        print("argmin: none (every sample violates the QML guard)")
    else:
        print(f"argmin: {argmin}  s_schwinger={fmt(records[argmin].s_schwinger)}  "
              f"identity s_schwinger={fmt(s[0])}")
    if args.expect_qc and argmin != 0:
        print(f"expectation failed: argmin is {argmin}, not the identity factorization",
              file=sys.stderr)
        return EXIT_EXPECT
    return EXIT_OK


def cmd_decohere(args):
    started = time.time()
    cfg, H, split, resolved = _load(args)
    outdir = resolve_outdir(cfg.output_dir)
    _echo_config(outdir, cfg, resolved)
    if args.n_steps < 2:
        raise UsageError(f"--n-steps must be >= 2, got {args.n_steps}")
    basis = pointer_basis_for(split)
    state = monitoring_state(split, basis)
    t_max = args.t_max
    if t_max is None:
        if split.n_int:
            tau = decoherence_rates(split, state).tau
            finite = tau[np.isfinite(tau)]
            t_max = 3.0 * float(finite.max()) if finite.size else 1.0
        else:
            t_max = 1.0
    if not t_max > 0:
        raise UsageError(f"--t-max must be positive, got {t_max}")
    times = np.linspace(0.0, t_max, args.n_steps + 1)
    traj = decoherence_trajectory(split, state, times, basis)
    d = split.shape.d_a
    pairs = [(j, k) for j in range(d) for k in range(j, d)]
    header = ["t"] + [f"abs_rho_{j}_{k}" for j, k in pairs] + ["s_lin"]
    rows = [[t] + [traj.coherences[i, j, k] for j, k in pairs] + [traj.s_lin[i]]
            for i, t in enumerate(times)]
    write_csv(os.path.join(outdir, "decohere.csv"), header, rows)
    outputs = ["decohere.csv", "config.resolved.ini"]
    summary = {"t_max": t_max, "n_steps": args.n_steps, "n_int": split.n_int}
    summary_rows = decoherence_summary(split, state, traj) if split.n_int else []
    write_csv(os.path.join(outdir, "decohere_summary.csv"),
              ("j", "k", "gamma", "gamma_fit", "tau", "tau_trajectory"), summary_rows)
    outputs.append("decohere_summary.csv")
    if split.n_int:
        for j, k, gam, fit, tau, tau_tr in summary_rows:
            print(f"({j},{k}) gamma={gam:.6g} fit={fit:.6g} tau={tau:.6g} "
                  f"tau_trajectory={tau_tr:.6g}")
    else:
        print("no interaction: pointer basis taken from the self-Hamiltonian; nothing decoheres")
    write_manifest(outdir, "decohere", resolved, started, outputs, summary)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="qmereology",
        description="Quasi-classical factorizations of finite-dimensional Hamiltonians.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gpo", help="shift profile and collimation of an operator")
    p.add_argument("--dim", type=int, default=27, help="odd dimension (default 27)")
    p.add_argument("--alpha", type=float, default=None, help="pi eigenvalue scale")
    p.add_argument("--operator", action="append",
                   help="pi^N, phi^N, cos(pi), cos(phi) or random(SEED); repeatable")
    p.add_argument("--axis", choices=("phi", "pi"), default="phi")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_gpo)

    p = sub.add_parser("correlate", help="collimation vs variance-rate ensemble")
    p.add_argument("--dim", type=int, default=27)
    p.add_argument("--ensemble", type=int, default=30, help="number of self-Hamiltonians")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=float, default=1.0, help="Gaussian probe width")
    p.add_argument("--s-min", type=float, default=1e-3, help="smallest random admixture")
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("sweep", help="search factorizations of the coupled oscillators")
    p.add_argument("--config", default=None, help="INI configuration file")
    p.add_argument("--expect-qc", action="store_true",
                   help="exit 1 unless the identity factorization wins")
    p.add_argument("--descent", action="store_true", help="greedy accept/reject walk")
    p.add_argument("--n-jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decohere", help="pointer-basis coherence trajectory")
    p.add_argument("--config", default=None)
    p.add_argument("--t-max", type=float, default=None,
                   help="final time (default three times the longest decoherence time)")
    p.add_argument("--n-steps", type=int, default=200)
    p.set_defaults(func=cmd_decohere)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qmereology {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
