"""Command-line front end: ``maxmor {evolve,certify,converge,coulomb-check}``.

Exit status: 0 when every check passes, 1 when an invariant or certificate
fails, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import certifier
from .checkpoint import write_checkpoint
from .config import ConfigError, RunConfig, describe_defaults, parse_config
from .evolution import make_initial_data
from .runner import CSV_COLUMNS, MORAWETZ_CONSTANT, RunResult, run_modes, write_csv
from .superenergy import derive_fields

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG = 0, 1, 2
COULOMB_TOL = 1e-12
COULOMB_STEPS = 1000
EQUIVALENCE_BOUNDS = (0.1, 1.9)


def _load(args) -> RunConfig:
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
    overrides: Dict[str, str] = {}
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.threads is not None:
        overrides["threads"] = str(args.threads)
    if args.l_max is not None:
        overrides["l_max"] = str(args.l_max)
    cfg = parse_config(text, overrides)
    if args.resolution_scale is not None:
        cfg = cfg.scaled(args.resolution_scale)
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run(cfg: RunConfig) -> RunResult:
    bg = cfg.background()
    states = make_initial_data(cfg.initial_data(), bg)
    return run_modes(states, cfg.t_final, cfg.cfl, cfg.output_dt, cfg.threads)


def _checks(cfg: RunConfig, res: RunResult) -> List[str]:
    """Invariant violations of a finished run (empty when all hold)."""
    bad = []
    for row in res.rows:
        for c in CSV_COLUMNS:
            if c != "fi_residual" and not math.isfinite(row[c]):
                bad.append(f"non-finite {c} at t={row['t']:.6g}")
                return bad
    E0 = res.E0
    if cfg.family == "coulomb":
        worst = max(abs(row[c]) for row in res.rows for c in CSV_COLUMNS if c != "t" and math.isfinite(row[c]))
        if worst > COULOMB_TOL:
            bad.append(f"Coulomb diagnostics reach {worst:.3g} > {COULOMB_TOL:g}")
        return bad
    if E0 <= 0:
        return bad
    ratio = res.morawetz_ratio()
    if ratio > MORAWETZ_CONSTANT:
        bad.append(f"Morawetz ratio {ratio:.6g} exceeds {MORAWETZ_CONSTANT:g}")
    lo, hi = EQUIVALENCE_BOUNDS
    for row in res.rows:
        q = row["E_xi_Aq"] / row["E_xi"] if row["E_xi"] > 0 else 1.0
        if not lo * (1 - 1e-8) <= q <= hi * (1 + 1e-8):
            bad.append(f"E_xi_Aq/E_xi = {q:.6g} outside [{lo}, {hi}] at t={row['t']:.6g}")
            break
    drift = abs(res.energy_drift())
    if drift > cfg.drift_tol:
        bad.append(f"energy drift {drift:.3g} exceeds drift_tol={cfg.drift_tol:g}")
    cmax = max(row["constraint_residual"] for row in res.rows)
    if cmax > cfg.constraint_tol:
        bad.append(f"constraint residual {cmax:.3g} exceeds constraint_tol={cfg.constraint_tol:g}")
    return bad


def _summary(cfg: RunConfig, res: RunResult) -> str:
    ratio = res.morawetz_ratio()
    fis = [row["fi_residual"] for row in res.rows if math.isfinite(row["fi_residual"])]
    lines = [
        f"modes            {len(res.tracks)}",
        f"n_points         {cfg.n_points}",
        f"dt               {res.dt:.6g} ({res.nsteps} steps)",
        f"E_xi(0)          {res.E0:.12g}",
        f"energy drift     {res.energy_drift():.3e}",
        f"flux balance     {res.flux_balance():.3e}",
        f"morawetz ratio   {ratio:.6g} (bound {MORAWETZ_CONSTANT:g})",
        f"max constraint   {max(row['constraint_residual'] for row in res.rows):.3e}",
        f"max fi residual  {max(fis) if fis else float('nan'):.3e}",
    ]
    return "\n".join(lines)


def cmd_evolve(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    res = _run(cfg)
    write_csv(out / "diagnostics.csv", res.rows)
    if cfg.checkpoint:
        write_checkpoint(out / "final.chk", res.final_states)
    print(_summary(cfg, res))
    bad = _checks(cfg, res)
    for msg in bad:
        print(f"assertion failed: {msg}", file=sys.stderr)
    return EXIT_ASSERT if bad else EXIT_OK


def cmd_coulomb_check(cfg: RunConfig) -> int:
    """Static charge (q_E = q_B = 1 unless configured) over 1000 steps: everything must vanish."""
    q_E = cfg.q_E if cfg.family == "coulomb" and (cfg.q_E or cfg.q_B) else 1.0
    q_B = cfg.q_B if cfg.family == "coulomb" and (cfg.q_E or cfg.q_B) else 1.0
    bg = cfg.background()
    t_final = COULOMB_STEPS * cfg.cfl * bg.h
    ccfg = RunConfig(**{**cfg.__dict__, "family": "coulomb", "q_E": q_E, "q_B": q_B, "t_final": t_final,
                        "output_dt": t_final / 10})
    res = _run(ccfg)
    out = _out_dir(ccfg)
    write_csv(out / "coulomb.csv", res.rows)
    fields = derive_fields(res.final_states[0])
    pointwise = max(
        float(np.max(np.abs(a)))
        for a in (fields.theta0, fields.theta2, fields.beta_l, fields.beta_n, fields.beta_m, fields.beta_mbar)
    )
    print(f"steps            {res.nsteps}")
    print(f"max |Theta|,|beta| {pointwise:.3e}")
    print(f"morawetz ratio   {res.morawetz_ratio():.6g}")
    bad = _checks(ccfg, res)
    if pointwise > COULOMB_TOL:
        bad.append(f"pointwise fields reach {pointwise:.3g}")
    for msg in bad:
        print(f"assertion failed: {msg}", file=sys.stderr)
    print("coulomb-check " + ("FAIL" if bad else "PASS"))
    return EXIT_ASSERT if bad else EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    reports = certifier.certify_corpus(tail=cfg.tail_radius, depth=cfg.certify_depth, workers=cfg.threads)
    out = _out_dir(cfg)
    text = "\n".join(rep.text() for rep in reports)
    print(text)
    (out / "certificates.txt").write_text(text + "\n")
    (out / "certificates.json").write_text(certifier.reports_json(reports) + "\n")
    failed = [rep.id for rep in reports if not rep.certified]
    print(f"{len(reports) - len(failed)}/{len(reports)} certified")
    return EXIT_ASSERT if failed else EXIT_OK


def richardson_order(values: Sequence[float]) -> Optional[float]:
    """Order from three resolutions (h, h/2, h/4); None when it is undefined."""
    a, b, c = values
    d1, d2 = a - b, b - c
    if not all(math.isfinite(v) for v in values) or d1 == 0 or d2 == 0 or d1 / d2 <= 0:
        return None
    return math.log2(d1 / d2)


def convergence_table(cfg: RunConfig):
    """Values of the monitored errors at resolutions x1, x2, x4 and their orders."""
    results = [_run(cfg.scaled(f)) for f in (1, 2, 4)]

    def fi_last(res):
        vals = [row["fi_residual"] for row in res.rows if math.isfinite(row["fi_residual"])]
        return vals[-1] if vals else 0.0

    quantities = {
        "energy_drift": [abs(r.energy_drift()) for r in results],
        "constraint": [max(row["constraint_residual"] for row in r.rows) for r in results],
        "fi_residual": [fi_last(r) for r in results],
        "flux_balance": [abs(r.flux_balance()) for r in results],
    }
    return {k: (v, richardson_order(v)) for k, v in quantities.items()}


def cmd_converge(cfg: RunConfig) -> int:
    h = (cfg.r_star_max - cfg.r_star_min) / (cfg.n_points - 1)
    under = cfg.family != "coulomb" and cfg.width < 4 * h
    if under:
        print(f"warning: pulse width {cfg.width:g} < 4 grid spacings ({4 * h:.4g}); orders not claimed",
              file=sys.stderr)
    table = convergence_table(cfg)
    lines = [f"{'quantity':<14} {'N':>12} {'2N':>12} {'4N':>12} {'order':>8}"]
    for name, (vals, order) in table.items():
        if order is None:
            o = "n/a"
        elif under:
            o = "unclaimed"
        else:
            o = f"{order:.2f}"
        lines.append(f"{name:<14} " + " ".join(f"{v:12.4e}" for v in vals) + f" {o:>8}")
    text = "\n".join(lines)
    print(text)
    (_out_dir(cfg) / "convergence.txt").write_text(text + "\n")
    return EXIT_OK


COMMANDS = {
    "evolve": cmd_evolve,
    "certify": cmd_certify,
    "converge": cmd_converge,
    "coulomb-check": cmd_coulomb_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out-dir", help="directory for CSV, checkpoint and report files")
    common.add_argument("--threads", type=int, help="worker threads (modes) or processes (certifier)")
    common.add_argument("--l-max", type=int, help="highest angular mode when no explicit mode list is given")
    common.add_argument("--resolution-scale", type=float, help="multiply the number of grid intervals")
    parser = argparse.ArgumentParser(
        prog="maxmor",
        description="Maxwell field energy and Morawetz diagnostics on Schwarzschild.",
        epilog="configuration keys and defaults:\n" + describe_defaults(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evolve", parents=[common], help="time-step the configured data and write diagnostics.csv")
    sub.add_parser("certify", parents=[common], help="certify the radial inequality corpus")
    sub.add_parser("converge", parents=[common], help="convergence orders from three resolutions")
    sub.add_parser("coulomb-check", parents=[common], help="static Coulomb field must give vanishing diagnostics")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
