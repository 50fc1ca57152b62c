"""Command-line front end: certify | keyrate | threshold | attack | simulate.

Every command reads an optional JSON config (``--config``), applies
command-line overrides on top, and writes JSON (CSV for ``keyrate``) to
``--out`` or stdout. Numbers are written with 12 significant digits.
Exit codes: 0 success, 2 usage error, 3 infeasible configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from .attack import q_att, q_att_limit
from .certifier.bounds import AffineEntropyBound, affine_bound, from_c_lambda, paper_bound
from .certifier.objective import LagrangeVector, ObjectiveSpec
from .certifier.search import certify_c_lambda
from .devices import model_from_config, simulate_many
from .finite_size import asymptotic_rate, completeness_pe_general, estimation_aborts, noise_threshold
from .finite_size.optimize import THEOREMS, optimize_params

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 2, 3
SIG_DIGITS = 12
CSV_COLUMNS = ("n", "keyrate", "net_keyrate", "bits", "gamma", "delta_tol", "delta_iid", "alpha",
               "alpha_prime", "beta", "ec_max", "eps_ec_com", "eps_pe_com", "eps_ea", "eps_pa",
               "eps_h", "eps_s", "eps_s1", "eps_s2")


class UsageError(ValueError):
    pass


class Infeasible(ValueError):
    pass


def fmt(x):
    """12 significant digits for floats; integers and strings unchanged."""
    if x is None:
        return x
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return repr(x)
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {k: fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [fmt(v) for v in x]
    return x


def _num(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{SIG_DIGITS}g}"


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    for key, value in vars(args).items():
        if key in ("config", "out", "command", "func") or value is None:
            continue
        cfg[key] = value
    return cfg


def _bound_from_cfg(cfg: dict, p: float, key: str = "bound") -> AffineEntropyBound:
    """Bound record ``{"slope", "value_at_2"}`` from the config, else the built-in one."""
    rec = cfg.get(key)
    if rec is None:
        try:
            return paper_bound(p)
        except KeyError as exc:
            raise UsageError(str(exc)) from exc
    return affine_bound(rec["slope"], rec["value_at_2"], p, bool(rec.get("certified", True)),
                        rec.get("source", "config"))


# --- commands ---------------------------------------------------------------

def cmd_certify(cfg: dict) -> dict:
    p = float(cfg.get("p", 0.0))
    weights = tuple(float(w) for w in cfg.get("weights", (0.5, 0.5)))
    if "lagrange" in cfg:
        vals = [float(v) for v in cfg["lagrange"]]
        if len(vals) != 4:
            raise UsageError("lagrange needs four entries l00 l01 l10 l11")
        lam_vec = LagrangeVector(*vals)
    elif "lam" in cfg:
        lam_vec = LagrangeVector.chsh(float(cfg["lam"]))
    else:
        raise UsageError("certify needs --lambda or a 'lagrange' vector")
    try:
        spec = ObjectiveSpec(lam_vec, weights, p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    t0 = time.perf_counter()
    res = certify_c_lambda(spec, gap_tol=float(cfg.get("gap_tol", 0.03)), budget=int(cfg.get("budget", 20000)),
                           workers=int(cfg.get("threads", 1)), restarts=int(cfg.get("restarts", 6)),
                           seed=int(cfg.get("seed", 0)))
    theta_a, r_z, r_x, state = res.argmin
    out = dict(p=p, lagrange=list(lam_vec.as_array().ravel()), weights=list(weights),
               lower_bound=res.lower_bound, feasible_value=res.feasible_value, gap=res.gap,
               converged=res.converged, certified=res.certified, iterations=res.iterations,
               leaves=res.history[0]["leaves"],
               argmin=dict(theta_a=theta_a, r_z=r_z, r_x=r_x, blocks=state.blocks().tolist()))
    if lam_vec.chsh_restricted:
        b = from_c_lambda(lam_vec.l00, res.lower_bound, p)
        out["bound"] = dict(slope=b.slope, intercept=b.intercept, value_at_2=b.value_at_2)
    if cfg.get("timing"):
        out["wall_time"] = time.perf_counter() - t0
    return fmt(out)


def _model_and_targets(cfg: dict):
    try:
        model, ec = model_from_config(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    eps_sou = float(cfg.get("eps_sou", 1e-6))
    eps_com = float(cfg.get("eps_com", 1e-2))
    if not (0.0 < eps_sou < 1.0 and 0.0 < eps_com < 1.0):
        raise UsageError("eps_sou and eps_com must lie in (0, 1)")
    return model, ec, (eps_sou, eps_com)


def keyrate_rows(cfg: dict):
    """Rows (dicts keyed by :data:`CSV_COLUMNS`) plus the asymptotic rate."""
    gamma = cfg.get("gamma")
    if gamma is not None and not 0.0 < float(gamma) < 1.0:
        raise UsageError("gamma must lie in (0, 1)")
    theorem = cfg.get("theorem", "general")
    if theorem not in THEOREMS:
        raise UsageError(f"theorem must be one of {THEOREMS}")
    model, ec, targets = _model_and_targets(cfg)
    lin_p = _bound_from_cfg(cfg, model.p)
    lin_0 = _bound_from_cfg(cfg, 0.0, "bound_p0")
    lo, hi = float(cfg.get("log10_n_min", 6.0)), float(cfg.get("log10_n_max", 12.0))
    per = int(cfg.get("points_per_decade", 20))
    if per < 1 or hi < lo:
        raise UsageError("need points_per_decade >= 1 and log10_n_max >= log10_n_min")
    rows = []
    for x in np.linspace(lo, hi, int(round((hi - lo) * per)) + 1):
        n = int(round(10.0 ** x))
        res = optimize_params(n, model, targets, theorem, lin_p=lin_p, lin_0=lin_0, ec=ec,
                              gamma=None if gamma is None else float(gamma))
        row = dict.fromkeys(CSV_COLUMNS, "")
        row.update(n=n, bits=res.bits, keyrate=res.bits / n)
        row["net_keyrate"] = (res.bits - n) / n if theorem == "preshared" else res.bits / n
        if res.inputs is not None:
            inp = res.inputs
            row.update(gamma=inp.gamma, delta_tol=inp.delta_tol, delta_iid=inp.delta_iid, ec_max=inp.ec_max)
            if theorem in ("general", "preshared"):
                row.update(alpha=inp.alpha, alpha_prime=inp.alpha_prime, beta=inp.beta)
            for k in ("eps_ec_com", "eps_pe_com", "eps_ea", "eps_pa", "eps_h", "eps_s", "eps_s1", "eps_s2"):
                row[k] = getattr(inp.eps, k)
        rows.append(row)
    protocol = "preshared" if theorem == "preshared" else "standard"
    return rows, asymptotic_rate(lin_p, model, protocol)


def write_keyrate_csv(rows, asymptotic: float, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_num(row[c]) for c in CSV_COLUMNS])
    w.writerow(["asymptotic", _num(asymptotic)] + [""] * (len(CSV_COLUMNS) - 2))


def cmd_keyrate(cfg: dict) -> str:
    rows, asym = keyrate_rows(cfg)
    buf = io.StringIO()
    write_keyrate_csv(rows, asym, buf)
    if all(r["bits"] == 0 for r in rows) and cfg.get("strict"):
        raise Infeasible("no positive key length on the requested grid")
    return buf.getvalue()


def cmd_threshold(cfg: dict) -> dict:
    p = float(cfg.get("p", 0.0))
    bound = _bound_from_cfg(cfg, p)
    return fmt(dict(p=p, q_threshold=noise_threshold(bound, p), bound_source=bound.source))


def cmd_attack(cfg: dict) -> dict:
    p = float(cfg.get("p", 0.0))
    if not 0.0 <= p < 0.5:
        raise UsageError("p must lie in [0, 1/2)")
    return fmt(dict(p=p, q_att=q_att(p), q_att_limit=q_att_limit()))


def cmd_simulate(cfg: dict) -> dict:
    """Monte-Carlo abort frequency of parameter estimation against its completeness bound."""
    model, _, _ = _model_and_targets(cfg)
    n = int(cfg.get("n", 10 ** 5))
    trials = int(cfg.get("trials", 10 ** 4))
    delta = float(cfg.get("delta_tol", 0.01))
    if n < 1 or trials < 1 or not 0.0 < delta < model.w_exp:
        raise UsageError("need n >= 1, trials >= 1 and 0 < delta_tol < w_exp")
    wins, losses, tests = simulate_many(model, n, trials, int(cfg.get("seed", 0)))
    aborts = estimation_aborts(wins, losses, n, model.gamma, model.w_exp, delta)
    freq = float(np.mean(aborts))
    return fmt(dict(n=n, trials=trials, gamma=model.gamma, w_exp=model.w_exp, delta_tol=delta,
                    mean_tests=float(np.mean(tests)), mean_wins=float(np.mean(wins)),
                    abort_frequency=freq, abort_std_error=math.sqrt(max(freq * (1.0 - freq), 1.0 / trials) / trials),
                    completeness_bound=completeness_pe_general(n, model.gamma, model.w_exp, delta)))


COMMANDS = dict(certify=cmd_certify, keyrate=cmd_keyrate, threshold=cmd_threshold,
                attack=cmd_attack, simulate=cmd_simulate)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config; command-line flags override its keys")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker cap for parallel steps")

    parser = argparse.ArgumentParser(prog="diqkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", parents=[common], help="certified bound on c_lambda")
    c.add_argument("--p", type=float)
    c.add_argument("--lambda", dest="lam", type=float, help="CHSH multiplier")
    c.add_argument("--gap-tol", dest="gap_tol", type=float)
    c.add_argument("--budget", type=int)
    c.add_argument("--restarts", type=int)
    c.add_argument("--timing", action="store_true", default=None, help="include wall time in the output")

    k = sub.add_parser("keyrate", parents=[common], help="finite-size key rate curve (CSV)")
    k.add_argument("--theorem", choices=THEOREMS)
    _model_flags(k)
    k.add_argument("--eps-sou", dest="eps_sou", type=float)
    k.add_argument("--eps-com", dest="eps_com", type=float)
    k.add_argument("--log10-n-min", dest="log10_n_min", type=float)
    k.add_argument("--log10-n-max", dest="log10_n_max", type=float)
    k.add_argument("--points-per-decade", dest="points_per_decade", type=int)
    k.add_argument("--strict", action="store_true", default=None, help="exit 3 if no n gives key")

    t = sub.add_parser("threshold", parents=[common], help="noise threshold of the asymptotic rate")
    t.add_argument("--p", type=float)

    a = sub.add_parser("attack", parents=[common], help="noise tolerance upper bound from the mixture attack")
    a.add_argument("--p", type=float)

    s = sub.add_parser("simulate", parents=[common], help="Monte-Carlo abort frequency of honest devices")
    _model_flags(s)
    s.add_argument("--n", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--delta-tol", dest="delta_tol", type=float)
    return parser


def _model_flags(sp):
    sp.add_argument("--q", type=float, help="depolarizing noise")
    sp.add_argument("--w-exp", dest="w_exp", type=float)
    sp.add_argument("--p-err", dest="p_err", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--gamma", type=float, help="test probability in (0, 1); keyrate optimises it when absent")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        result = COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, KeyError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = result if isinstance(result, str) else json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
