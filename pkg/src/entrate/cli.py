"""Command-line harness: config loading, experiment orchestration, CSV/JSON output.

Outputs are byte-stable for a fixed config and seed: floats print with 17
significant digits, rows are emitted in a deterministic order, and every
file carries a header with the config hash, tool version and kernel
backend.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from . import __version__
from .channels import bec, bsc, custom, gilbert_elliott
from .constraints import build_constraint, rll_constraint
from .entropy import (
    conditional_entropy_given_input,
    convergence_diagnostics,
    entropy_decomposition,
    entropy_monte_carlo,
    fit_geometric_ratio,
)
from .errors import BudgetExceeded, ConfigError, EntrateError
from .kernels import BACKEND, word_stats
from .markov import from_transition, joint_prob, max_entropy_chain, perron
from .optimize import capacity_sequence, certify_concavity, maximize_mi
from .outputs import build_output_process, stabilization_pairs

SUBCOMMANDS = (
    "constraint-info",
    "entropy",
    "decompose",
    "orders",
    "typical",
    "optimize",
    "capacity",
    "verify",
    "sweep",
)

_RUN_DEFAULTS = {
    "n": 8,
    "n_list": [4, 6, 8, 10],
    "eps": 0.01,
    "eps_list": [0.01, 0.001],
    "alpha": 0.3,
    "delta": 0.001,
    "tol": 1e-7,
    "max_iter": 500,
    "samples": 0,
    "seed": 20260809,
    "degree_budget": 6,
    "word_budget": 1 << 22,
    "orders_n": 3,
    "grid": 9,
    "starts": 1,
}

_BUNDLED = {
    "golden-mean-bsc": "golden_mean_bsc.json",
    "golden-mean-bec": "golden_mean_bec.json",
    "trivial-bsc": "trivial_bsc.json",
    "golden-mean-ge": "golden_mean_ge.json",
}


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _check_keys(section: dict, allowed, path: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}")


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def load_config(path_or_name: str) -> dict:
    if os.path.exists(path_or_name):
        text = open(path_or_name, "r", encoding="utf-8").read()
    elif path_or_name in _BUNDLED:
        text = resources.files("entrate").joinpath("data", _BUNDLED[path_or_name]).read_text()
    else:
        raise ConfigError(
            f"config {path_or_name!r} is neither a file nor one of {sorted(_BUNDLED)}"
        )
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    _check_keys(cfg, {"constraint", "input", "channel", "run"}, "config")
    for key in ("constraint", "input", "channel"):
        _require(key in cfg, f"config.{key} is required")
    con = cfg["constraint"]
    if "rll" in con:
        _check_keys(con, {"rll"}, "constraint")
        _check_keys(con["rll"], {"d", "k"}, "constraint.rll")
        _require(isinstance(con["rll"].get("d"), int), "constraint.rll.d must be an integer")
        k = con["rll"].get("k")
        _require(k is None or isinstance(k, int), "constraint.rll.k must be an integer or null")
    else:
        _check_keys(con, {"alphabet", "forbidden"}, "constraint")
        _require(isinstance(con.get("alphabet"), list), "constraint.alphabet must be a list")
        _require(isinstance(con.get("forbidden"), list), "constraint.forbidden must be a list")
    inp = cfg["input"]
    _require(inp.get("type") in ("parry", "transition", "joint"), "input.type must be parry, transition or joint")
    if inp["type"] == "parry":
        _check_keys(inp, {"type"}, "input")
    elif inp["type"] == "transition":
        _check_keys(inp, {"type", "rows"}, "input")
        _require(isinstance(inp.get("rows"), list), "input.rows must be a matrix")
    else:
        _check_keys(inp, {"type", "values"}, "input")
        _require(isinstance(inp.get("values"), list), "input.values must be a list")
    ch = cfg["channel"]
    _require(ch.get("type") in ("bsc", "bec", "ge", "custom"), "channel.type must be bsc, bec, ge or custom")
    if ch["type"] == "ge":
        _check_keys(ch, {"type", "q_good", "k"}, "channel")
        _require(isinstance(ch.get("q_good"), (int, float)), "channel.q_good must be a number")
        _require(isinstance(ch.get("k"), (int, float)), "channel.k must be a number")
    elif ch["type"] == "custom":
        _check_keys(ch, {"type", "states", "outputs", "table", "map"}, "channel")
        for key in ("states", "outputs", "table", "map"):
            _require(key in ch, f"channel.{key} is required for custom channels")
    else:
        _check_keys(ch, {"type"}, "channel")
    run = cfg.get("run", {})
    _check_keys(run, set(_RUN_DEFAULTS), "run")
    merged = dict(_RUN_DEFAULTS, **run)
    for key in ("n", "max_iter", "samples", "seed", "degree_budget", "word_budget", "orders_n", "grid", "starts"):
        _require(isinstance(merged[key], int) and merged[key] >= 0, f"run.{key} must be a nonnegative integer")
    _require(merged["n"] >= 1, "run.n must be >= 1")
    _require(merged["grid"] >= 2, "run.grid must be >= 2")
    for key in ("eps", "alpha", "delta", "tol"):
        _require(isinstance(merged[key], (int, float)) and merged[key] >= 0, f"run.{key} must be a nonnegative number")
    _require(merged["tol"] > 0, "run.tol must be positive")
    _require(
        isinstance(merged["n_list"], list) and all(isinstance(v, int) and v >= 1 for v in merged["n_list"]),
        "run.n_list must be a list of integers >= 1",
    )
    _require(
        isinstance(merged["eps_list"], list) and all(isinstance(v, (int, float)) and v >= 0 for v in merged["eps_list"]),
        "run.eps_list must be a list of nonnegative numbers",
    )
    cfg["run"] = merged


def apply_overrides(cfg: dict, overrides):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form path.key=value")
        path, raw = item.split("=", 1)
        keys = path.split(".")
        node = cfg
        for key in keys[:-1]:
            if key not in node:
                raise ConfigError(f"override path {path!r} does not exist")
            node = node[key]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node[keys[-1]] = value
    validate_config(cfg)


def build_objects(cfg: dict):
    con = cfg["constraint"]
    if "rll" in con:
        k = con["rll"]["k"]
        c = rll_constraint(con["rll"]["d"], k)
    else:
        c = build_constraint(con["alphabet"], con["forbidden"])
    inp = cfg["input"]
    if inp["type"] == "parry":
        p = max_entropy_chain(c)
    elif inp["type"] == "transition":
        p = from_transition(c, np.asarray(inp["rows"], dtype=float))
    else:
        p = joint_prob(c, np.asarray(inp["values"], dtype=float))
    chs = cfg["channel"]
    if chs["type"] == "bsc":
        ch = bsc()
    elif chs["type"] == "bec":
        ch = bec()
    elif chs["type"] == "ge":
        ch = gilbert_elliott(float(chs["q_good"]), float(chs["k"]))
    else:
        table = {}
        for x, per_state in chs["table"].items():
            for state, per_out in per_state.items():
                for z, coeffs in per_out.items():
                    table[(x, state, z)] = [float(v) for v in coeffs]
        ch = custom(
            {name: float(q) for name, q in chs["states"].items()},
            list(chs["outputs"]),
            table,
            dict(chs["map"]),
        )
    return c, p, ch


class Writer:
    def __init__(self, cfg: dict, output_dir: str, command: str, bits: bool):
        self.output_dir = output_dir
        self.bits = bits
        canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
        self.config_hash = hashlib.sha256(canonical.encode()).hexdigest()
        self.command = command
        os.makedirs(output_dir, exist_ok=True)

    def header_lines(self):
        return [
            f"# entrate {__version__}",
            f"# command {self.command}",
            f"# config-sha256 {self.config_hash}",
            f"# backend {BACKEND}",
            f"# units {'bits' if self.bits else 'nats'}",
        ]

    def csv(self, name: str, columns, rows):
        path = os.path.join(self.output_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.header_lines():
                fh.write(line + "\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        return path

    def json(self, name: str, payload: dict):
        path = os.path.join(self.output_dir, name)
        payload = dict(payload)
        payload["meta"] = {
            "version": __version__,
            "command": self.command,
            "config_sha256": self.config_hash,
            "backend": BACKEND,
            "units": "bits" if self.bits else "nats",
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        return path

    def scale(self, nats: float) -> float:
        return nats / math.log(2) if self.bits else nats


def _entropy_rows(writer, p, ch, pairs, run):
    rows = []
    for n, eps in pairs:
        d = entropy_decomposition(p, ch, n, eps, run["word_budget"])
        rows.append(
            (n, eps, writer.scale(d.h_n), writer.scale(d.f_n), writer.scale(d.g_n),
             d.residual, d.mode, "", "")
        )
    return rows


_ENTROPY_COLS = ("n", "eps", "H_n", "F_n", "G_n", "residual", "mode", "samples", "stderr")


def cmd_constraint_info(writer, cfg, c, p, ch):
    lam, _ = perron(c.adjacency)
    payload = {
        "alphabet": list(c.alphabet),
        "forbidden": list(c.forbidden),
        "allowed_pairs": list(c.allowed_pairs),
        "mixing": c.mixing,
        "order_bound": c.order_bound,
        "primitivity_exponent": c.primitivity_e,
        "perron_root": lam,
        "noiseless_capacity": writer.scale(math.log(lam)),
    }
    path = writer.json("constraint.json", payload)
    print(f"constraint-info: {len(c.alphabet)} symbols, {len(c.allowed_pairs)} pairs, "
          f"mixing={c.mixing}, capacity={fmt(writer.scale(math.log(lam)))} -> {path}")
    return 0


def cmd_entropy(writer, cfg, c, p, ch):
    run = cfg["run"]
    rows = _entropy_rows(writer, p, ch, [(run["n"], run["eps"])], run)
    if run["samples"] > 0:
        d = entropy_monte_carlo(p, ch, run["n"], run["eps"], run["samples"], run["seed"])
        rows.append(
            (d.n, d.eps, writer.scale(d.h_n), writer.scale(d.f_n), writer.scale(d.g_n),
             d.residual, d.mode, d.samples, writer.scale(d.stderr))
        )
    path = writer.csv("entropy.csv", _ENTROPY_COLS, rows)
    print(f"entropy: n={run['n']} eps={fmt(run['eps'])} H_n={fmt(rows[0][2])} -> {path}")
    return 0


def _orders_rows(writer, os_, n, eps):
    trop, ser, coeffs = os_.word_table(n)
    words = os_.words_of_length(n)
    _, probs = word_stats(os_.pi_joint, os_.numeric(eps), os_.orders, n)
    rows = []
    for i, w in enumerate(words):
        t = "inf" if trop[i] >= (1 << 30) else int(trop[i])
        s = "inf" if ser[i] >= (1 << 30) else int(ser[i])
        lead = float(coeffs[i][ser[i]]) if isinstance(s, int) else 0.0
        rows.append((w, t, s, lead, probs[i]))
    return rows


def cmd_orders(writer, cfg, c, p, ch, n=None, name="orders.csv"):
    run = cfg["run"]
    n = run["n"] if n is None else n
    os_ = build_output_process(p, ch, budget=max(run["degree_budget"], n * max(1, ch.max_kernel_order) + 1))
    if len(ch.outputs) ** n > 1 << 16:
        raise BudgetExceeded(f"orders table for n={n} exceeds the series budget")
    rows = _orders_rows(writer, os_, n, run["eps"])
    path = writer.csv(name, ("word", "tropical_order", "series_order", "leading_coeff", "probability_at_eps"), rows)
    print(f"orders: {len(rows)} words of length {n} at eps={fmt(run['eps'])} -> {path}")
    return 0


def cmd_decompose(writer, cfg, c, p, ch):
    run = cfg["run"]
    rows = _entropy_rows(writer, p, ch, [(n, run["eps"]) for n in run["n_list"]], run)
    path = writer.csv("decompose.csv", _ENTROPY_COLS, rows)
    cmd_orders(writer, cfg, c, p, ch, n=run["orders_n"], name="orders.csv")
    print(f"decompose: {len(rows)} rows at eps={fmt(run['eps'])} -> {path}")
    return 0


def cmd_typical(writer, cfg, c, p, ch):
    run = cfg["run"]
    os_ = build_output_process(p, ch, budget=run["degree_budget"])
    rows = []
    for n in run["n_list"]:
        rep = os_.classify_typical(n, run["alpha"], run["eps"], run["word_budget"])
        rows.append((rep.n, rep.alpha, rep.eps, rep.typical_count, rep.atypical_count,
                     rep.atypical_mass, rep.max_order_seen))
    path = writer.csv(
        "typical.csv",
        ("n", "alpha", "eps", "typical_count", "atypical_count", "atypical_mass", "max_order_seen"),
        rows,
    )
    print(f"typical: alpha={fmt(run['alpha'])} eps={fmt(run['eps'])} -> {path}")
    return 0


def cmd_optimize(writer, cfg, c, p, ch, require_certified=False):
    run = cfg["run"]
    cert = certify_concavity(ch, c, run["n"], run["eps"], run["delta"], run["grid"],
                             word_budget=run["word_budget"])
    res = maximize_mi(ch, c, run["n"], run["eps"], delta=run["delta"], tol=run["tol"],
                      max_iter=run["max_iter"], starts=run["starts"], seed=run["seed"],
                      word_budget=run["word_budget"])
    res.certified = cert.passed
    payload = {
        "argmax_pairs": dict(zip(c.allowed_pairs, [float(v) for v in res.argmax.values])),
        "value": writer.scale(res.value),
        "grad_norm": res.grad_norm,
        "hessian_eigenvalues": list(res.hessian_eigs),
        "iterations": res.iterations,
        "status": res.status,
        "boundary_active": res.boundary_active,
        "certified": cert.passed,
        "certification_max_eigenvalue": cert.max_eigenvalue,
        "n": run["n"],
        "eps": run["eps"],
        "delta": run["delta"],
    }
    writer.json("optimize.json", payload)
    path = writer.csv(
        "optimize.csv",
        ("n", "eps", "delta", "value", "grad_norm", "iterations", "status", "certified"),
        [(run["n"], run["eps"], run["delta"], writer.scale(res.value), res.grad_norm,
          res.iterations, res.status, cert.passed)],
    )
    print(f"optimize: value={fmt(writer.scale(res.value))} status={res.status} "
          f"certified={cert.passed} -> {path}")
    if require_certified and not cert.passed:
        return 4
    return 0


def cmd_capacity(writer, cfg, c, p, ch):
    run = cfg["run"]
    study = capacity_sequence(ch, c, run["eps"], run["n_list"], delta=run["delta"],
                              tol=run["tol"], max_iter=run["max_iter"],
                              word_budget=run["word_budget"])
    cert = certify_concavity(ch, c, run["n_list"][-1], run["eps"], run["delta"], run["grid"],
                             word_budget=run["word_budget"])
    rows = []
    for (n, res), gap in zip(study.pairs, [None] + study.gaps):
        rows.append((n, res.value, res.value / math.log(2), "" if gap is None else gap,
                     res.grad_norm, cert.passed))
    path = writer.csv(
        "capacity.csv",
        ("n", "value_nats", "value_bits", "gap_to_prev", "grad_norm", "certified"),
        rows,
    )
    print(f"capacity: n_list={run['n_list']} fitted_rho={fmt(study.fitted_rho)} -> {path}")
    return 0


def cmd_verify(writer, cfg, c, p, ch):
    run = cfg["run"]
    checks = []

    def record(name, status, detail):
        checks.append({"name": name, "status": status, "detail": detail})
        print(f"{status:4s} {name}: {detail}")

    budget = max(run["degree_budget"], 8)
    os_ = build_output_process(p, ch, budget=budget)
    record("transition-consistency", "PASS",
           "per-output matrices sum to the joint transition; rows sum to 1")

    if ch.has_zero_kernel_entries:
        record("order-dominance", "SKIP", "channel has identically-zero kernel entries")
    else:
        length = os_.dominance_block_length
        bad = [w for w in os_.clean_words(length) if not os_.check_order_dominance(w).passed]
        record("order-dominance", "FAIL" if bad else "PASS",
               f"{len(os_.clean_words(length))} clean words of length {length}, "
               f"{len(bad)} violations")

    pairs = stabilization_pairs(os_, 6, 50)
    worst = 0.0
    for a, b in pairs:
        rep = os_.check_coefficient_stabilization(a, b, 6, 0)
        worst = max(worst, rep.max_rel_delta)
    record("coefficient-stabilization", "PASS" if worst <= 1e-9 else "FAIL",
           f"{len(pairs)} history pairs, worst relative delta {worst:.3e}")

    worst_resid = 0.0
    for n in run["n_list"]:
        d = entropy_decomposition(p, ch, n, run["eps"], run["word_budget"])
        worst_resid = max(worst_resid, d.residual)
    record("decomposition-identity", "PASS" if worst_resid <= 1e-10 else "FAIL",
           f"worst residual {worst_resid:.3e} over n_list at eps={fmt(run['eps'])}")

    mismatches = 0
    for n in range(1, min(max(run["n_list"]), 8) + 1):
        trop, ser, _ = os_.word_table(n)
        mismatches += int(np.sum(trop != ser))
    record("order-equivalence", "PASS" if mismatches == 0 else "FAIL",
           f"{mismatches} mismatches between min-plus and series orders (n <= 8)")

    masses = []
    for n in run["n_list"]:
        rep = os_.classify_typical(n, run["alpha"], run["eps"], run["word_budget"])
        masses.append(rep.atypical_mass)
    ratio = fit_geometric_ratio(run["n_list"], masses)
    ok = masses[-1] <= masses[0] + 1e-15 and ratio < 1.0
    record("typicality-decay", "PASS" if ok else "FAIL",
           f"masses {['%.3e' % m for m in masses]} fitted ratio {ratio:.3f}")

    payload = {"checks": checks, "eps": run["eps"], "n_list": run["n_list"]}
    writer.json("verify.json", payload)
    failed = any(chk["status"] == "FAIL" for chk in checks)
    return 4 if failed else 0


def cmd_sweep(writer, cfg, c, p, ch):
    run = cfg["run"]
    pairs = [(n, eps) for eps in run["eps_list"] for n in run["n_list"]]
    rows = _entropy_rows(writer, p, ch, pairs, run)
    path = writer.csv("sweep.csv", _ENTROPY_COLS, rows)
    print(f"sweep: {len(rows)} rows -> {path}")
    return 0


def run(config_path: str, subcommand: str, overrides=(), output_dir: str = ".",
        bits: bool = False, require_certified: bool = False) -> int:
    cfg = load_config(config_path)
    apply_overrides(cfg, overrides)
    writer = Writer(cfg, output_dir, subcommand, bits)
    c, p, ch = build_objects(cfg)
    if subcommand == "constraint-info":
        return cmd_constraint_info(writer, cfg, c, p, ch)
    if subcommand == "entropy":
        return cmd_entropy(writer, cfg, c, p, ch)
    if subcommand == "decompose":
        return cmd_decompose(writer, cfg, c, p, ch)
    if subcommand == "orders":
        return cmd_orders(writer, cfg, c, p, ch)
    if subcommand == "typical":
        return cmd_typical(writer, cfg, c, p, ch)
    if subcommand == "optimize":
        return cmd_optimize(writer, cfg, c, p, ch, require_certified=require_certified)
    if subcommand == "capacity":
        return cmd_capacity(writer, cfg, c, p, ch)
    if subcommand == "verify":
        return cmd_verify(writer, cfg, c, p, ch)
    if subcommand == "sweep":
        return cmd_sweep(writer, cfg, c, p, ch)
    raise ConfigError(f"unknown subcommand {subcommand!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="entrate",
        description="Entropy-rate approximants and capacity search for noisy constrained channels",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("config", help="config file path or bundled name "
                        f"({', '.join(sorted(_BUNDLED))})")
    parser.add_argument("--output-dir", default=".", help="directory for CSV/JSON artifacts")
    parser.add_argument("--bits", action="store_true", help="report entropies in bits")
    parser.add_argument("--override", action="append", default=[],
                        metavar="PATH=VALUE", help="config override, e.g. run.eps=0.02")
    parser.add_argument("--require-certified", action="store_true",
                        help="exit 4 when optimize runs without a concavity certificate")
    args = parser.parse_args(argv)
    threads = os.environ.get("ENTRATE_THREADS")
    if threads is not None and (not threads.isdigit() or int(threads) < 1):
        print("error: ENTRATE_THREADS must be a positive integer", file=sys.stderr)
        return 2
    try:
        return run(args.config, args.subcommand, overrides=args.override,
                   output_dir=args.output_dir, bits=args.bits,
                   require_certified=args.require_certified)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EntrateError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
