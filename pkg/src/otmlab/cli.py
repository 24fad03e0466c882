"""Reproducible experiment front end.

Every subcommand reads an optional JSON config (--config) with flags taking
precedence, resolves the master seed (--seed, then config, then the
OTMLAB_SEED environment variable, then 0), and emits a JSON envelope that
embeds the effective config and seed so any run can be replayed.  Exit
codes: 0 success, 1 validation error, 2 experiment assertion failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import adversary, analysis, channel, code as code_mod, gf2, otm, qsim
from .gf2 import BitVector
from .seeding import trial_rng

SCHEMA = 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract wants 1
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="otmlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override fields")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="write tabular results to this CSV file")

    p = sub.add_parser("params", help="derive code parameters")
    common(p)
    for name, typ in (("k", int), ("pe", float), ("eps", float),
                      ("delta", float), ("theta", float)):
        p.add_argument(f"--{name}", type=typ)

    p = sub.add_parser("build-code", help="build a code bundle directory")
    common(p)
    for name, typ in (("k", int), ("pe", float), ("eps", float),
                      ("delta", float), ("theta", float)):
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--out-dir", help="bundle directory to write")

    p = sub.add_parser("encode", help="encode a message with a code bundle")
    common(p)
    p.add_argument("--bundle")
    p.add_argument("--message", help="message as a 0/1 string")

    p = sub.add_parser("decode", help="decode a word with a code bundle")
    common(p)
    p.add_argument("--bundle")
    p.add_argument("--word", help="received word as a 0/1 string")

    p = sub.add_parser("channel-sweep", help="empirical symbol error rates")
    common(p)
    p.add_argument("--lgq", type=int)
    p.add_argument("--pe", type=float, action="append")
    p.add_argument("--symbols", type=int)

    p = sub.add_parser("otm-roundtrip", help="program/readout Monte Carlo")
    common(p)
    for name, typ in (("k", int), ("pe", float), ("eps", float),
                      ("delta", float), ("theta", float)):
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--bundle", help="use an existing bundle instead of building")
    p.add_argument("--trials", type=int)
    p.add_argument("--choice", choices=["first", "second", "both"])
    p.add_argument("--path", choices=["fast", "qsim"])

    p = sub.add_parser("attack", help="run an adversary strategy")
    common(p)
    p.add_argument("--bundle")
    for name, typ in (("k", int), ("pe", float), ("eps", float),
                      ("delta", float), ("theta", float)):
        p.add_argument(f"--{name}", type=typ)
    p.add_argument("--strategy", help="strategy name")
    p.add_argument("--strategy-params", help="JSON object of strategy arguments")
    p.add_argument("--trials", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--transcripts", help="write transcripts to this JSONL file")

    p = sub.add_parser("entropy", help="exact min-entropy at tiny scale")
    common(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--lgq", type=int)
    p.add_argument("--strategy")
    p.add_argument("--strategy-params")
    p.add_argument("--eps", type=float, action="append")
    p.add_argument("--csv", help="write the joint distribution to this CSV file")

    p = sub.add_parser("bounds", help="bound and capacity tables")
    common(p)
    p.add_argument("--kind", choices=["capacity", "security", "uncertainty"])
    p.add_argument("--lgq", type=int)
    p.add_argument("--pe", type=float, action="append")
    p.add_argument("--ell", type=int)
    p.add_argument("--alpha", type=float, action="append")
    p.add_argument("--lam", type=float)
    p.add_argument("--tau0", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--h", type=float, action="append")
    p.add_argument("--lam-i", type=float, action="append")
    p.add_argument("--basis-size", type=int, action="append")
    p.add_argument("--dim", type=int, action="append")
    p.add_argument("--tau", type=float)

    p = sub.add_parser("verify-identities", help="numeric identity checks")
    common(p)
    p.add_argument("--states", type=int, help="uncertainty-relation sample count")
    p.add_argument("--dists", type=int, help="chain-rule sample count")

    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    config: dict = {}
    if args.config:
        with open(args.config) as fh:
            config.update(json.load(fh))
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        config[key.replace("_", "-")] = value
    return config


def _resolve_seed(args, config) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get("OTMLAB_SEED")
    if env is not None:
        return int(env)
    return 0


def _need(config: dict, *keys):
    missing = [k for k in keys if config.get(k) is None]
    if missing:
        raise _UsageError(f"missing required option(s): {', '.join(missing)}")
    return [config[k] for k in keys]


def _derive(config) -> code_mod.CodeParams:
    k, pe, eps, delta, theta = _need(config, "k", "pe", "eps", "delta", "theta")
    return code_mod.derive_params(k, pe, eps, delta, theta)


def _load_or_build_code(config, seed):
    if config.get("bundle"):
        return code_mod.load_bundle(config["bundle"])
    params = _derive(config)
    return code_mod.build_code(params, trial_rng(seed, 0), seed=seed)


_STRATEGIES = {
    "measure_all": adversary.measure_all,
    "per_block_random_basis": adversary.per_block_random_basis,
    "breidbart": adversary.breidbart,
    "greedy_basis_guess": adversary.greedy_basis_guess,
    "stop": adversary.StopImmediately,
}


def _make_strategy(config):
    (name,) = _need(config, "strategy")
    if name not in _STRATEGIES:
        raise _UsageError(
            f"unknown strategy {name!r}; choose from {sorted(_STRATEGIES)}"
        )
    params = json.loads(config.get("strategy-params") or "{}")
    return _STRATEGIES[name](**params)


def _tiling_code(ell: int, n: int, lgq: int) -> code_mod.GenericLinearCode:
    """Default tiny code for entropy runs: columns cycle through e_0..e_{ell-1}."""
    cols = n * lgq
    if cols < ell:
        raise _UsageError("need n*lgq >= ell for a full-rank generator")
    rows = []
    for i in range(ell):
        bits = 0
        for j in range(i, cols, ell):
            bits |= 1 << j
        rows.append(bits)
    G = gf2.BitMatrix(ell, cols, rows)
    return code_mod.GenericLinearCode(G, n, lgq)


# ---------------------------------------------------------------------------
# subcommand bodies; each returns (results dict, csv rows or None)
# ---------------------------------------------------------------------------


def _cmd_params(config, seed):
    params = _derive(config)
    results = dict(asdict(params), rate=code_mod.rate(params))
    return results, None


def _cmd_build_code(config, seed):
    (out_dir,) = _need(config, "out-dir")
    built = _load_or_build_code(config, seed)
    code_mod.save_bundle(built, out_dir)
    p = built.params
    return {
        "bundle": out_dir,
        "n": p.n,
        "c": p.c,
        "c0": p.c0,
        "rate": code_mod.rate(p),
        "message_bits": built.ell,
        "codeword_bits": built.n * built.lgq,
    }, None


def _cmd_encode(config, seed):
    bundle, message = _need(config, "bundle", "message")
    built = code_mod.load_bundle(bundle)
    s = BitVector.from01(message)
    z = built.encode(s)
    return {"codeword": z.to01(), "message_bits": s.n, "codeword_bits": z.n}, None


def _cmd_decode(config, seed):
    bundle, word = _need(config, "bundle", "word")
    built = code_mod.load_bundle(bundle)
    result = built.decode(BitVector.from01(word))
    return {
        "ok": result.ok,
        "message": result.message.to01() if result.ok else None,
        "ambiguous": result.ambiguous,
        "erased_blocks": result.erased_blocks,
    }, None


def _cmd_channel_sweep(config, seed):
    lgq, pes, symbols = _need(config, "lgq", "pe", "symbols")
    rows = []
    for i, pe in enumerate(pes):
        rng = trial_rng(seed, i)
        params = channel.ChannelParams(lgq=lgq, pe=pe)
        sent = [gf2.random_vector(lgq, rng) for _ in range(symbols)]
        got = channel.transmit(params, sent, rng)
        corrupted = sum(a != b for a, b in zip(sent, got))
        rows.append(
            {
                "pe": pe,
                "symbols": symbols,
                "corrupted": corrupted,
                "rate": corrupted / symbols,
                "capacity": channel.capacity(params),
            }
        )
    return {"sweep": rows}, rows


def _cmd_otm_roundtrip(config, seed):
    trials = config.get("trials") or 100
    which = config.get("choice") or "both"
    path = config.get("path") or "fast"
    built = _load_or_build_code(config, seed)
    read = otm.fast_honest_read if path == "fast" else otm.honest_read
    choices = {
        "first": [otm.ReadoutChoice.FIRST],
        "second": [otm.ReadoutChoice.SECOND],
        "both": [otm.ReadoutChoice.FIRST, otm.ReadoutChoice.SECOND],
    }[which]
    rows = []
    for choice in choices:
        failures = 0
        for trial in range(trials):
            rng = trial_rng(seed, 1, choice is otm.ReadoutChoice.SECOND, trial)
            s = gf2.random_vector(built.ell, rng)
            t = gf2.random_vector(built.ell, rng)
            device = otm.program(built, s, t, rng)
            result = read(device, choice, rng)
            want = s if choice is otm.ReadoutChoice.FIRST else t
            if not result.ok or result.message != want:
                failures += 1
        rows.append(
            {
                "choice": choice.value,
                "path": path,
                "trials": trials,
                "failures": failures,
                "failure_rate": failures / trials,
            }
        )
    return {"roundtrip": rows}, rows


def _cmd_attack(config, seed):
    trials = config.get("trials") or 10
    built = _load_or_build_code(config, seed)
    strategy = _make_strategy(config)
    max_steps = config.get("max-steps")
    transcripts_path = config.get("transcripts")
    steps = []
    truncated = 0
    lines = []
    for trial in range(trials):
        rng = trial_rng(seed, 2, trial)
        s = gf2.random_vector(built.ell, rng)
        t = gf2.random_vector(built.ell, rng)
        device = otm.program(built, s, t, rng)
        transcript = adversary.run(strategy, device, max_steps=max_steps, rng=rng)
        steps.append(len(transcript.records))
        truncated += transcript.truncated
        if transcripts_path:
            lines.append(transcript.to_jsonl())
    if transcripts_path:
        with open(transcripts_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return {
        "trials": trials,
        "mean_steps": sum(steps) / len(steps),
        "truncated": truncated,
        "transcripts": transcripts_path,
    }, None


def _cmd_entropy(config, seed):
    ell, n, lgq = _need(config, "ell", "n", "lgq")
    built = _tiling_code(ell, n, lgq)
    strategy = _make_strategy(config)
    dist = analysis.exact_joint_distribution(built, strategy)
    eps_list = config.get("eps") or [0.0]
    h0 = analysis.min_entropy(dist)
    rows = [
        {"eps": eps, "smooth_min_entropy": analysis.smooth_min_entropy(dist, eps)}
        for eps in eps_list
    ]
    if config.get("csv"):
        dist.to_csv(config["csv"])
    return {
        "ell": ell,
        "n": n,
        "lgq": lgq,
        "total_mass": dist.total(),
        "min_entropy": h0,
        "smoothed": rows,
    }, rows


def _cmd_bounds(config, seed):
    (kind,) = _need(config, "kind")
    if kind == "capacity":
        lgq, pes = _need(config, "lgq", "pe")
        rows = [
            {
                "lgq": lgq,
                "pe": pe,
                "capacity": channel.capacity(channel.ChannelParams(lgq=lgq, pe=pe)),
                "otm_pe": channel.otm_error_probability(lgq),
            }
            for pe in pes
        ]
        return {"kind": kind, "table": rows}, rows
    if kind == "security":
        ell, lgq, alphas, lam, tau0, delta = _need(
            config, "ell", "lgq", "alpha", "lam", "tau0", "delta"
        )
        rows = []
        for alpha in alphas:
            res = analysis.otm_security_bound(
                analysis.SecurityBoundParams(
                    ell=ell, lgq=lgq, alpha=alpha, lam=lam, tau0=tau0, delta=delta
                )
            )
            rows.append(dict(alpha=alpha, **asdict(res)))
        return {"kind": kind, "ell": ell, "lgq": lgq, "table": rows}, rows
    hs, lams, bases, dims, tau = _need(
        config, "h", "lam-i", "basis-size", "dim", "tau"
    )
    res = analysis.uncertainty_relation_bound(
        analysis.UncertaintyBoundParams(
            h=tuple(hs),
            lam=tuple(lams),
            basis_sizes=tuple(bases),
            dims=tuple(dims),
            tau=tau,
        )
    )
    return {"kind": kind, **asdict(res)}, None


def _canned_identity_instances():
    """Tiny codes paired with distinct separable POVM elements."""
    half = np.eye(2) / 2.0
    std0 = qsim.prepare_conjugate(0, qsim.STANDARD).rho
    breid = qsim.basis_instrument(math.pi / 8.0).effects[0]
    instances = []
    c1 = code_mod.GenericLinearCode(gf2.BitMatrix(1, 2, [0b11]), 2, 1)
    instances.append((c1, adversary.SeparablePovmElement([half, std0])))
    c2 = code_mod.GenericLinearCode(gf2.BitMatrix.identity(2), 2, 1)
    instances.append((c2, adversary.SeparablePovmElement([breid, std0])))
    c3 = code_mod.GenericLinearCode(
        gf2.BitMatrix(2, 4, [0b0101, 0b1010]), 2, 2
    )
    rng = np.random.default_rng(1234)
    factors = []
    for _ in range(4):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        m = a @ a.conj().T
        factors.append(m / np.trace(m).real)
    instances.append((c3, adversary.SeparablePovmElement(factors)))
    return instances


def _cmd_verify_identities(config, seed):
    n_states = config.get("states") or 200
    n_dists = config.get("dists") or 100
    checks = []
    for idx, (built, element) in enumerate(_canned_identity_instances()):
        checks.append(
            {
                "instance": idx,
                "gamma_uniformity_deviation": analysis.gamma_uniformity_deviation(
                    built, element
                ),
                "all_zero_probability_deviation": (
                    analysis.all_zero_probability_deviation(built, element)
                ),
                "real_vs_fictional_deviation": analysis.fictional_equivalence_check(
                    built, element
                ),
            }
        )
    identity_ok = all(
        c["gamma_uniformity_deviation"] < 1e-9
        and c["all_zero_probability_deviation"] < 1e-9
        and c["real_vs_fictional_deviation"] < 1e-9
        for c in checks
    )
    rng = trial_rng(seed, 3)
    mu_failures = 0
    for _ in range(n_states):
        ell = int(rng.integers(1, 3))
        d = 1 << ell
        ket = rng.normal(size=d) + 1j * rng.normal(size=d)
        ket /= np.linalg.norm(ket)
        _, ok = analysis.maassen_uffink_check(np.outer(ket, ket.conj()), ell)
        mu_failures += not ok
    chain_failures = 0
    for _ in range(n_dists):
        nx = int(rng.integers(2, 9))
        ny = int(rng.integers(1, 9))
        probs = rng.random(nx * ny)
        probs /= probs.sum()
        xy = {
            (x, y): probs[x * ny + y] for x in range(nx) for y in range(ny)
        }
        eps = float(rng.uniform(0.01, 0.4))
        eps2 = float(rng.uniform(0.01, 0.4))
        chain_failures += not analysis.chain_rule_check(xy, eps, eps2)
    results = {
        "identity_checks": checks,
        "identities_ok": identity_ok,
        "uncertainty_states": n_states,
        "uncertainty_failures": mu_failures,
        "chain_rule_dists": n_dists,
        "chain_rule_failures": chain_failures,
        "ok": identity_ok and mu_failures == 0 and chain_failures == 0,
    }
    return results, None


_COMMANDS = {
    "params": _cmd_params,
    "build-code": _cmd_build_code,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "channel-sweep": _cmd_channel_sweep,
    "otm-roundtrip": _cmd_otm_roundtrip,
    "attack": _cmd_attack,
    "entropy": _cmd_entropy,
    "bounds": _cmd_bounds,
    "verify-identities": _cmd_verify_identities,
}


def _write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _merge_config(args)
        seed = _resolve_seed(args, config)
        config["seed"] = seed
        results, rows = _COMMANDS[args.command](config, seed)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"otmlab: {exc}", file=sys.stderr)
        return 1
    envelope = {
        "schema": SCHEMA,
        "command": args.command,
        "config": config,
        "seed": seed,
        "results": results,
    }
    if config.get("out"):
        if not rows:
            print("otmlab: this command has no tabular output for --out",
                  file=sys.stderr)
            return 1
        _write_csv(config["out"], rows)
        envelope["csv"] = config["out"]
    print(json.dumps(envelope, indent=2, sort_keys=True))
    if args.command == "verify-identities" and not results["ok"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
