"""Experiment harness CLI.

    halftest sample --config cfg.json --out data.csv [--seed N]
    halftest test   DATASET --config cfg.json [--out report.json]
    halftest learn  --config cfg.json --out DIR [--jobs N] [--seed N]
    halftest oracle DATASET --config cfg.json [--out report.json]
    halftest bench  --config cfg.json --out DIR [--jobs N]

Configs are single JSON documents (schemas in the README).  Exit codes:
0 accept/success, 1 reject, 2 usage/config error, 3 I/O error.  Outputs
are written atomically (temp file + rename) and every report carries the
library version, a config hash, and the resolved calibration constants.
Given the same config and seed, dataset files and JSON reports are
byte-identical across runs (timing lives only in the aggregate CSV).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .distributions import (Dataset, MarginalSpec, NoiseModel, empirical_error,
                            label_dataset, load_dataset, sample_marginal,
                            to_binary, to_csv)
from .errors import HalftestError, PreconditionError
from .learner import (FixedDatasetSource, LearnerConfig, SyntheticSource,
                      universal_tester_learner)
from .numerics import unit
from .oracle import (brute_force_max_fourth_moment, erm_halfspace,
                     finite_difference_gradient, gaussian_strip_stats,
                     structural_check)
from .sos_hyper import empirical_fourth_moment_tensor, solve_relaxation
from .surrogate import PsgdConfig, RampParams, surrogate_gradient, surrogate_loss
from .testers import (TesterConfig, hypercontractivity_test,
                      local_disagreement_test, spectral_test,
                      stationary_point_test, strip_probability,
                      weak_anticoncentration_test)
from . import rng

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_CONFIG = 2
EXIT_IO = 3

TESTER_NAMES = ("spectral", "strip", "disagreement", "anticoncentration",
                "hypercontractivity", "stationary")
ORACLE_CHECKS = ("fourth-moment", "gradient", "erm", "structural", "strip-stats")


class ConfigError(Exception):
    pass


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def atomic_write(path: str, data) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".halftest-tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _report(cfg: dict, body: dict) -> str:
    payload = {"library_version": __version__,
               "config_hash": _config_hash(cfg)}
    payload.update(body)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# config -> objects

def marginal_from_config(c: dict) -> MarginalSpec:
    try:
        return MarginalSpec(
            kind=c["kind"], dim=int(c["dim"]),
            nu=c.get("nu"), spread=c.get("spread"),
            direction=tuple(c["direction"]) if c.get("direction") else None)
    except (KeyError, TypeError, ValueError, HalftestError) as exc:
        raise ConfigError(f"bad marginal config: {exc}") from exc


def _target_vector(c: dict, dim: int) -> tuple:
    target = c.get("target", "e1")
    if target == "e1":
        w = np.zeros(dim)
        w[0] = 1.0
        return tuple(w)
    return tuple(unit(np.asarray(target, dtype=float)))


def noise_from_config(c: dict, dim: int) -> NoiseModel:
    try:
        return NoiseModel(
            kind=c["kind"], target=_target_vector(c, dim),
            eta=float(c.get("eta", 0.0)), profile=c.get("profile", "constant"),
            width=float(c.get("width", 0.0)), rule=c.get("rule"),
            flip_prob=float(c.get("flip_prob", 0.0)))
    except (KeyError, TypeError, ValueError, HalftestError) as exc:
        raise ConfigError(f"bad noise config: {exc}") from exc


def tester_from_config(c: dict) -> TesterConfig:
    try:
        return TesterConfig(
            lam=float(c.get("lambda", 3.0)), gamma=float(c.get("gamma", 1.0)),
            delta=float(c.get("delta", 0.25)), c1=float(c.get("c1", 4.0)),
            c_hyper=float(c.get("c_hyper", 10.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad tester config: {exc}") from exc


def psgd_from_config(c: dict) -> PsgdConfig:
    try:
        return PsgdConfig(iterations=int(c.get("iterations", 400)),
                          step_size=c.get("step_size"),
                          batch_size=c.get("batch_size"),
                          seed=int(c.get("seed", 0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad psgd config: {exc}") from exc


def learner_from_config(c: dict) -> LearnerConfig:
    try:
        return LearnerConfig(
            lam=float(c.get("lambda", 1.0)), gamma=float(c.get("gamma", 1.0)),
            eps=float(c["eps"]), delta=float(c.get("delta", 1.0 / 3.0)),
            noise=c.get("noise", "massart"),
            eta=c.get("eta"),
            psgd=psgd_from_config(c.get("psgd", {})),
            tester=tester_from_config(c.get("tester", {})),
            n1=int(c.get("n1", 100_000)), n2=int(c.get("n2", 100_000)),
            repetitions=int(c.get("repetitions", 1)))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad learner config: {exc}") from exc


def resolved_constants(tc: TesterConfig) -> dict:
    return {"lambda": tc.lam, "gamma": tc.gamma, "delta": tc.delta,
            "c1": tc.c1, "c_hyper": tc.c_hyper,
            "strip_constant": tc.strip_constant}


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def _trial_seeds(cfg: dict) -> list:
    trials = int(cfg.get("trials", 1))
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if "seeds" in cfg:
        seeds = [int(s) for s in cfg["seeds"]]
        if len(seeds) != trials:
            raise ConfigError("seeds list length must equal trials")
        return seeds
    root = int(cfg.get("seed", 0))
    return [root + i for i in range(trials)]


# ---------------------------------------------------------------------------
# subcommands

def cmd_sample(args) -> int:
    cfg = _load_config(args.config)
    marginal = marginal_from_config(cfg["marginal"])
    n = int(cfg.get("n", 0))
    if n < 1:
        raise ConfigError("n must be >= 1")
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    points = sample_marginal(marginal, n, seed)
    noise = noise_from_config(cfg.get("noise", {"kind": "clean"}), marginal.dim)
    ds = label_dataset(points, noise, seed)
    out = args.out or cfg.get("out")
    if not out:
        raise ConfigError("sample needs an output path (--out)")
    try:
        data = to_csv(ds) if str(out).endswith(".csv") else to_binary(ds)
        atomic_write(out, data)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_ACCEPT


def _run_tester(ds: Dataset, cfg: dict):
    name = cfg.get("tester")
    if name not in TESTER_NAMES:
        raise ConfigError(f"tester must be one of {TESTER_NAMES}")
    tc = tester_from_config(cfg.get("tester_config", {}))
    w = None
    if name != "hypercontractivity":
        if "w" not in cfg:
            raise ConfigError(f"tester {name} needs a unit vector 'w'")
        w = unit(np.asarray(cfg["w"], dtype=float))
        if w.shape != (ds.dim,):
            raise ConfigError("w dimension does not match the dataset")
    if name == "spectral":
        return spectral_test(ds.points, float(cfg["theta"]), cfg.get("mode", "min"), tc)
    if name == "strip":
        prob = strip_probability(ds.points, w, float(cfg["sigma"]))
        return {"strip_probability": prob}
    if name == "disagreement":
        return local_disagreement_test(ds.points, w, float(cfg["theta"]), tc)
    if name == "anticoncentration":
        return weak_anticoncentration_test(ds.points, w, float(cfg["sigma"]), tc)
    if name == "hypercontractivity":
        return hypercontractivity_test(ds.points, tc.gamma, tc.c_hyper)
    eta = cfg.get("eta")
    return stationary_point_test(ds, w, float(cfg["sigma"]),
                                 None if eta is None else float(eta), tc)


def cmd_test(args) -> int:
    cfg = _load_config(args.config)
    try:
        ds = load_dataset(args.dataset)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    result = _run_tester(ds, cfg)
    tc = tester_from_config(cfg.get("tester_config", {}))
    if isinstance(result, dict):
        body = {"result": result, "constants": resolved_constants(tc)}
        text = _report(cfg, body)
        print(text, end="")
        if args.out:
            atomic_write(args.out, text)
        return EXIT_ACCEPT
    body = {"accepted": result.accepted, "diagnostics": result.diagnostics,
            "constants": resolved_constants(tc)}
    text = _report(cfg, body)
    print(text, end="")
    if args.out:
        atomic_write(args.out, text)
    return EXIT_ACCEPT if result.accepted else EXIT_REJECT


def _learn_trial(payload) -> dict:
    cfg, seed = payload
    learner_cfg = learner_from_config(cfg["learner"])
    if "dataset" in cfg:
        source = FixedDatasetSource(load_dataset(cfg["dataset"]))
    else:
        marginal = marginal_from_config(cfg["marginal"])
        noise = noise_from_config(cfg["noise"], marginal.dim)
        source = SyntheticSource(marginal, noise, seed)
    outcome = universal_tester_learner(source, learner_cfg, seed=seed)
    record = json.loads(outcome.to_json())
    wall = record.pop("wall_time")
    record["seed"] = seed
    return {"record": record, "wall_time": wall}


def cmd_learn(args) -> int:
    cfg = _load_config(args.config)
    if "learner" not in cfg:
        raise ConfigError("learn config needs a 'learner' section")
    if "dataset" not in cfg:
        for key in ("marginal", "noise"):
            if key not in cfg:
                raise ConfigError(
                    f"learn config needs a '{key}' section (or 'dataset')")
    if args.seed is not None:
        cfg = dict(cfg)
        cfg["seed"] = int(args.seed)
    seeds = _trial_seeds(cfg)
    jobs = max(1, int(args.jobs))
    payloads = [(cfg, seed) for seed in seeds]
    if jobs == 1 or len(payloads) == 1:
        results = [_learn_trial(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_learn_trial, payloads))

    out_dir = args.out or cfg.get("out")
    if not out_dir:
        raise ConfigError("learn needs an output directory (--out)")
    tc = tester_from_config(cfg["learner"].get("tester", {}))
    try:
        os.makedirs(out_dir, exist_ok=True)
        rows = []
        for i, res in enumerate(results):
            rec = res["record"]
            text = _report(cfg, {"trial": i, "outcome": rec,
                                 "constants": resolved_constants(tc)})
            atomic_write(os.path.join(out_dir, f"trial_{i:03d}.json"), text)
            rows.append([i, int(rec["status"] == "accepted"),
                         rec["empirical_error"] if rec["empirical_error"] is not None else "",
                         rec["sigma_used"] if rec["sigma_used"] is not None else "",
                         f"{res['wall_time']:.3f}"])
        buf = []
        buf.append("trial,accepted,error,sigma,wall_time")
        for row in rows:
            buf.append(",".join(str(v) for v in row))
        atomic_write(os.path.join(out_dir, "aggregate.csv"), "\n".join(buf) + "\n")
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    accept_rate = sum(r["record"]["status"] == "accepted" for r in results) / len(results)
    print(json.dumps({"trials": len(results), "accept_rate": accept_rate}))
    if len(results) == 1:
        return EXIT_ACCEPT if results[0]["record"]["status"] == "accepted" else EXIT_REJECT
    return EXIT_ACCEPT


def _oracle_report(ds: Dataset, cfg: dict) -> dict:
    check = cfg.get("check")
    if check not in ORACLE_CHECKS:
        raise ConfigError(f"check must be one of {ORACLE_CHECKS}")
    seed = int(cfg.get("seed", 0))
    if check == "fourth-moment":
        value, v = brute_force_max_fourth_moment(ds.points, seed=seed)
        sos, _, sol = solve_relaxation(empirical_fourth_moment_tensor(ds.points))
        return {"check": check, "oracle_value": value,
                "oracle_direction": [float(x) for x in v],
                "sos_value": sos, "sos_status": sol.status,
                "pass": bool(sol.optimal and sos >= value - 1e-5)}
    if check == "gradient":
        sigma = float(cfg.get("sigma", 0.2))
        p = RampParams(sigma)
        gen = rng.stream(seed, rng.STREAM_ORACLE + 3)
        worst = 0.0
        for _ in range(int(cfg.get("directions", 10))):
            w = rng.unit_sphere(gen, ds.dim)
            lib = surrogate_gradient(w, ds, p)
            ref = finite_difference_gradient(lambda u: surrogate_loss(u, ds, p), w)
            denom = max(np.linalg.norm(ref), 1e-9)
            worst = max(worst, float(np.linalg.norm(lib - ref) / denom))
        return {"check": check, "sigma": sigma,
                "max_relative_deviation": worst, "pass": worst <= 1e-5}
    if check == "erm":
        w, opt = erm_halfspace(ds, seed=seed)
        return {"check": check, "opt": opt, "w": [float(x) for x in w],
                "pass": bool(abs(empirical_error(w, ds) - opt) < 1e-12)}
    if check == "structural":
        sigma = float(cfg.get("sigma", 0.1))
        gen = rng.stream(seed, rng.STREAM_ORACLE + 4)
        w_star = unit(np.asarray(cfg.get("w_star", _target_vector(cfg, ds.dim)),
                                 dtype=float))
        results = []
        for _ in range(int(cfg.get("instances", 20))):
            w = rng.unit_sphere(gen, ds.dim)
            theta = math.acos(float(np.clip(w @ w_star, -1.0, 1.0)))
            if not 1e-6 < theta < math.pi / 2 - 1e-6:
                continue
            alpha = max(sigma / (2.0 * math.tan(theta)), 0.3)
            results.append(structural_check(ds, w, w_star, sigma, alpha))
        return {"check": check, "instances": len(results),
                "violations": sum(not r["holds"] for r in results),
                "pass": all(r["holds"] for r in results)}
    # strip-stats
    sigma = float(cfg.get("sigma", 0.1))
    offset = float(cfg.get("offset", 0.3))
    gen = rng.stream(seed, rng.STREAM_ORACLE + 5)
    w = rng.unit_sphere(gen, ds.dim)
    from .numerics import householder_basis
    v = householder_basis(w)[0]
    analytic = gaussian_strip_stats(sigma, offset, uu_inner=float(w @ v))
    xw = ds.points @ w
    xv = ds.points @ v
    n = ds.n
    emp = {
        "strip_probability": float(np.mean(np.abs(xw) <= sigma)),
        "strip_second_moment": float(np.mean(xv**2 * (np.abs(xw) <= sigma))),
        "cross_fourth_moment": float(np.mean(xw**2 * xv**2)),
        "offset_strip_second_moment": float(np.mean(
            xv**2 * ((np.abs(xw) >= offset) & (np.abs(xw) <= offset + sigma)))),
    }
    ses = {
        "strip_probability": float(np.std(np.abs(xw) <= sigma) / math.sqrt(n)),
        "strip_second_moment": float(np.std(xv**2 * (np.abs(xw) <= sigma)) / math.sqrt(n)),
        "cross_fourth_moment": float(np.std(xw**2 * xv**2) / math.sqrt(n)),
        "offset_strip_second_moment": float(np.std(
            xv**2 * ((np.abs(xw) >= offset) & (np.abs(xw) <= offset + sigma))) / math.sqrt(n)),
    }
    checks = {key: bool(abs(emp[key] - analytic[key]) <= 3.0 * max(ses[key], 1e-12))
              for key in emp}
    return {"check": check, "sigma": sigma, "offset": offset,
            "empirical": emp, "analytic": analytic,
            "standard_errors": ses, "per_quantity": checks,
            "pass": all(checks.values())}


def cmd_oracle(args) -> int:
    cfg = _load_config(args.config)
    try:
        ds = load_dataset(args.dataset)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    report = _oracle_report(ds, cfg)
    text = _report(cfg, report)
    print(text, end="")
    if args.out:
        atomic_write(args.out, text)
    return EXIT_ACCEPT if report["pass"] else EXIT_REJECT


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    suite = cfg.get("suite")
    if suite != "learn":
        raise ConfigError("bench supports the 'learn' suite "
                          "(trials of the full tester-learner)")
    return cmd_learn(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halftest",
        description="universal tester-learner experiments for halfspaces")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="generate a labeled dataset file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("test", help="run one tester on a dataset")
    p.add_argument("dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("learn", help="run tester-learner trials")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("oracle", help="cross-check library values on a dataset")
    p.add_argument("dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run a named benchmark suite")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PreconditionError, HalftestError, KeyError,
            ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
