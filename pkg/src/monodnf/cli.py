"""``monodnf`` command line: simulate, fit-single, anneal, rjmcmc, crossval.

Configuration is a YAML file merged over built-in defaults, then dedicated
flags, then ``--set section.key=value`` overrides (values parsed as YAML).
Everything is validated before the output directory is touched. Exit codes:
0 success, 2 usage or configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import anneal as sa
from . import rjmcmc, single
from .core import Dataset, DnfFunction, indices_from_mask, render_dnf
from .data import SimSpec, load_csv, load_mushroom, one_hot_encode, save_dataset, simulate
from .evaluation import crossval, prior_grid, term_hits
from .posterior import PriorConfig

log = logging.getLogger("monodnf")

COMMANDS = ("simulate", "fit-single", "anneal", "rjmcmc", "crossval")

DEFAULTS = {
    "seed": 0,
    "jobs": 1,
    "output": None,
    "data": {"simulate": None, "csv": None, "mushroom": None, "y_column": "y", "negations": False},
    "prior": {
        "beta0": [1.0, 1.0], "beta1": [1.0, 1.0], "theta": None, "p_geom": None,
        "uniform_subsets": False, "enforce_order": False,
    },
    "single": {"chains": 4, "iters": 10_000, "burnin": 5_000},
    "anneal": {
        "ln_lambda0": 1000.0, "rho": 0.9, "steps": 10_000, "move_weights": [1.0] * 7,
        "m0": 1, "restarts": 20, "boost_all_dimension_moves": False,
    },
    "rjmcmc": {"iters": 100_000, "move_probs": [0.5, 0.25, 0.25], "max_terms": None, "init": None},
    "crossval": {"thetas": [2, 5, 10, 30], "p_geoms": [0.1, 0.5, 0.9], "repetitions": 10, "fraction": 0.5},
}

SIM_DEFAULTS = {"n": 1000, "p": 100, "term_sizes": [2, 2], "pi0": 0.1, "pi1": 0.9, "seed": None}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="monodnf", description="Bayesian learning of monotone DNF markers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "simulate": "simulate a dataset with a planted DNF",
        "fit-single": "single-marker Metropolis-within-Gibbs chains",
        "anneal": "simulated annealing over DNFs with restarts",
        "rjmcmc": "reversible-jump sampler (p <= 12)",
        "crossval": "repeated hold-out AUC over a prior grid",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name], description=helps[name])
        s.add_argument("-c", "--config", help="YAML configuration file")
        s.add_argument("-o", "--output", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--jobs", type=int)
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config entry, e.g. anneal.steps=500")
        s.add_argument("-v", "--verbose", action="store_true")
        if name != "simulate":
            s.add_argument("--csv", help="binary CSV dataset")
            s.add_argument("--mushroom", help="raw UCI mushroom file")
            s.add_argument("--theta", type=float)
            s.add_argument("--p-geom", type=float)
        if name == "fit-single":
            s.add_argument("--chains", type=int)
            s.add_argument("--iters", type=int)
            s.add_argument("--burnin", type=int)
        if name in ("anneal", "crossval"):
            s.add_argument("--steps", type=int)
            s.add_argument("--restarts", type=int)
        if name == "rjmcmc":
            s.add_argument("--iters", type=int)
        if name == "crossval":
            s.add_argument("--repetitions", type=int)
    return p


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


def _set_path(cfg: dict, dotted: str, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            if k == "simulate" and node is cfg.get("data"):
                node[k] = dict(SIM_DEFAULTS)
            else:
                raise ConfigError(f"unknown config key {dotted!r}")
        node = node[k]
    last = keys[-1]
    if last not in node:
        raise ConfigError(f"unknown config key {dotted!r}")
    if isinstance(value, dict):
        base = node[last]
        if base is None and last == "simulate" and node is cfg.get("data"):
            base = SIM_DEFAULTS
        if isinstance(base, dict):
            value = _merge(base, value, dotted + ".")
    node[last] = value


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = yaml.safe_load(fh) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {args.config}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        cfg = _merge(cfg, loaded)
    if isinstance(cfg["data"].get("simulate"), dict):
        cfg["data"]["simulate"] = _merge(SIM_DEFAULTS, cfg["data"]["simulate"], "data.simulate.")
    if args.command == "simulate" and cfg["data"]["simulate"] is None:
        cfg["data"]["simulate"] = dict(SIM_DEFAULTS)

    flags = {
        "output": args.output, "seed": args.seed, "jobs": args.jobs,
        "data.csv": getattr(args, "csv", None), "data.mushroom": getattr(args, "mushroom", None),
        "prior.theta": getattr(args, "theta", None), "prior.p_geom": getattr(args, "p_geom", None),
        "single.chains": getattr(args, "chains", None), "single.burnin": getattr(args, "burnin", None),
        "anneal.steps": getattr(args, "steps", None), "anneal.restarts": getattr(args, "restarts", None),
        "crossval.repetitions": getattr(args, "repetitions", None),
    }
    if getattr(args, "iters", None) is not None:
        flags["single.iters" if args.command == "fit-single" else "rjmcmc.iters"] = args.iters
    for key, v in flags.items():
        if v is not None:
            _set_path(cfg, key, v)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            _set_path(cfg, k.strip(), yaml.safe_load(v))
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse value in --set {item!r}") from e
    if isinstance(cfg["data"].get("simulate"), dict) and cfg["data"]["simulate"].get("seed") is None:
        cfg["data"]["simulate"]["seed"] = cfg["seed"]
    return cfg


# validation: turn the resolved dict into typed objects, or raise ConfigError

def _typed(fn, what):
    try:
        return fn()
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid {what}: {e}") from e


def prior_from(cfg: dict) -> PriorConfig:
    pr = cfg["prior"]
    return _typed(lambda: PriorConfig(
        tuple(pr["beta0"]), tuple(pr["beta1"]), pr["theta"], pr["p_geom"],
        bool(pr["uniform_subsets"]), bool(pr["enforce_order"]),
    ), "prior")


def anneal_from(cfg: dict) -> sa.AnnealConfig:
    a = cfg["anneal"]

    def build():
        w = [float(v) for v in a["move_weights"]]
        if len(w) != 7 or min(w) < 0 or sum(w) <= 0:
            raise ValueError("move_weights needs 7 non-negative numbers with a positive sum")
        total = sum(w)
        return sa.AnnealConfig(float(a["ln_lambda0"]), float(a["rho"]), int(a["steps"]),
                               tuple(v / total for v in w), int(a["m0"]), int(a["restarts"]),
                               bool(a["boost_all_dimension_moves"]))
    return _typed(build, "anneal section")


def sim_from(cfg: dict) -> SimSpec:
    s = cfg["data"]["simulate"]
    return _typed(lambda: SimSpec(int(s["n"]), int(s["p"]), tuple(s["term_sizes"]),
                                  float(s["pi0"]), float(s["pi1"]), int(s["seed"])), "data.simulate")


def validate(cfg: dict, command: str) -> dict:
    """Check the whole configuration; returns typed pieces for the command."""
    out = {}
    if cfg["output"] is None:
        raise ConfigError("no output directory (use -o or 'output:' in the config)")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1:
        raise ConfigError("jobs must be a positive integer")
    data = cfg["data"]
    sources = [k for k in ("simulate", "csv", "mushroom") if data[k] is not None]
    if command == "simulate":
        if data["csv"] is not None or data["mushroom"] is not None:
            raise ConfigError("simulate takes only a data.simulate section")
    elif len(sources) != 1:
        raise ConfigError(f"exactly one data source required, got {sources or 'none'}")
    if data["simulate"] is not None:
        out["sim"] = sim_from(cfg)
    for key in ("csv", "mushroom"):
        if data[key] is not None and not Path(data[key]).is_file():
            raise ConfigError(f"data.{key}: no such file {data[key]!r}")
    out["prior"] = prior_from(cfg)
    if command == "fit-single":
        s = cfg["single"]
        if not (isinstance(s["chains"], int) and s["chains"] >= 1):
            raise ConfigError("single.chains must be >= 1")
        if not (0 <= s["burnin"] < s["iters"]):
            raise ConfigError("need 0 <= single.burnin < single.iters")
    if command in ("anneal", "crossval"):
        out["anneal"] = anneal_from(cfg)
    if command == "rjmcmc":
        r = cfg["rjmcmc"]
        mp = r["move_probs"]
        if len(mp) != 3 or min(mp) < 0 or abs(sum(mp) - 1) > 1e-9 or abs(mp[1] - mp[2]) > 1e-12:
            raise ConfigError("rjmcmc.move_probs must be (within, birth, death) summing to 1 with birth == death")
        if int(r["iters"]) < 1:
            raise ConfigError("rjmcmc.iters must be >= 1")
    if command == "crossval":
        c = cfg["crossval"]
        if not c["thetas"] or not c["p_geoms"]:
            raise ConfigError("crossval grid is empty")
        out["grid"] = _typed(lambda: prior_grid(c["thetas"], c["p_geoms"], tuple(cfg["prior"]["beta0"]),
                                                tuple(cfg["prior"]["beta1"])), "crossval grid")
        if not 0 < float(c["fraction"]) < 1 or int(c["repetitions"]) < 1:
            raise ConfigError("crossval needs 0 < fraction < 1 and repetitions >= 1")
    return out


def load_data(cfg: dict, typed: dict):
    """Returns the dataset and, for simulated data, the simulation output."""
    data = cfg["data"]
    if data["simulate"] is not None:
        sim = simulate(typed["sim"])
        return sim.dataset, sim
    if data["csv"] is not None:
        return load_csv(data["csv"], data["y_column"]), None
    table = load_mushroom(data["mushroom"])
    return one_hot_encode(table, negations=bool(data["negations"])), None


# artifact helpers

def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_output(cfg: dict) -> Path:
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(exist_ok=True)
    with open(out / "config.yaml", "w") as fh:
        yaml.safe_dump({k: v for k, v in cfg.items() if k != "output"}, fh, sort_keys=True)
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logging.getLogger().addHandler(handler)
    return out


def _model_json(terms, pp, logpost, d: Dataset) -> dict:
    return {
        "terms": [{"vars": indices_from_mask(t), "names": [d.names[j] for j in indices_from_mask(t)]} for t in terms],
        "pi0": pp.pi0,
        "pi1": pp.pi1,
        "logpost": logpost,
        "rule": render_dnf(DnfFunction.from_masks(terms, d.p), d.names),
    }


# commands

def cmd_simulate(cfg, typed):
    spec = typed["sim"]
    out = _prepare_output(cfg)
    sim = simulate(spec)
    save_dataset(sim.dataset, out / "data.csv")
    _write_json(out / "truth.json", {
        "terms": [indices_from_mask(t) for t in sim.true_f.masks],
        "rule": render_dnf(sim.true_f, sim.dataset.names),
        "beta": [float(b) for b in sim.beta],
        "pi0": spec.pi0, "pi1": spec.pi1, "n": spec.n, "p": spec.p, "seed": spec.seed,
        "n_positive": sim.dataset.n_p,
    })
    log.info("simulated n=%d p=%d positives=%d", spec.n, spec.p, sim.dataset.n_p)


def _truth_block(sim, terms, p) -> dict:
    exact, sup = term_hits(DnfFunction.from_masks(terms, p), sim.true_f)
    return {"planted": [indices_from_mask(t) for t in sim.true_f.masks],
            "exact": list(exact), "superset": list(sup)}


def cmd_fit_single(cfg, typed):
    s = cfg["single"]
    d, sim = load_data(cfg, typed)
    out = _prepare_output(cfg)
    traces = single.run_chains(d, typed["prior"], s["chains"], s["iters"], s["burnin"], cfg["seed"], cfg["jobs"])
    for c, tr in enumerate(traces):
        tr.write_csv(out / "traces" / f"chain{c}.csv")
    single.write_inclusion_csv(traces, d.names, out / "inclusion.csv")
    chains = []
    for tr in traces:
        top = tr.top_variables(min(10, d.p))
        chains.append({
            "top_variables": top,
            "top_names": [d.names[j] for j in top],
            "top_freq": [float(tr.inclusion_freq[j]) for j in top],
            "mean_pi0": float(np.mean(tr.pi0)),
            "mean_pi1": float(np.mean(tr.pi1)),
            "mean_k": float(np.mean(tr.k)),
            "acceptance": tr.accepted / tr.proposed,
        })
    summary = {
        "chains": chains,
        "pooled_pi0": float(np.mean([v for tr in traces for v in tr.pi0])),
        "pooled_pi1": float(np.mean([v for tr in traces for v in tr.pi1])),
    }
    if sim is not None:
        summary["planted"] = [indices_from_mask(t) for t in sim.true_f.masks]
    _write_json(out / "model.json", summary)
    with open(out / "report.csv", "w") as fh:
        fh.write("chain,mean_pi0,mean_pi1,mean_k,acceptance,top3\n")
        for c, ch in enumerate(chains):
            fh.write(f"{c},{ch['mean_pi0']!r},{ch['mean_pi1']!r},{ch['mean_k']!r},{ch['acceptance']!r},"
                     f"{' '.join(map(str, ch['top_variables'][:3]))}\n")


def cmd_anneal(cfg, typed):
    d, sim = load_data(cfg, typed)
    out = _prepare_output(cfg)
    best, results = sa.run_restarts(d, typed["prior"], typed["anneal"], cfg["seed"], cfg["jobs"])
    for r, res in enumerate(results):
        res.write_trace_csv(out / "traces" / f"restart{r}.csv")
        log.info("restart %d logpost=%.4f m=%d wall=%.2fs", r, res.log_post, res.m, res.wall_time)
    model = _model_json(best.terms, best.pp, best.log_post, d)
    model["restart"] = results.index(best)
    if sim is not None:
        model["truth"] = _truth_block(sim, best.terms, d.p)
    _write_json(out / "model.json", model)
    with open(out / "rules.txt", "w") as fh:
        fh.write(model["rule"] + "\n")
    with open(out / "report.csv", "w") as fh:
        fh.write("restart,m,sum_k,logpost,pi0,pi1\n")
        for r, res in enumerate(results):
            fh.write(f"{r},{res.m},{res.sum_k},{res.log_post!r},{res.pp.pi0!r},{res.pp.pi1!r}\n")


def cmd_rjmcmc(cfg, typed):
    r = cfg["rjmcmc"]
    d, sim = load_data(cfg, typed)
    if d.p > rjmcmc.MAX_P:
        raise ConfigError(f"rjmcmc is limited to p <= {rjmcmc.MAX_P}; dataset has p={d.p}")
    init = None if r["init"] is None else tuple(
        sum(1 << int(j) for j in term) for term in r["init"]
    )
    out = _prepare_output(cfg)
    trace = rjmcmc.run_rj(d, typed["prior"], int(r["iters"]), cfg["seed"], init,
                          tuple(r["move_probs"]), r["max_terms"], keep_states=True)
    trace.write_csv(out / "traces" / "rj.csv")
    counts = {}
    for s in trace.states:
        counts[s] = counts.get(s, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], sorted(kv[0])))
    with open(out / "report.csv", "w") as fh:
        fh.write("rank,frequency,rule\n")
        for i, (s, c) in enumerate(ranked[:50]):
            rule = render_dnf(DnfFunction.from_masks(sorted(s), d.p), d.names)
            fh.write(f"{i},{c / len(trace)!r},\"{rule}\"\n")
    top = ranked[0][0]
    model = {
        "top_state": [indices_from_mask(t) for t in sorted(top)],
        "top_frequency": ranked[0][1] / len(trace),
        "moves": dict(sorted(trace.move_counts.items())),
        "mean_m": float(np.mean(trace.m)),
    }
    _write_json(out / "model.json", model)


def cmd_crossval(cfg, typed):
    c = cfg["crossval"]
    d, _ = load_data(cfg, typed)
    out = _prepare_output(cfg)
    log.info("dataset n=%d p=%d positives=%d", d.n, d.p, d.n_p)
    rep = crossval(d, typed["grid"], typed["anneal"], int(c["repetitions"]), cfg["seed"],
                   float(c["fraction"]), cfg["jobs"])
    rep.write_summary_csv(out / "report.csv")
    rep.write_reps_csv(out / "reps.csv")
    rep.write_rules(out / "rules.txt")
    _write_json(out / "model.json", {"summary": rep.summary()})


HANDLERS = {
    "simulate": cmd_simulate, "fit-single": cmd_fit_single, "anneal": cmd_anneal,
    "rjmcmc": cmd_rjmcmc, "crossval": cmd_crossval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.INFO if args.verbose else logging.WARNING)
    console.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.addHandler(console)
    root.setLevel(logging.INFO)
    try:
        cfg = resolve_config(args)
        typed = validate(cfg, args.command)
        HANDLERS[args.command](cfg, typed)
    except ConfigError as e:
        print(f"monodnf: config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        log.exception("run failed")
        print(f"monodnf: error: {e}", file=sys.stderr)
        return 1
    finally:
        for h in (console, *[h for h in root.handlers if isinstance(h, logging.FileHandler)]):
            h.close()
            root.removeHandler(h)
    return 0


if __name__ == "__main__":
    sys.exit(main())
