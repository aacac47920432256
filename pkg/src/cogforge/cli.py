"""Command-line entry point."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import dataset as ds
from .baselines import REGISTRY, get_baseline
from .errors import CogforgeError, ConfigError

STUDIES = ("bandit-identification", "heuristic-noise")
ENVS = ("bandit", "bandit-blocks", "twostep", "rlwm", "decision")


def load_config(path):
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def resolve_model(spec):
    """A registered model name, a shipped program name, or a path to a ``.mdl`` file."""
    from .mdl import library_names, load_library, parse
    if spec.endswith(".mdl") or os.path.sep in spec:
        with open(spec) as fh:
            return parse(fh.read(), name=os.path.splitext(os.path.basename(spec))[0])
    key = spec.lower()
    try:
        return get_baseline(key)
    except CogforgeError:
        if key in library_names():
            return load_library(key)
        raise


def _out(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _emit(args, summary):
    if getattr(args, "json", False):
        print(json.dumps(summary, sort_keys=True))
    else:
        for k, v in summary.items():
            print(f"{k}: {v}")


def _load_data(path, kind):
    return ds.load(path, kind=kind)


# -- subcommands ------------------------------------------------------------------

def cmd_fit(args):
    from .fitting import fit_all, write_csv, write_jsonl
    d = _load_data(args.data, args.kind)
    model = resolve_model(args.model)
    model.require(d.kind)
    fits = fit_all(model, d, args.restarts, args.seed, args.jobs, d.kind)
    out = _out(args)
    write_jsonl(fits, os.path.join(out, "fits.jsonl"))
    write_csv(fits, os.path.join(out, "fits.csv"))
    ok = [f for f in fits if not f.error]
    total = sum(f.metric(args.metric) for f in ok)
    _emit(args, {"model": getattr(model, "name", args.model), "participants": len(fits),
                 "failed": len(fits) - len(ok), f"mean_{args.metric}": total / len(ok) if ok else None})
    return 0


def cmd_compare(args):
    from .comparison import compare
    from .fitting import read_jsonl
    fits = {}
    for p in args.fits:
        path = os.path.join(p, "fits.jsonl") if os.path.isdir(p) else p
        for f in read_jsonl(path):
            fits.setdefault(f.model_id, []).append(f)
    rep = compare(fits, args.metric, args.mc_samples, args.seed)
    out = _out(args)
    rep.to_json(os.path.join(out, "report.json"))
    rep.to_csv(os.path.join(out, f"{args.metric}_table.csv"))
    _emit(args, {"best": rep.best, "runner_up": rep.runner_up, "t": rep.t_stat, "p": rep.p_value,
                 "exceedance": dict(zip(rep.models, rep.exceedance.tolist()))})
    return 0


def _make_env(name, cfg):
    from .synthgen import Bandit, DecisionProblemSet, RLWMTask, TwoStep, gen_decision_problems
    if name == "bandit":
        return Bandit(tuple(cfg.get("contingencies", (0.2, 0.8))), tuple(cfg.get("reward_alphabet", (0, 1))),
                      cfg.get("feedback", "partial"))
    if name == "bandit-blocks":
        return Bandit.high_low(cfg.get("n_blocks", 4), cfg.get("trials_per_block", 40),
                               cfg.get("feedback", "full"))
    if name == "twostep":
        return TwoStep(drift=cfg.get("drift", True))
    if name == "rlwm":
        return RLWMTask(tuple(cfg.get("set_sizes", (3, 6, 3, 6))))
    if name == "decision":
        return gen_decision_problems(cfg.get("n_problems", 80), cfg.get("n_features", 4),
                                     cfg.get("seed", 0), cfg.get("binary", True))
    raise ConfigError(f"unknown environment {name!r}; choose from {', '.join(ENVS)}")


def _write_dataset(d, out, stem, fmt):
    path = os.path.join(out, f"{stem}.{fmt}")
    ds.save(d, path)
    return path


def cmd_generate(args):
    from .synthgen import gen_bandit_agents, gen_decision_problems, gen_rlwm_agents, \
        gen_twostep_agents, simulate_heuristic_agents
    cfg = load_config(args.config)
    task = cfg.get("task", "bandit")
    seed = int(cfg.get("seed", 0))
    n = int(cfg.get("n_agents", 100))
    if task == "bandit":
        d, truth = gen_bandit_agents(cfg.get("model", "rw_pm"), n, cfg.get("n_trials", 150),
                                     tuple(cfg.get("contingencies", (0.2, 0.8))), seed,
                                     feedback=cfg.get("feedback", "partial"))
    elif task == "twostep":
        d, truth = gen_twostep_agents(cfg.get("model", "hybrid"), n, cfg.get("n_trials", 200), seed,
                                      params=cfg.get("params"), drift=cfg.get("drift", True))
    elif task == "rlwm":
        d, truth = gen_rlwm_agents(cfg.get("model", "rlwm"), n, tuple(cfg.get("set_sizes", (3, 6, 3, 6))),
                                   seed, params=cfg.get("params"))
    elif task == "decision":
        probs = gen_decision_problems(cfg.get("n_problems", 80), cfg.get("n_features", 3), seed,
                                      cfg.get("binary", False))
        d = simulate_heuristic_agents(cfg.get("heuristic", "ttb"), probs, cfg.get("noise", 0.0), n, seed)
        truth = [{"heuristic": cfg.get("heuristic", "ttb"), "noise": cfg.get("noise", 0.0)}] * n
    else:
        raise ConfigError(f"unknown task {task!r}")
    if d is None:
        raise ConfigError("n_agents must be positive")
    out = _out(args)
    path = _write_dataset(d, out, cfg.get("name", task), cfg.get("format", "json"))
    with open(os.path.join(out, "true_params.json"), "w") as fh:
        json.dump(dict(zip(d.ids, truth)), fh, indent=1, sort_keys=True)
    _emit(args, {"dataset": path, "participants": len(d), "kind": d.kind.value})
    return 0


def cmd_simulate(args):
    model = resolve_model(args.model)
    cfg = load_config(args.env_config) if args.env_config else {}
    env = _make_env(args.env, cfg)
    theta = [float(x) for x in args.theta.split(",")] if args.theta else []
    parts = [model.simulate(env, theta, args.n, seed=args.seed + i, participant_id=f"sim_{i:03d}")
             for i in range(args.participants)]
    d = ds.Dataset(env.kind, parts, f"simulated {getattr(model, 'name', args.model)}")
    out = _out(args)
    path = _write_dataset(d, out, "simulated", args.format)
    _emit(args, {"dataset": path, "participants": len(d), "trials": len(parts[0].trials)})
    return 0


def cmd_recover(args):
    import csv
    from .synthgen import noise_sweep, recovery_study
    out = _out(args)
    if args.study == "bandit-identification":
        rep = recovery_study(n_agents=args.agents, restarts=args.restarts, seed=args.seed)
        path = os.path.join(out, "recovery.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["participant", "true_model", "identified_model", "bic_true", "bic_alt"])
            for e in rep.entries:
                w.writerow([e.participant_id, e.true_model, e.identified_model, repr(e.bic_true),
                            repr(e.bic_alt)])
        with open(os.path.join(out, "recovery_summary.json"), "w") as fh:
            json.dump({k: v for k, v in rep.to_dict().items() if k != "entries"}, fh, indent=1,
                      sort_keys=True)
        _emit(args, {"accuracy": rep.accuracy, "mean_bic_true": rep.mean_bic_true, "csv": path})
        return 0
    rows = noise_sweep(n_agents=args.agents if args.agents else 10, seed=args.seed)
    path = os.path.join(out, "noise_sweep.csv")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    _emit(args, {"accuracy": {f"{r['heuristic']}@{r['noise']}": r["accuracy"] for r in rows},
                 "csv": path})
    return 0


def cmd_ppc(args):
    from .ppc import DECISION_STATS, correlate, run_ppc
    d = _load_data(args.data, args.kind)
    out = _out(args)
    tab = run_ppc(d)
    tab.to_csv(os.path.join(out, "ppc_data.csv"))
    summary = {"statistics": {s: tab.mean(s) for s in tab.statistics}}
    if args.sim:
        sim = _load_data(args.sim, args.kind or d.kind.value)
        stab = run_ppc(sim)
        stab.to_csv(os.path.join(out, "ppc_sim.csv"))
        summary["simulated"] = {s: stab.mean(s) for s in stab.statistics}
        if d.kind is ds.ParadigmKind.DECISION:
            summary["correlation"] = {s: correlate(tab, stab, s) for s in DECISION_STATS}
    _emit(args, summary)
    return 0


def _engine_from(cfg):
    from .pipeline import HTTPEngine, LadderEngine, MockEngine, ScriptedEngine, learning_script
    e = dict(cfg.get("engine", {}))
    kind = e.pop("type", "http")
    if kind == "http":
        return HTTPEngine(e.get("base_url"), e.get("model", ""), e.get("api_key_env", "COGFORGE_API_KEY"),
                          e.get("temperature"), preset=e.get("preset"))
    if kind == "ladder":
        return LadderEngine()
    if kind == "scripted":
        script = e.get("script")
        if script is None:
            return ScriptedEngine(learning_script(cfg.get("iterations", 10)))
        texts = []
        for s in script:
            with open(s) as fh:
                texts.append(fh.read())
        return ScriptedEngine(texts)
    if kind == "mock":
        return MockEngine(e.get("responses", {}), e.get("default"))
    raise ConfigError(f"unknown engine type {kind!r}")


def _run_config(cfg):
    from .pipeline import RunConfig
    if "dataset" not in cfg:
        raise ConfigError("config needs a 'dataset' path")
    d = _load_data(cfg["dataset"], cfg.get("kind"))
    sp = cfg.get("split", {})
    split = ds.SplitSpec(sp.get("prompt", 0.2), sp.get("validation", 0.4), sp.get("test", 0.4),
                         sp.get("seed", cfg.get("seed", 0)))
    return RunConfig(d, _engine_from(cfg), split, cfg.get("metric", "bic"), cfg.get("iterations", 10),
                     cfg.get("candidates_per_iter", 3), cfg.get("max_retries", 3), cfg.get("seed", 0),
                     cfg.get("restarts", 20), tuple(cfg.get("baselines", ())), cfg.get("components"),
                     cfg.get("prompt_participants"), cfg.get("prompt_trials"), cfg.get("temperature"),
                     cfg.get("any_overlap", False), cfg.get("jobs", 1),
                     cfg.get("mc_samples", 100_000))


def cmd_run(args):
    from .pipeline import run, write_archive
    rc = _run_config(load_config(args.config))
    res = run(rc)
    write_archive(res, _out(args))
    _emit(args, {"run_id": res.run_id, "best_model": res.best_model.name,
                 f"best_{rc.metric}": res.best_score, "leaks": len(res.leaks)})
    return 0


def cmd_ablate(args):
    from .pipeline import ablate
    rc = _run_config(load_config(args.config))
    comps = [c.strip() for c in args.components.split(",") if c.strip()]
    tab = ablate(rc, comps)
    out = _out(args)
    tab.to_csv(os.path.join(out, "ablation.csv"))
    _emit(args, {"worst": tab.worst(),
                 "mean_delta": {r.ablated: r.mean_delta for r in tab.rows}})
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="cogforge", description="Fit, compare and generate cognitive models.")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def common(sp, out=True):
        if out:
            sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--json", action="store_true", help="print one JSON summary line")
        sp.add_argument("--seed", type=int, default=0)

    f = sub.add_parser("fit", help="fit a model to every participant")
    f.add_argument("--model", required=True, help="model name or .mdl file")
    f.add_argument("--data", required=True)
    f.add_argument("--kind", default=None, help="paradigm (needed for CSV input)")
    f.add_argument("--restarts", type=int, default=20)
    f.add_argument("--metric", choices=("bic", "aic"), default="bic")
    f.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    common(f)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("compare", help="compare fitted models")
    c.add_argument("--fits", nargs="+", required=True, help="fit directories or .jsonl files")
    c.add_argument("--metric", choices=("bic", "aic"), default="bic")
    c.add_argument("--mc-samples", type=int, default=1_000_000)
    common(c)
    c.set_defaults(func=cmd_compare)

    g = sub.add_parser("generate", help="generate a synthetic dataset from a config")
    g.add_argument("--config", required=True)
    common(g)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="simulate a model in a task environment")
    s.add_argument("--model", required=True)
    s.add_argument("--env", required=True, choices=ENVS)
    s.add_argument("--env-config", default=None)
    s.add_argument("--theta", default="", help="comma-separated parameter values")
    s.add_argument("--n", type=int, default=None, help="trials per participant")
    s.add_argument("--participants", type=int, default=1)
    s.add_argument("--format", choices=("json", "csv"), default="json")
    common(s)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("recover", help="run a model-recovery study")
    r.add_argument("--study", required=True, choices=STUDIES)
    r.add_argument("--agents", type=int, default=100)
    r.add_argument("--restarts", type=int, default=20)
    common(r)
    r.set_defaults(func=cmd_recover)

    q = sub.add_parser("ppc", help="behavioural summary statistics")
    q.add_argument("--data", required=True)
    q.add_argument("--sim", default=None, help="simulated dataset to compare against")
    q.add_argument("--kind", default=None)
    common(q)
    q.set_defaults(func=cmd_ppc)

    u = sub.add_parser("run", help="run the guided generation loop")
    u.add_argument("--config", required=True)
    common(u)
    u.set_defaults(func=cmd_run)

    a = sub.add_parser("ablate", help="rerun the loop without prompt components")
    a.add_argument("--config", required=True)
    a.add_argument("--components", default="feedback,data,description,template")
    common(a)
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        return args.func(args)
    except (CogforgeError, ValueError, OSError, KeyError) as e:
        print(f"cogforge {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
