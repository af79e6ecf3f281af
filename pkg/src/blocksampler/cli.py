"""Command-line entry point: ``blocksampler <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, build_config, resolve_seed
from .dists import make_rng
from .experiments import (
    SimConfig, linkpred_rows, linkpred_table, run_linkpred_comparison, run_simulation, simulation_table,
    write_rows,
)
from .models import MODELS, build_model
from .netdata import (
    CovariateTensor, DataError, generate_linkpred_network, generate_scenario, load_adjacency, load_covariates,
    load_labels, save_adjacency, save_covariates, save_labels,
)
from .predict import predictive_scores
from .sampler import run_chain
from .summary import ChainStore, config_hash, summarize_coefficients, summarize_partitions


def _out_dir(path) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    seed = resolve_seed(args.seed)
    out = _out_dir(args.out)
    scen = str(args.scenario)
    if scen in ("1", "2"):
        A, truth = generate_scenario(int(scen), args.n, seed)
    elif scen in ("czinb", "linkpred"):
        A, cov, truth = generate_linkpred_network(args.n, seed)
        save_covariates(out / "covariates.csv", cov)
    else:
        raise DataError(f"unknown scenario {args.scenario!r}")
    save_adjacency(out / "adjacency.csv", A)
    save_labels(out / "truth.csv", truth.z_true)
    print(f"wrote {out / 'adjacency.csv'} and {out / 'truth.csv'} (n={A.shape[0]}, seed={seed})")
    return 0


# ---------------------------------------------------------------------------
# fit


def load_data(cfg: RunConfig):
    if cfg.adjacency is None:
        raise ConfigError("an adjacency file is required (--adjacency)")
    A = load_adjacency(cfg.adjacency, cfg.adjacency_format, cfg.n)
    cov = None
    if cfg.model == "czinb":
        if cfg.covariates is None:
            raise ConfigError("covariates required for the czinb model (--covariates)")
        cov = load_covariates(cfg.covariates, A.shape[0], standardize=cfg.standardize)
        if cfg.intercept:
            cov = cov.with_intercept()
    return A, cov


def _fit_chain(task):
    cfg, chain, A, Y = task
    model = build_model(cfg.model, A, Y, cfg.settings)
    scfg = cfg.sampler_config(chain)
    records, _, diag = run_chain(model, scfg, make_rng(cfg.seed, 100 + chain))
    return chain, records, diag


def cmd_fit(args) -> int:
    cfg = build_config(args.config, _overrides(args))
    A, cov = load_data(cfg)
    Y = None if cov is None else cov.Y
    if args.dry_run:
        build_model(cfg.model, A, Y, cfg.settings)
        print(f"config ok: model={cfg.model} n={A.shape[0]} chains={cfg.chains} "
              f"kept draws per chain={cfg.sampler_config().n_kept}")
        return 0
    out = _out_dir(cfg.out)
    tasks = [(cfg, c, A, Y) for c in range(cfg.chains)]
    if cfg.jobs > 1 and cfg.chains > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_fit_chain, tasks))
    else:
        results = [_fit_chain(t) for t in tasks]
    # the output location is not part of the run's identity
    conf = {k: v for k, v in cfg.as_dict().items() if k != "out"}
    chash = config_hash(conf)
    for chain, records, diag in sorted(results, key=lambda r: r[0]):
        meta = {
            "model": cfg.model, "seed": cfg.seed, "chain": chain, "config_hash": chash,
            "config": conf, "diagnostics": diag, "n": int(A.shape[0]),
        }
        if cov is not None:
            meta["covariate_names"] = list(cov.names)
        ChainStore(records, meta).save(out, tag=str(chain))
        ks = np.array([rec["k"] for rec in records])
        acc = ", ".join(f"{k}={v:.3f}" for k, v in diag.items() if k.endswith("_accept"))
        print(f"chain {chain}: {len(records)} draws; occupied k mean {ks.mean():.2f} "
              f"(min {ks.min()}, max {ks.max()}); acceptance {acc}")
    print(f"chains written to {out}")
    return 0


def _overrides(args) -> dict:
    keys = ("model", "adjacency", "covariates", "adjacency_format", "n", "seed", "chains", "jobs", "out",
            "iterations", "burn_in", "thin")
    vals = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "intercept", False):
        vals["intercept"] = True
    if getattr(args, "no_standardize", False):
        vals["standardize"] = False
    return vals


# ---------------------------------------------------------------------------
# summarize / predict


def cmd_summarize(args) -> int:
    store = ChainStore.load(args.chain, args.tag)
    if not store.records:
        raise DataError("chain file has no records")
    z_true = load_labels(args.truth) if args.truth else None
    summ = summarize_partitions(store.partitions, z_true, args.level)
    out = _out_dir(args.out or args.chain)
    save_labels(out / f"z_hat_{args.tag}.csv", summ.z_hat)
    result = {"K_hat": summ.K_hat, "ball_radius": summ.ball_radius, "level": args.level}
    if z_true is not None:
        result["vi_truth"] = summ.vi_to_truth
    (out / f"summary_{args.tag}.json").write_text(json.dumps(result, indent=1, sort_keys=True))
    print(f"K_hat = {summ.K_hat}")
    print(f"credible-ball radius ({args.level:.2f}) = {summ.ball_radius:.4f}")
    if z_true is not None:
        print(f"VI(z_hat, z_true) = {summ.vi_to_truth:.4f}")
    if store.meta.get("model") == "czinb":
        rows = coefficient_table(store, summ.z_hat)
        write_rows(out / f"coefficients_{args.tag}.csv", rows)
        print(f"coefficient table: {out / f'coefficients_{args.tag}.csv'} ({len(rows)} rows)")
    return 0


def coefficient_table(store: ChainStore, z_hat) -> list[dict]:
    names = store.meta.get("covariate_names") or []
    k = int(np.unique(z_hat).size)
    rows = []
    for link in (1, 2):
        for l in range(k):
            for m in range(l, k):
                mean, ci = summarize_coefficients(store.records, z_hat, l, m, link)
                for s in range(mean.size):
                    rows.append({
                        "link": "psi" if link == 1 else "p", "l": l + 1, "m": m + 1,
                        "covariate": names[s] if s < len(names) else f"y{s + 1}",
                        "mean": float(mean[s]), "lower": float(ci[s, 0]), "upper": float(ci[s, 1]),
                    })
    return rows


def read_pairs(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and not rows[0][0].strip().lstrip("-").isdigit():
        rows = rows[1:]
    return np.array([[int(r[0]) - 1, int(r[1]) - 1] for r in rows], dtype=np.int64).reshape(-1, 2)


def cmd_predict(args) -> int:
    store = ChainStore.load(args.chain, args.tag)
    model = store.meta.get("model")
    if model not in MODELS:
        raise DataError("chain metadata does not name a model")
    Y = None
    if model == "czinb":
        if not args.covariates:
            raise ConfigError("covariates required for czinb predictions (--covariates)")
        conf = store.meta.get("config", {})
        cov: CovariateTensor = load_covariates(args.covariates, store.meta["n"], standardize=conf.get("standardize", True))
        if conf.get("intercept"):
            cov = cov.with_intercept()
        Y = cov.Y
    pairs = read_pairs(args.pairs)
    scores = predictive_scores(store.records, pairs, model, Y)
    out = Path(args.out) if args.out else Path(args.chain) / f"predictions_{args.tag}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["i", "j", "prob_nonzero", "expected_weight"])
        for (i, j), pr, ex in zip(pairs, scores.prob_nonzero, scores.expected_weight):
            wr.writerow([i + 1, j + 1, repr(float(pr)), repr(float(ex))])
    print(f"scores for {len(pairs)} pairs written to {out}")
    return 0


# ---------------------------------------------------------------------------
# reproductions


def _sampler_settings(args, default_iter=4000, default_burn=2000) -> dict:
    it = args.iterations or default_iter
    burn = args.burn_in if args.burn_in is not None else (default_burn if args.iterations is None else it // 2)
    return {"iterations": it, "burn_in": burn}


def cmd_reproduce_sim(args) -> int:
    seed = resolve_seed(args.seed)
    n = args.n or (150 if args.full else 100)
    reps = args.replications or (50 if args.full else 10)
    cfg = SimConfig(n=n, replications=reps, seed=seed, jobs=args.jobs, sampler=_sampler_settings(args))
    if args.dry_run:
        print(f"would run {2 * 2 * reps} fits (n={n}, {cfg.sampler['iterations']} iterations)")
        return 0
    rows = run_simulation(cfg)
    out = _out_dir(args.out)
    write_rows(out / "simulation_replications.csv", rows)
    table = simulation_table(rows)
    (out / "simulation_table.txt").write_text(table + "\n")
    print(table)
    return 0


def cmd_reproduce_linkpred(args) -> int:
    seed = resolve_seed(args.seed)
    reps = args.replications or (50 if args.full else 10)
    if args.adjacency:
        if not args.covariates:
            raise ConfigError("covariates required alongside --adjacency")
        A = load_adjacency(args.adjacency, args.adjacency_format)
        cov = load_covariates(args.covariates, A.shape[0], standardize=True)
        if args.intercept:
            cov = cov.with_intercept()
        source = "user data"
    else:
        A, cov, _ = generate_linkpred_network(args.n or 60, seed)
        source = "synthetic fallback"
    sampler = _sampler_settings(args, 2000, 1000)
    if args.dry_run:
        print(f"would run {2 * reps} fits on {source} (n={A.shape[0]}, q={cov.q})")
        return 0
    reports = run_linkpred_comparison(A, cov.Y, replications=reps, seed=seed, sampler=sampler, jobs=args.jobs)
    out = _out_dir(args.out)
    write_rows(out / "linkpred_replications.csv", linkpred_rows(reports))
    table = f"data: {source}\n" + linkpred_table(reports)
    (out / "linkpred_table.txt").write_text(table + "\n")
    print(table)
    for rep in reports:
        for idx, err in rep.failed:
            print(f"{rep.model} replication {idx} failed: {err}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blocksampler", description="ZINB / CZINB / ZIP stochastic block models")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a network")
    g.add_argument("--scenario", required=True, help="1, 2 or czinb")
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="data")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="run the sampler")
    f.add_argument("--model", choices=MODELS)
    f.add_argument("--adjacency")
    f.add_argument("--covariates")
    f.add_argument("--adjacency-format", dest="adjacency_format", choices=("edge-list", "dense"))
    f.add_argument("--n", type=int)
    f.add_argument("--config")
    f.add_argument("--seed", type=int)
    f.add_argument("--chains", type=int)
    f.add_argument("--jobs", type=int)
    f.add_argument("--iterations", type=int)
    f.add_argument("--burn-in", dest="burn_in", type=int)
    f.add_argument("--thin", type=int)
    f.add_argument("--intercept", action="store_true")
    f.add_argument("--no-standardize", dest="no_standardize", action="store_true")
    f.add_argument("--out")
    f.add_argument("--dry-run", dest="dry_run", action="store_true")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("summarize", help="minVI partition, credible ball, coefficients")
    s.add_argument("--chain", required=True, help="directory written by fit")
    s.add_argument("--tag", default="0")
    s.add_argument("--truth")
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--out")
    s.set_defaults(func=cmd_summarize)

    pr = sub.add_parser("predict", help="posterior predictive scores for node pairs")
    pr.add_argument("--chain", required=True)
    pr.add_argument("--tag", default="0")
    pr.add_argument("--pairs", required=True, help="CSV of 1-based i,j")
    pr.add_argument("--covariates")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_predict)

    for name, func, help_ in (
        ("reproduce-sim", cmd_reproduce_sim, "simulation table (ZINB vs ZIP, scenarios 1 and 2)"),
        ("reproduce-linkpred", cmd_reproduce_linkpred, "missing-link prediction table"),
    ):
        r = sub.add_parser(name, help=help_)
        r.add_argument("--seed", type=int)
        r.add_argument("--jobs", type=int, default=1)
        r.add_argument("--full", action="store_true", help="large settings: more replications, bigger networks")
        r.add_argument("--replications", type=int)
        r.add_argument("--n", type=int)
        r.add_argument("--iterations", type=int)
        r.add_argument("--burn-in", dest="burn_in", type=int)
        r.add_argument("--out", default="results")
        r.add_argument("--dry-run", dest="dry_run", action="store_true")
        if name == "reproduce-linkpred":
            r.add_argument("--adjacency")
            r.add_argument("--adjacency-format", dest="adjacency_format", default="edge-list")
            r.add_argument("--covariates")
            r.add_argument("--intercept", action="store_true")
        r.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except (ConfigError, DataError, ValueError, OSError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
