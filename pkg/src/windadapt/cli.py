"""Command-line front end.

All commands read a JSON config (--config) naming the domains and defaults;
flags override config values. Exit codes: 0 success, 2 config/data error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import adapt as adapt_mod
from . import experiments as exp
from . import features as feat
from . import ingest, labeling
from .errors import ConfigError, DataError, NumericalDivergence
from .nn import load_checkpoint, save_checkpoint
from .train import TrainConfig, evaluate, train_source, write_history_csv


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc


def experiment_config(cfg: dict, args) -> exp.ExperimentConfig:
    arch = cfg.get("arch", {})
    train = cfg.get("train", {})
    forest = cfg.get("forest", {})
    return exp.ExperimentConfig(
        n_bins=args.bins or cfg.get("n_bins", 6),
        window_len=args.window or cfg.get("window", 24),
        k=args.k or cfg.get("k", 6),
        train_frac=cfg.get("train_frac", 0.8),
        kernel=arch.get("kernel", 3),
        c1=arch.get("c1", 32),
        c2=arch.get("c2", 64),
        hidden=arch.get("hidden", 128),
        train=TrainConfig(
            lr=train.get("lr", 0.001),
            batch_size=train.get("batch_size", 64),
            max_epochs=train.get("max_epochs", 200),
            patience=train.get("patience", 10),
            min_delta=train.get("min_delta", 1e-4),
            seed=args.seed if args.seed is not None else cfg.get("seed", 0),
            shuffle=train.get("shuffle", True),
        ),
        forest=feat.ForestConfig(
            n_trees=forest.get("n_trees", 100),
            max_depth=forest.get("max_depth", 12),
            min_samples_leaf=forest.get("min_samples_leaf", 5),
            features_per_split=forest.get("features_per_split", 0),
            bootstrap=forest.get("bootstrap", True),
            seed=args.seed if args.seed is not None else cfg.get("seed", 0),
        ),
        seed=args.seed if args.seed is not None else cfg.get("seed", 0),
    )


def out_dir(cfg: dict, args) -> Path:
    out = Path(args.out or cfg.get("out_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def domain_entry(cfg: dict, name: str) -> dict:
    domains = cfg.get("domains", {})
    if name not in domains:
        raise ConfigError(f"domain {name!r} not in config (have: {sorted(domains)})")
    return domains[name]


def build_domain(cfg: dict, name: str, out: Path, seed_override: int | None = None,
                 prefer_prepared: bool = True) -> exp.DomainSpec:
    """Aligned samples for a config domain, from the prepared file when present,
    otherwise directly from the synth parameters or raw CSV pair."""
    prepared = out / f"{name}_aligned.csv"
    if prefer_prepared and prepared.exists():
        samples, names = ingest.read_aligned_csv(prepared)
        return exp.DomainSpec(name=name, samples=samples, feature_names=names)
    entry = domain_entry(cfg, name)
    if "synth" in entry:
        s = dict(entry["synth"])
        if seed_override is not None:
            s["seed"] = seed_override
        scfg = ingest.SynthConfig(
            n_hours=s.get("n_hours", 8760),
            n_features=s.get("n_features", 18),
            shift=s.get("shift", 0.0),
            noise_sd=s.get("noise_sd", 0.05),
            cut_in=s.get("cut_in", 3.0),
            rated=s.get("rated", 13.0),
            seed=s.get("seed", 0),
        )
        samples = ingest.synth_domain(scfg)
        names = ingest.synth_feature_names(scfg.n_features)
        return exp.DomainSpec(name=name, samples=samples, feature_names=names)
    if "generation_csv" in entry and "weather_csv" in entry:
        gen = ingest.parse_generation_csv(entry["generation_csv"], entry.get("country", name))
        wx = ingest.parse_weather_csv(entry["weather_csv"], location_id=name)
        samples = ingest.merge_hourly(gen, wx)
        return exp.DomainSpec(name=name, samples=samples, feature_names=wx.feature_names)
    raise ConfigError(f"domain {name!r} needs either 'synth' or generation_csv+weather_csv")


def resolve_feature_indices(domain: exp.DomainSpec, out: Path, args) -> list[int]:
    """Selected-feature names from the features command, mapped to column indices."""
    path = Path(args.features_file) if args.features_file else out / "selected_features.txt"
    if not path.exists():
        raise ConfigError(f"selected-features file not found: {path} (run `features` first)")
    names = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    indices = []
    for n in names:
        if n not in domain.feature_names:
            raise ConfigError(f"selected feature {n!r} not present in domain {domain.name!r}")
        indices.append(domain.feature_names.index(n))
    return sorted(indices)


# ---------------------------------------------------------------------------
# Commands

def cmd_prepare(cfg, args) -> int:
    out = out_dir(cfg, args)
    domain = build_domain(cfg, args.domain, out, prefer_prepared=False)
    entry = domain_entry(cfg, args.domain)
    dropped = 0
    if "generation_csv" in entry:
        gen = ingest.parse_generation_csv(entry["generation_csv"], entry.get("country", args.domain))
        wx = ingest.parse_weather_csv(entry["weather_csv"])
        common = {ts for ts, _ in gen.rows} & {ts for ts, _ in wx.rows}
        dropped = len(common) - len(domain.samples)
    ingest.write_aligned_csv(out / f"{args.domain}_aligned.csv", domain.samples,
                             domain.feature_names)
    spec = labeling.make_bins(args.bins or cfg.get("n_bins", 6))
    labeling.write_histogram_csv(out / f"{args.domain}_histogram.csv",
                                 labeling.histogram(domain.samples, spec), spec)
    summary = {"domain": args.domain, "rows": len(domain.samples),
               "dropped_rows": dropped, "features": domain.feature_names}
    (out / f"{args.domain}_prepare_summary.json").write_text(
        json.dumps(summary, indent=2) + "\n")
    print(f"prepared {args.domain}: {len(domain.samples)} rows -> {out}")
    return 0


def cmd_synth(cfg, args) -> int:
    out = out_dir(cfg, args)
    domain = build_domain(cfg, args.domain, out, prefer_prepared=False)
    gen, wx = ingest.samples_to_series(domain.samples, domain.feature_names, args.domain)
    ingest.write_generation_csv(out / f"{args.domain}_generation.csv", gen)
    ingest.write_weather_csv(out / f"{args.domain}_weather.csv", wx)
    print(f"wrote synthetic CSV pair for {args.domain} to {out}")
    return 0


def cmd_features(cfg, args) -> int:
    out = out_dir(cfg, args)
    ecfg = experiment_config(cfg, args)
    domain = build_domain(cfg, args.domain, out)
    selected, forest = exp.rank_features(domain, ecfg)

    feat.write_importances_csv(out / f"{args.domain}_importances.csv",
                               forest.importances, domain.feature_names)
    corr = feat.correlation_matrix(domain.samples, sorted(selected))
    feat.write_correlation_csv(out / f"{args.domain}_correlation.csv", corr,
                               [domain.feature_names[i] for i in sorted(selected)])
    names = [domain.feature_names[i] for i in selected]
    text = "\n".join(names) + "\n"
    (out / f"{args.domain}_selected_features.txt").write_text(text)
    (out / "selected_features.txt").write_text(text)
    print(f"selected features for {args.domain}: {', '.join(names)}")
    return 0


def cmd_train(cfg, args) -> int:
    out = out_dir(cfg, args)
    ecfg = experiment_config(cfg, args)
    domain = build_domain(cfg, args.domain, out)
    indices = resolve_feature_indices(domain, out, args)
    tr, te = exp.make_splits(domain, indices, ecfg)
    params, hist = train_source(tr, te, ecfg.arch(len(indices)), ecfg.train)
    ckpt = out / f"{args.domain}.ckpt"
    save_checkpoint(params, ckpt)
    write_history_csv(out / f"{args.domain}_history.csv", hist)
    acc, _ = evaluate(params, te)
    print(f"trained {args.domain}: eval accuracy {acc:.4f}, checkpoint {ckpt}")
    return 0


def cmd_adapt(cfg, args) -> int:
    out = out_dir(cfg, args)
    ecfg = experiment_config(cfg, args)
    domain = build_domain(cfg, args.domain, out)
    indices = resolve_feature_indices(domain, out, args)
    tr, te = exp.make_splits(domain, indices, ecfg)
    mode = adapt_mod.AdaptMode(args.mode)
    params, hist = adapt_mod.adapt(args.checkpoint, tr, te, mode, ecfg.train)
    ckpt = out / f"{args.domain}_adapted_{mode.value}.ckpt"
    save_checkpoint(params, ckpt)
    write_history_csv(out / f"{args.domain}_adapt_{mode.value}_history.csv", hist)
    acc, _ = evaluate(params, te)
    print(f"adapted to {args.domain} ({mode.value}): eval accuracy {acc:.4f}, checkpoint {ckpt}")
    return 0


def cmd_eval(cfg, args) -> int:
    out = out_dir(cfg, args)
    ecfg = experiment_config(cfg, args)
    domain = build_domain(cfg, args.domain, out)
    indices = resolve_feature_indices(domain, out, args)
    _, te = exp.make_splits(domain, indices, ecfg)
    params = load_checkpoint(args.checkpoint)
    acc, confusion = evaluate(params, te)
    with open(out / f"{args.domain}_confusion.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["true\\pred"] + list(range(confusion.shape[1])))
        for i, row in enumerate(confusion):
            w.writerow([i] + [int(v) for v in row])
    print(f"accuracy on {args.domain} test split: {acc:.4f}")
    return 0


def cmd_matrix(cfg, args) -> int:
    out = out_dir(cfg, args)
    ecfg = experiment_config(cfg, args)
    domains = [build_domain(cfg, name, out) for name in cfg.get("domains", {})]
    result = exp.run_matrix(domains, ecfg, work_dir=out / "checkpoints")
    result.write_csv(out / "matrix.csv")
    exp.write_manifest(out / "matrix_manifest.json", ecfg, {"matrix": out / "matrix.csv"})
    print(f"adaptation matrix written to {out / 'matrix.csv'}")
    return 0


def cmd_ablate(cfg, args) -> int:
    out = out_dir(cfg, args)
    ecfg = experiment_config(cfg, args)
    if args.which == "network":
        source = build_domain(cfg, args.source, out)
        target = build_domain(cfg, args.target, out)
        res = exp.run_partial_vs_full(source, target, ecfg, work_dir=out / "checkpoints")
        path = out / "ablate_network.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["source", "target", "acc_partial", "acc_full", "difference"])
            w.writerow([args.source, args.target, f"{res.acc_partial:.4f}",
                        f"{res.acc_full:.4f}", f"{res.difference:.4f}"])
    else:
        domain = build_domain(cfg, args.domain, out)
        res = exp.run_feature_ablation(domain, ecfg.k, ecfg)
        path = out / "ablate_features.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["domain", "acc_all", "acc_selected", "difference"])
            w.writerow([args.domain, f"{res.acc_all:.4f}",
                        f"{res.acc_selected:.4f}", f"{res.difference:.4f}"])
    exp.write_manifest(out / f"ablate_{args.which}_manifest.json", ecfg, {"table": path})
    print(f"ablation table written to {path}")
    return 0


def cmd_curves(cfg, args) -> int:
    out = out_dir(cfg, args)
    ecfg = experiment_config(cfg, args)
    source = build_domain(cfg, args.source, out)
    target = build_domain(cfg, args.target, out)
    res = exp.run_convergence_comparison(source, target, ecfg, work_dir=out / "checkpoints")
    path = out / f"curves_{args.source}_{args.target}.csv"
    exp.write_paired_curves_csv(path, res)
    exp.write_manifest(out / "curves_manifest.json", ecfg, {"curves": path})
    print(f"convergence curves written to {path} "
          f"(saturation: scratch epoch {res.saturation_scratch}, "
          f"adapted epoch {res.saturation_adapted})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="windadapt",
                                description="Domain-adaptive wind power class prediction")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", help="output directory (overrides config out_dir)")
        sp.add_argument("--seed", type=int, help="root seed override")
        sp.add_argument("--bins", type=int, help="number of capacity-factor classes")
        sp.add_argument("--window", type=int, help="window length in hours")
        sp.add_argument("--k", type=int, help="number of selected features")
        sp.add_argument("--features-file", help="selected-features file to use")
        return sp

    sp = common(sub.add_parser("prepare", help="merge and clean one domain"))
    sp.add_argument("domain")
    sp.set_defaults(fn=cmd_prepare)

    sp = common(sub.add_parser("synth", help="write a synthetic domain as CSV pair"))
    sp.add_argument("domain")
    sp.set_defaults(fn=cmd_synth)

    sp = common(sub.add_parser("features", help="rank and select features"))
    sp.add_argument("domain")
    sp.set_defaults(fn=cmd_features)

    sp = common(sub.add_parser("train", help="train the source model"))
    sp.add_argument("domain")
    sp.set_defaults(fn=cmd_train)

    sp = common(sub.add_parser("adapt", help="adapt a checkpoint to a target domain"))
    sp.add_argument("domain")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--mode", choices=["partial", "full"], default="partial")
    sp.set_defaults(fn=cmd_adapt)

    sp = common(sub.add_parser("eval", help="evaluate a checkpoint on a domain"))
    sp.add_argument("domain")
    sp.add_argument("--checkpoint", required=True)
    sp.set_defaults(fn=cmd_eval)

    sp = common(sub.add_parser("matrix", help="run the full adaptation matrix"))
    sp.set_defaults(fn=cmd_matrix)

    sp = common(sub.add_parser("ablate", help="partial-vs-full or feature ablation"))
    sp.add_argument("which", choices=["network", "features"])
    sp.add_argument("--source", help="source domain (network ablation)")
    sp.add_argument("--target", help="target domain (network ablation)")
    sp.add_argument("--domain", help="domain (feature ablation)")
    sp.set_defaults(fn=cmd_ablate)

    sp = common(sub.add_parser("curves", help="scratch vs adapted convergence curves"))
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.set_defaults(fn=cmd_curves)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "ablate":
            if args.which == "network" and not (args.source and args.target):
                raise ConfigError("ablate network needs --source and --target")
            if args.which == "features" and not args.domain:
                raise ConfigError("ablate features needs --domain")
        return args.fn(cfg, args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalDivergence as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
