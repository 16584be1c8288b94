"""Command-line interface.

Subcommands cover the full pipeline: ``synth`` writes a synthetic
dataset, ``extract`` turns a manifest into a feature file, ``train``
fits a forest, ``predict`` and ``evaluate`` apply it, and
``experiment`` runs the actor-split scenario-mixing protocol and prints
an accuracy table. Exit code is 0 on success, 1 on any data or I/O
error, 2 on bad usage.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .dataio import read_features, read_manifest, write_features
from .forest import ForestParams, load_forest, train_forest
from .pipeline import (
    SplitConfig,
    default_16_9_split,
    evaluate,
    extract_dataset,
    scenario_experiment,
)
from .pose import default_joint_map, load_joint_map
from .synth import SynthConfig, synth_generate

NESTED_TEST_GRID = ("s1", "s1,s4", "s1,s3,s4", "s1,s2,s3,s4")


def _add_forest_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=5, help="neighbors per tree (default 5)")
    p.add_argument("--entropy-threshold", type=float, default=1.79,
                   help="split gate in bits (default 1.79)")
    p.add_argument("--capacity", type=int, default=32,
                   help="smallest leaf eligible to split (default 32)")
    p.add_argument("--max-leaf", type=int, default=256,
                   help="leaf size that forces a split (default 256)")
    p.add_argument("--bins", type=int, default=10,
                   help="histogram bins for the entropy gate (default 10)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")


def _add_extract_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-components", type=int, default=25,
                   help="spectrum components per feature (default 25)")
    p.add_argument("--smoothing-window", type=int, default=5,
                   help="pose smoothing window in frames (default 5)")
    p.add_argument("--jointmap", type=Path, default=None,
                   help="26-to-15 joint map table (default: bundled map)")


def _params(args) -> ForestParams:
    return ForestParams(k=args.k, entropy_threshold=args.entropy_threshold,
                        capacity=args.capacity, max_leaf=args.max_leaf,
                        histogram_bins=args.bins, seed=args.seed)


def _joint_map(args):
    return load_joint_map(args.jointmap) if args.jointmap else default_joint_map()


def _parse_actor_set(text: str) -> frozenset:
    actors = set()
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        lo, sep, hi = token.partition("-")
        if sep and lo.isdigit() and hi.isdigit():
            actors.update(str(i) for i in range(int(lo), int(hi) + 1))
        else:
            actors.add(token)
    if not actors:
        raise ValueError(f"empty actor set: {text!r}")
    return frozenset(actors)


def _parse_scenarios(text: str) -> tuple:
    scen = tuple(dict.fromkeys(t.strip() for t in text.split(",") if t.strip()))
    if not scen:
        raise ValueError(f"empty scenario set: {text!r}")
    return scen


def cmd_synth(args) -> int:
    config = SynthConfig(classes=args.classes, actors=args.actors,
                         clips_per=args.clips_per, frames=args.frames, seed=args.seed)
    manifest = synth_generate(config, args.out)
    print(f"wrote {len(manifest.clips)} clips under {args.out}")
    print(f"manifest: {Path(args.out) / 'manifest.txt'}")
    return 0


def cmd_extract(args) -> int:
    manifest = read_manifest(args.manifest)
    samples = extract_dataset(manifest, _joint_map(args), args.n_components,
                              args.smoothing_window)
    write_features(args.out, samples, args.n_components)
    print(f"extracted {len(samples)} samples x {len(samples[0].features)} features "
          f"({args.n_components} components) -> {args.out}")
    return 0


def cmd_train(args) -> int:
    samples, _ = read_features(args.features)
    forest = train_forest(samples, _params(args))
    forest.save(args.out)
    print(f"trained forest: {len(forest.feature_names)} trees, "
          f"{len(samples)} samples, labels: {' '.join(forest.labels)}")
    print(f"model: {args.out}")
    return 0


def cmd_predict(args) -> int:
    forest = load_forest(args.model)
    samples, _ = read_features(args.features)
    lines = []
    for s in samples:
        pred, _ = forest.predict(s.features)
        lines.append(f"{s.clip_id} {pred}")
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {len(samples)} predictions to {args.out}")
    else:
        print(text)
    return 0


def cmd_evaluate(args) -> int:
    forest = load_forest(args.model)
    samples, _ = read_features(args.features)
    matrix = evaluate(forest, samples)
    print(matrix.format_table())
    print()
    print(matrix.to_structured())
    return 0


def cmd_experiment(args) -> int:
    if not args.features and not args.manifest:
        raise ValueError("experiment needs --features and/or --manifest")
    scenario_vocab = None
    labels = None
    if args.features:
        samples, _ = read_features(args.features)
        if any(s.actor is None or s.scenario is None for s in samples):
            raise ValueError("feature file lacks actor/scenario metadata; "
                             "re-extract or pass a manifest instead")
        if args.manifest:
            manifest = read_manifest(args.manifest, check_files=False)
            scenario_vocab = manifest.scenarios
            labels = manifest.labels
    else:
        manifest = read_manifest(args.manifest)
        scenario_vocab = manifest.scenarios
        labels = manifest.labels
        print(f"extracting {len(manifest.clips)} clips ...", file=sys.stderr)
        samples = extract_dataset(manifest, _joint_map(args), args.n_components,
                                  args.smoothing_window)

    if scenario_vocab is None:
        scenario_vocab = tuple(sorted({s.scenario for s in samples}))

    actors = sorted({s.actor for s in samples})
    if args.train_actors and args.test_actors:
        split = SplitConfig(_parse_actor_set(args.train_actors),
                            _parse_actor_set(args.test_actors))
    elif args.train_actors or args.test_actors:
        raise ValueError("--train-actors and --test-actors must be given together")
    else:
        split = default_16_9_split(actors)
        print(f"using the default 16/9 actor partition "
              f"(train {len(split.train_actors)}, test {len(split.test_actors)})",
              file=sys.stderr)

    train_configs = [_parse_scenarios(t) for t in (args.train_scenarios or [])]
    if not train_configs:
        train_configs = [tuple(scenario_vocab)]
    test_configs = [_parse_scenarios(t) for t in (args.test_scenarios or [])]
    if not test_configs:
        if set("s1 s2 s3 s4".split()) <= set(scenario_vocab):
            test_configs = [_parse_scenarios(t) for t in NESTED_TEST_GRID]
        else:
            test_configs = [tuple(scenario_vocab)]

    params = _params(args)
    results = {}
    for tr in train_configs:
        for te in test_configs:
            t0 = time.perf_counter()
            res = scenario_experiment(samples, split, tr, te, params=params,
                                      runs=args.runs, labels=labels,
                                      scenario_vocabulary=scenario_vocab)
            results[(tr, te)] = res
            accs = " ".join(f"{a:.4f}" for a in res.accuracies)
            print(f"RESULT train={{{','.join(tr)}}} test={{{','.join(te)}}} "
                  f"runs={args.runs} mean_accuracy={res.mean_accuracy:.4f} "
                  f"accuracies=[{accs}] ({time.perf_counter() - t0:.1f}s)")
            if args.matrices:
                print(res.matrices[-1].format_table())

    col_names = ["{" + ",".join(te) + "}" for te in test_configs]
    width = max(12, max(len(c) for c in col_names) + 2,
                max(len("{" + ",".join(tr) + "}") for tr in train_configs) + 2)
    print()
    print("mean accuracy over runs (rows: train scenarios, columns: test scenarios)")
    print(" " * width + "".join(f"{c:>{width}}" for c in col_names))
    for tr in train_configs:
        row = "{" + ",".join(tr) + "}"
        cells = "".join(f"{results[(tr, te)].mean_accuracy:>{width}.4f}"
                        for te in test_configs)
        print(f"{row:<{width}}" + cells)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqforest",
        description="Frequency-domain motion features and a metric-tree forest classifier.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--classes", type=int, default=6)
    p.add_argument("--actors", type=int, default=5)
    p.add_argument("--clips-per", type=int, default=1,
                   help="clips per class per actor per scenario (default 1)")
    p.add_argument("--frames", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="manifest -> feature file")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_extract_args(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="feature file -> model file")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_forest_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="model + features -> predicted labels")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="model + features -> confusion matrix")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment",
                       help="actor-split scenario-mixing protocol -> accuracy table")
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--features", type=Path, default=None,
                   help="precomputed feature file (skips extraction)")
    p.add_argument("--train-scenarios", action="append", default=None, metavar="SET",
                   help="comma-separated scenario set; repeatable (default: all)")
    p.add_argument("--test-scenarios", action="append", default=None, metavar="SET",
                   help="comma-separated scenario set; repeatable (default: the "
                        "nested grid s1 / s1,s4 / s1,s3,s4 / s1,s2,s3,s4)")
    p.add_argument("--train-actors", default=None,
                   help="comma list or numeric ranges, e.g. '1-16'")
    p.add_argument("--test-actors", default=None, help="e.g. '17-25'")
    p.add_argument("--runs", type=int, default=3,
                   help="independent runs averaged per cell (default 3)")
    p.add_argument("--matrices", action="store_true",
                   help="print the last run's confusion matrix per cell")
    _add_extract_args(p)
    _add_forest_args(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
