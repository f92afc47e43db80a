import argparse
import logging
import shutil
import sys
from pathlib import Path

from attributedict.collections import AttributeDict

from . import __version__
from .arena.config import Mode
from .config import arena_config_from, arena_section, resolve_config, schedule_from, spawns_from, to_toml
from .evaluation.metrics import METRIC_COLUMNS, cross_matrix_table, metrics_table
from .evaluation.suites import (ChaseEnvironment, generation_drops, learning_curve, play_episode,
                                run_cross_matrix, run_sine_benchmark, run_unseen_adversaries, sine_arena,
                                sine_environment, standard_environments)
from .train.adversarial import PROBE_FIELDS, adversarial_training
from .train.baselines import train_baseline
from .train.ensemble import AdversaryEnsemble
from .utils.experiment_io import (CheckpointError, MetricsLog, RunLayout, RunManifest, export_trajectories,
                                  policy_from_dict, read_json, write_csv, write_json)
from .utils.seeding import Tag, derive_seed

logger = logging.getLogger("advchase")

TRAIN_MODES = ("adversary", "cone", "circular", "zigzag", "single")
# environment each training mode treats as home; single has none
HOME_ENV = {"adversary": "adversary", "cone": "cone", "circular": "circular", "zigzag": "zigzag", "single": None}
_EXPORT_STREAM = 3


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, default=None, help='TOML run configuration')
    common.add_argument('--set', type=str, action='append', default=[], metavar='KEY=VALUE',
                        help='override one config key, value parsed as a TOML literal (repeatable)')
    common.add_argument('--seed', type=int, default=None, help='master seed')
    common.add_argument('--out', type=str, default=None, help='output directory')
    common.add_argument('--threads', type=int, default=None, help='worker processes, <= 0 for all cores')
    common.add_argument('--scale', type=str, default=None, choices=["paper", "desk"], help='budget preset')
    common.add_argument('--force', action='store_true', help='overwrite a non-empty output directory')
    common.add_argument('--debug', action='store_true', help='debug logging')
    common.add_argument('--print-config', action='store_true', help='print the resolved configuration and exit')

    parser = argparse.ArgumentParser(prog="advchase", description="adversarial pursuit-evasion co-training")
    parser.add_argument('--version', action='version', version=f"advchase {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train a chaser")
    p.add_argument('--mode', type=str, default="adversary", choices=TRAIN_MODES)
    p.add_argument('--resume', action='store_true', help='continue from the latest checkpoint in --out')

    p = sub.add_parser("eval", parents=[common], help="evaluate trained chasers")
    p.add_argument('--suite', type=str, required=True, choices=["cross", "sine", "unseen"])
    p.add_argument('--policy', type=str, action='append', default=[], metavar='NAME=RUN_DIR',
                   help='trained run to evaluate (repeatable)')
    p.add_argument('--adversary-run', type=str, default=None,
                   help='adversarially trained run providing the learned adversaries')
    p.add_argument('--episodes', type=int, default=None)

    p = sub.add_parser("export", parents=[common], help="export trajectories and learning curves")
    p.add_argument('--run', type=str, required=True, help='trained run directory')
    p.add_argument('--episodes', type=int, default=10)
    p.add_argument('--episode', type=int, default=None, help='export only this episode id')
    p.add_argument('--suite', type=str, default="home", choices=["home", "sine"])
    return parser


def _resolve(args) -> AttributeDict:
    return resolve_config(args.config, args.set, scale=args.scale, seed=args.seed, threads=args.threads)


def _prepare_out(path: Path, force: bool):
    layout = RunLayout(path)
    if not layout.is_empty():
        if not force:
            raise FileExistsError(f"{path} is not empty; pass --force to overwrite")
        logger.warning(f"removing previous contents of {path}")
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return layout


def load_run(run_dir):
    layout = RunLayout(run_dir)
    if layout.is_empty():
        raise FileNotFoundError(f"{run_dir} is empty or missing")
    if not layout.policy.exists():
        raise CheckpointError(f"{run_dir} has no trained policy ({layout.policy.name} missing)")
    manifest = RunManifest.load(layout.manifest)
    policy = policy_from_dict(read_json(layout.policy))
    ensemble = AdversaryEnsemble.from_dict(read_json(layout.ensemble)) if layout.ensemble.exists() else None
    return manifest, policy, ensemble


def cmd_train(args, conf) -> int:
    out = Path(args.out or f"runs/{args.mode}-seed{conf.seed}")
    if args.resume:
        layout = RunLayout(out)
        if not layout.manifest.exists():
            raise FileNotFoundError(f"nothing to resume in {out} (no manifest)")
        manifest = RunManifest.load(layout.manifest)
        if manifest.mode != args.mode:
            raise ValueError(f"{out} was trained with --mode {manifest.mode}, not {args.mode}")
        # the run's own configuration wins; only the degree of parallelism may change
        threads = conf.threads
        conf = AttributeDict(manifest.config)
        conf["threads"] = threads
    schedule, cfg, spawns = schedule_from(conf), arena_config_from(conf), spawns_from(conf)
    if not args.resume:
        layout = _prepare_out(out, args.force)
        artifacts = {"policy": layout.policy.name, "checkpoints": "checkpoints", "metrics": "metrics"}
        if args.mode in ("adversary", "single"):
            artifacts["ensemble"] = layout.ensemble.name
        RunManifest(config=dict(conf), master_seed=conf.seed, mode=args.mode, artifacts=artifacts,
                    version=__version__).save(layout.manifest)
    logger.info(f"training {args.mode} chaser into {out}")
    if args.mode == "adversary":
        _, ensemble = adversarial_training(schedule, cfg, out, threads=conf.threads, resume=args.resume,
                                           spawns=spawns)
        logger.info(f"ensemble: {len(ensemble.train_records())} train / {len(ensemble.test_records())} test")
    else:
        train_baseline(args.mode, schedule, cfg, out, threads=conf.threads, resume=args.resume, spawns=spawns)
    print(f"trained policy written to {layout.policy}")
    return 0


def _named_runs(specs):
    runs, sources = {}, {}
    for spec in specs:
        if "=" not in spec:
            raise ValueError(f"--policy expects NAME=RUN_DIR, got {spec!r}")
        name, run_dir = spec.split("=", 1)
        if name in runs:
            raise ValueError(f"policy name {name!r} given twice")
        runs[name], sources[name] = load_run(run_dir), run_dir
    if not runs:
        raise ValueError("no --policy given")
    return runs, sources


def _trained_arena(conf, runs) -> AttributeDict:
    # the arena the runs were trained in replaces the invocation's own
    sections = {name: arena_section(manifest.config) for name, (manifest, _, _) in runs.items()}
    (first, section), *rest = sections.items()
    for name, other in rest:
        diff = sorted(k for k in section if section[k] != other[k])
        if diff:
            raise ValueError(f"{first!r} and {name!r} were trained in different arenas: {', '.join(diff)}")
    ignored = sorted(k for k in section if conf.get(k) != section[k])
    if ignored:
        logger.warning(f"evaluating in the arena the runs were trained in; ignoring {', '.join(ignored)}")
    return AttributeDict({**conf, **section})


def _adversary_ensemble(adversary_run, runs):
    if adversary_run is not None:
        manifest, _, ensemble = adversary_run
        if manifest.mode != "adversary" or ensemble is None:
            raise ValueError("--adversary-run is not an adversarially trained run")
        return ensemble
    for manifest, _, ensemble in runs.values():
        if manifest.mode == "adversary":
            return ensemble
    return None


def _metrics_report(out: Path, name: str, results):
    write_csv(out / f"{name}.csv", [["policy"] + METRIC_COLUMNS + ["episodes"]]
              + [[p] + [getattr(m, c) for c in METRIC_COLUMNS] + [m.episodes] for p, (m, _) in results.items()])
    write_json(out / f"{name}.json", {p: {"metrics": m.to_dict(), "episodes": eps} for p, (m, eps) in results.items()})
    print(metrics_table({p: m for p, (m, _) in results.items()}))


def cmd_eval(args, conf) -> int:
    episodes = conf["eval.episodes"] if args.episodes is None else args.episodes
    if episodes < 1:
        raise ValueError(f"--episodes must be >= 1, got {episodes}")
    runs, sources = _named_runs(args.policy)
    adversary_run = None if args.adversary_run is None else load_run(args.adversary_run)
    conf = _trained_arena(conf, {**runs, "--adversary-run": adversary_run} if adversary_run else runs)
    out = Path(args.out or f"runs/eval-{args.suite}")
    _prepare_out(out, args.force)
    conf["eval.episodes"] = episodes
    artifacts = {"report": f"{args.suite}.csv", **{f"run.{k}": v for k, v in sources.items()}}
    if adversary_run is not None:
        artifacts["adversary_run"] = args.adversary_run
    RunManifest(config=dict(conf), master_seed=conf.seed, mode=f"eval-{args.suite}", artifacts=artifacts,
                version=__version__).save(out / "manifest.json")
    cfg, spawns = arena_config_from(conf), spawns_from(conf)
    policies = {name: policy for name, (_, policy, _) in runs.items()}

    if args.suite == "cross":
        ensemble = _adversary_ensemble(adversary_run, runs)
        envs = standard_environments(ensemble, spawns)
        home = {name: HOME_ENV[manifest.mode] for name, (manifest, _, _) in runs.items()}
        matrix = run_cross_matrix(policies, envs, home, episodes, conf.seed, cfg, conf.threads)
        write_csv(out / "cross_raw.csv", matrix.csv_rows(normalized=False))
        write_csv(out / "cross_normalized.csv", matrix.csv_rows(normalized=True))
        write_json(out / "cross.json", matrix.to_dict())
        print(cross_matrix_table(matrix))
    elif args.suite == "sine":
        results = {}
        for name, policy in policies.items():
            metrics, eps = run_sine_benchmark(policy, episodes, conf.seed, cfg, conf.threads)
            results[name] = (metrics, [e.summary() for e in eps])
        _metrics_report(out, "sine", results)
    else:
        ensemble = _adversary_ensemble(adversary_run, runs)
        test_set = [] if ensemble is None else ensemble.test_records()
        if not test_set:
            raise ValueError("no Test-split adversaries available; pass --adversary-run of an adversarial run")
        results = {}
        for name, policy in policies.items():
            metrics = run_unseen_adversaries(policy, test_set, episodes, conf.seed, cfg, conf.threads,
                                             spawns["cone"])
            results[name] = (metrics, [])
        _metrics_report(out, "unseen", results)
    logger.info(f"reports written to {out}")
    return 0


def _home_environment(manifest, ensemble, spawns) -> ChaseEnvironment:
    home = HOME_ENV[manifest.mode]
    if home is None:
        # the single-adversary chaser last trained against its newest escapee, cone placement
        return ChaseEnvironment("home", spawns["cone"], tuple(r.escapee() for r in ensemble.train_pool()))
    envs = {e.name: e for e in standard_environments(ensemble if home == "adversary" else None, spawns)}
    return envs[home]


def cmd_export(args, conf) -> int:
    manifest, policy, ensemble = load_run(args.run)
    layout = RunLayout(args.run)
    out = Path(args.out) if args.out else layout.trajectories
    _prepare_out(out, args.force)
    # replay in the arena the run was trained in
    run_conf = AttributeDict(manifest.config)
    cfg, spawns = arena_config_from(run_conf), spawns_from(run_conf)
    if args.suite == "sine":
        env, cfg = sine_environment(), sine_arena(cfg)
    else:
        env = _home_environment(manifest, ensemble, spawns)

    ids = [args.episode] if args.episode is not None else list(range(args.episodes))
    if any(i < 0 for i in ids):
        raise ValueError("episode ids must be non-negative")
    episodes = [play_episode(policy, env, cfg, Mode.EVALUATION,
                             derive_seed(conf.seed, Tag.EVAL, _EXPORT_STREAM, i), record=True) for i in ids]
    export_trajectories(out, episodes, ids)

    probe = layout.metrics / "probe.csv"
    if probe.exists():
        curve = learning_curve(MetricsLog(probe, PROBE_FIELDS).rows())
        write_csv(out / "learning_curve.csv",
                  [list(curve)] + [list(row) for row in zip(*(v.tolist() for v in curve.values()))])
        drops = generation_drops(curve)
        if drops:
            write_csv(out / "generation_drops.csv", [list(drops[0])] + [list(d.values()) for d in drops])
    print(f"exported {len(episodes)} trajectories to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.INFO, format='%(levelname)s: %(message)s')
    try:
        conf = _resolve(args)
        if args.print_config:
            print(to_toml(conf), end="")
            return 0
        logger.info("config:\n" + to_toml(conf))
        return {"train": cmd_train, "eval": cmd_eval, "export": cmd_export}[args.command](args, conf)
    except Exception as e:
        logger.debug("failure", exc_info=True)
        print(f"advchase: error: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
