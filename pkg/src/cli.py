"""
Command-line entry point.

    mutate         generate the mutant tree and index.json
    run            green gate, execute (sampled) mutants, persist results, write reports
    report         rebuild the reports from results.json
    sample         print the ids a sampling spec selects
    subsume        kill matrix and subsumption graph from the retained build outputs
    manual-import  register hand-written mutants
"""

import argparse
import json
import logging
import shlex
import shutil
import sys
from datetime import datetime, timezone
from pathlib import Path

from tqdm import tqdm

from src.config import DEFAULT_CONFIG_FILE, ConfigError, load_config
from src.executor import (BuildConfig, InvalidBuildConfig, NotGreen, RestoreFailure, default_timeout,
                          recover_workspace, run_mutants, verify_green)
from src.higher_order import higher_order_header, pair_mutants
from src.java_front import ParseError, SourceFile, parse_source, splice
from src.manual_import import MANUAL_OPERATOR, import_mutants, register_manual
from src.mutation_engine import Mutant, enumerate_mutants, format_header, operator_counts, render_mutant
from src.results_report import ResultsDatabase, write_reports
from src.sampler import SampleSpec, sample
from src.subsumption import (build_graph, export_dot, export_gml, export_json, extract_kill_matrix,
                             render_png, resolve_patterns)
from src.utils import (count_loc, discover_files, qualified_id, setup_logging, sha256_bytes,
                       tree_hash, write_atomic)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NOT_GREEN = 3
EXIT_WORKSPACE_CORRUPTION = 4

INDEX_FILE = "index.json"


def index_path(config):
    return Path(config.output_dir) / INDEX_FILE


def load_index(config):
    path = index_path(config)
    if not path.is_file():
        raise ConfigError(f"{path} does not exist; run 'mutate' first")
    with open(path) as f:
        return json.load(f)


def index_generation(index):
    """Content hash of the mutant records of an index; changes whenever mutate or manual-import changes them."""
    records = [[file_entry["path"], file_entry["mutants"]] for file_entry in index["files"]]
    return sha256_bytes(json.dumps(records, sort_keys=True).encode("utf-8"))


def index_records(index):
    return {file_entry["path"]: {str(record["mutant_id"]): record for record in file_entry["mutants"]}
            for file_entry in index["files"]}


def save_index(config, index):
    index["generation"] = index_generation(index)
    write_atomic(index_path(config), json.dumps(index, indent=2, ensure_ascii=False) + "\n")


def index_mutants(index):
    """(path, Mutant) for every mutant of the index, in index order."""
    return [(file_entry["path"], Mutant.from_record(record, file_entry["path"]))
            for file_entry in index["files"] for record in file_entry["mutants"]]


def mutant_file_path(config, rel_path, mutant_id):
    return Path(config.output_dir, "mutated", rel_path, f"{mutant_id}.java")


def manual_header(mutant):
    return format_header([
        ("mutant_id", mutant.mutant_id),
        ("operator", MANUAL_OPERATOR),
        ("before", mutant.before),
        ("after", mutant.after),
        ("line", mutant.line),
        ("node_ids", ",".join(str(node_id) for node_id in mutant.node_ids)),
    ])


def cmd_mutate(config):
    """Enumerate the mutants of every source file and write the mutant tree plus index.json."""
    shutil.rmtree(Path(config.output_dir, "mutated"), ignore_errors=True)
    enabled = config.enabled_operators
    paths = discover_files(config.source_root, config.include, config.exclude)
    logger.info("found %d source file(s) under %s", len(paths), config.source_root)

    index = {"source_root": str(config.source_root), "seed": config.seed, "files": [], "skipped": []}
    totals = {}
    for position, rel_path in enumerate(tqdm(paths, desc="Mutating")):
        file = SourceFile.read(config.source_root, rel_path)
        try:
            tree = parse_source(file)
        except ParseError as error:
            logger.warning("skipping %s", error)
            index["skipped"].append({"path": rel_path, "line": error.line, "message": error.message})
            continue
        mutants = enumerate_mutants(tree, file, enabled)
        rendered = [(mutant, render_mutant(file, mutant)) for mutant in mutants]
        if config.higher_order:
            pairing = pair_mutants(mutants, seed=[config.seed, position])
            mutants = mutants + pairing.mutants
            rendered += [(mutant, higher_order_header(mutant) + splice(file, mutant.edits))
                         for mutant in pairing.mutants]
        for mutant, data in rendered:
            target = mutant_file_path(config, rel_path, mutant.mutant_id)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)

        counts = operator_counts(mutant for mutant in mutants if mutant.kind == "first-order")
        for name, count in counts.items():
            totals[name] = totals.get(name, 0) + count
        logger.debug("%s: %d mutant(s) %s", rel_path, len(mutants), counts)
        index["files"].append({
            "path": rel_path,
            "sha256": sha256_bytes(file.content),
            "loc": count_loc(file.content),
            "operator_counts": counts,
            "mutants": [mutant.to_record() for mutant in mutants],
        })
    save_index(config, index)
    total = sum(len(file_entry["mutants"]) for file_entry in index["files"])
    logger.info("generated %d mutant(s) in %d file(s) %s", total, len(index["files"]), totals)
    return index


def select_mutants(config, index):
    """Mutants run executes: higher-order ones replace first-order ones when enabled, then sampling."""
    wanted = {"higher-order", "manual"} if config.higher_order else {"first-order", "manual"}
    mutants = [mutant for _, mutant in index_mutants(index) if mutant.kind in wanted]
    if config.sample_rate is None or not mutants:
        return mutants
    spec = SampleSpec(rate=float(config.sample_rate), strategy=config.sample_strategy, seed=config.seed)
    class_sizes = {file_entry["path"]: file_entry.get("loc", 0) for file_entry in index["files"]}
    chosen = sample(mutants, spec, class_sizes)
    logger.info("sampled %d of %d mutant(s) (%s, rate %s)", len(chosen), len(mutants), spec.strategy, spec.rate)
    return chosen


def _check_sources(config, index):
    files = {}
    for file_entry in index["files"]:
        file = SourceFile.read(config.source_root, file_entry["path"])
        if "sha256" in file_entry and sha256_bytes(file.content) != file_entry["sha256"]:
            raise ConfigError(f"{file_entry['path']} changed since the mutants were generated; run 'mutate' again")
        files[file_entry["path"]] = file
    return files


def cmd_run(config):
    """Green gate, then every selected mutant in turn with incremental persistence and reports at the end."""
    if not config.build_command:
        raise ConfigError("no build command configured")
    output_dir = Path(config.output_dir)
    index = load_index(config)
    backup_dir = output_dir / "backup"
    recover_workspace(backup_dir, config.source_root)
    pristine_hash = tree_hash(config.source_root, config.include, config.exclude)
    files = _check_sources(config, index)
    write_atomic(output_dir / "config.yaml", config.to_yaml())

    try:
        green_cfg = BuildConfig(command=tuple(config.build_command), working_dir=config.working_dir,
                                timeout=config.initial_timeout, env_overrides=config.env,
                                compile_error_markers=tuple(config.compile_error_markers),
                                clean_command=tuple(config.clean_command), backup_dir=backup_dir)
    except InvalidBuildConfig as error:
        raise ConfigError(str(error))
    try:
        green = verify_green(green_cfg)
    except OSError as error:
        raise ConfigError(f"cannot start build command {shlex.join(green_cfg.command)}: {error}")
    write_atomic(output_dir / "initial_build.txt", green.output)
    timeout = config.timeout if config.timeout is not None else default_timeout(green.duration)
    cfg = BuildConfig(command=green_cfg.command, working_dir=green_cfg.working_dir, timeout=timeout,
                      env_overrides=green_cfg.env_overrides, compile_error_markers=green_cfg.compile_error_markers,
                      clean_command=green_cfg.clean_command, backup_dir=backup_dir)

    selected = select_mutants(config, index)
    database = ResultsDatabase.load(output_dir)
    generation = index.get("generation") or index_generation(index)
    if database.project.get("index_generation", generation) != generation:
        logger.info("index.json was regenerated since the last run; checking recorded outcomes against it")
        database.project.pop("started", None)
    dropped = database.discard_stale(index_records(index))
    if dropped:
        logger.warning("discarded %d recorded outcome(s) that no longer match index.json: %s",
                       len(dropped), ", ".join(dropped))
    database.project.update({
        "index_generation": generation,
        "config": config.to_dict(),
        "green_duration_s": round(green.duration, 3),
        "seed": config.seed,
        "timeout_s": timeout,
        "selected": len(selected),
    })
    database.project.setdefault("started", datetime.now(timezone.utc).isoformat())
    for file_entry in index["files"]:
        database.ensure_file(file_entry["path"])

    pending = [mutant for mutant in selected if not database.has(mutant.source_path, mutant.mutant_id)]
    if len(pending) < len(selected):
        logger.info("resuming: %d of %d mutant(s) already executed", len(selected) - len(pending), len(selected))
    by_key = {qualified_id(mutant.source_path, mutant.mutant_id): mutant for mutant in pending}
    work = [(files[mutant.source_path], mutant) for mutant in pending]
    try:
        with tqdm(total=len(work), desc="Running mutants") as progress:
            for outcome in run_mutants(cfg, work, config.source_root, jobs=config.jobs):
                database.record(by_key[qualified_id(outcome.source_path, outcome.mutant_id)], outcome)
                progress.update(1)
    finally:
        if tree_hash(config.source_root, config.include, config.exclude) != pristine_hash:
            raise RestoreFailure(f"the source tree under {config.source_root} differs from its state before the run")

    database.project["finished"] = datetime.now(timezone.utc).isoformat()
    database.save()
    write_reports(database)
    return database


def cmd_report(config):
    database = ResultsDatabase.load(config.output_dir)
    if not database.path.exists():
        raise ConfigError(f"{database.path} does not exist; run 'run' first")
    return write_reports(database)


def cmd_sample(config, rate, strategy, seed):
    index = load_index(config)
    mutants = [mutant for _, mutant in index_mutants(index)]
    spec = SampleSpec(rate=rate, strategy=strategy, seed=seed)
    class_sizes = {file_entry["path"]: file_entry.get("loc", 0) for file_entry in index["files"]}
    chosen = sample(mutants, spec, class_sizes) if mutants else []
    return [qualified_id(mutant.source_path, mutant.mutant_id) for mutant in chosen]


def cmd_subsume(results, patterns, dot=None, json_path=None, gml=None, png=None, reduce=False):
    results = Path(results)
    database = ResultsDatabase.load(results.parent if results.suffix == ".json" else results)
    if not database.path.exists():
        raise ConfigError(f"{database.path} does not exist")
    matrix = extract_kill_matrix(database, resolve_patterns(patterns))
    graph = build_graph(matrix)
    if dot:
        write_atomic(dot, export_dot(graph, reduce=reduce))
    if json_path:
        write_atomic(json_path, export_json(graph, matrix))
    if gml:
        export_gml(graph, gml, reduce=reduce)
    if png:
        render_png(graph, png)
    return graph


def cmd_manual_import(config, directory, strict=False):
    index = load_index(config)
    corpus = {rel_path: SourceFile.read(config.source_root, rel_path)
              for rel_path in discover_files(config.source_root, config.include, config.exclude)}
    for file_entry in index["files"]:
        for mutant_id in [record["mutant_id"] for record in file_entry["mutants"] if record.get("kind") == "manual"]:
            mutant_file_path(config, file_entry["path"], mutant_id).unlink(missing_ok=True)
    imported = import_mutants(directory, corpus, strict=strict)
    for manual in imported:
        mutant = manual.to_mutant()
        target = mutant_file_path(config, manual.source_path, manual.mutant_id)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(manual_header(mutant) + splice(corpus[manual.source_path], mutant.edits))
    register_manual(index, imported)
    for file_entry in index["files"]:
        if "sha256" not in file_entry and file_entry["path"] in corpus:
            content = corpus[file_entry["path"]].content
            file_entry.update(sha256=sha256_bytes(content), loc=count_loc(content))
    save_index(config, index)
    return imported


def _add_common(parser):
    parser.add_argument("--config", type=str, default=None, help="Project config file (default: ./mutation.yaml).")
    parser.add_argument("--source-root", dest="source_root", type=str, default=None)
    parser.add_argument("--output", dest="output_dir", type=str, default=None, help="Output directory.")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--include", nargs="+", default=None, help="Globs of source files to mutate.")
    parser.add_argument("--exclude", nargs="+", default=None)
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--quiet", action="store_true")


def _sample_option(text):
    """'0.5' or 'rate=0.5,strategy=weighted'."""
    values = {}
    for part in text.split(","):
        key, separator, value = part.partition("=")
        if not separator:
            key, value = "rate", key
        values[key.strip()] = value.strip()
    try:
        return {"sample_rate": float(values["rate"]) if "rate" in values else None,
                "sample_strategy": values.get("strategy")}
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sample spec {text!r}")


def parse_args(argv=None):
    parser = argparse.ArgumentParser(prog="run_mutation.py", description="Mutation testing for Java projects.")
    commands = parser.add_subparsers(dest="command", required=True)

    mutate = commands.add_parser("mutate", help="Generate mutants.")
    _add_common(mutate)
    mutate.add_argument("--operators", nargs="+", default=None,
                        help="Operator names or the families 'classic', 'null', 'all'.")
    mutate.add_argument("--higher-order", dest="higher_order", default=None, action=argparse.BooleanOptionalAction)

    run = commands.add_parser("run", help="Execute the mutants against the test suite.")
    _add_common(run)
    run.add_argument("--build-command", dest="build_command", type=str, default=None)
    run.add_argument("--clean-command", dest="clean_command", type=str, default=None)
    run.add_argument("--build-dir", dest="build_dir", type=str, default=None)
    run.add_argument("--timeout", type=float, default=None, help="Per-mutant timeout in seconds.")
    run.add_argument("--initial-timeout", dest="initial_timeout", type=float, default=None)
    run.add_argument("--jobs", type=int, default=None)
    run.add_argument("--sample", type=_sample_option, default=None, help="e.g. rate=0.5,strategy=weighted")
    run.add_argument("--higher-order", dest="higher_order", default=None, action=argparse.BooleanOptionalAction)

    report = commands.add_parser("report", help="Rebuild the reports from results.json.")
    _add_common(report)

    sample_parser = commands.add_parser("sample", help="Print the mutant ids a sampling spec selects.")
    _add_common(sample_parser)
    sample_parser.add_argument("--rate", type=float, required=True)
    sample_parser.add_argument("--strategy", choices=("uniform", "weighted"), default="uniform")

    subsume = commands.add_parser("subsume", help="Dynamic subsumption analysis.")
    subsume.add_argument("--config", type=str, default=None, help="Project config supplying test_patterns.")
    subsume.add_argument("--results", type=str, required=True, help="results.json or its directory.")
    subsume.add_argument("--patterns", nargs="+", default=None, help="Pattern presets or files of regexes.")
    subsume.add_argument("--dot", type=str, default=None)
    subsume.add_argument("--json", dest="json_path", type=str, default=None)
    subsume.add_argument("--gml", type=str, default=None)
    subsume.add_argument("--png", type=str, default=None)
    subsume.add_argument("--reduce", action="store_true", help="Drop transitive edges before exporting.")
    subsume.add_argument("--verbose", action="store_true")
    subsume.add_argument("--quiet", action="store_true")

    manual = commands.add_parser("manual-import", help="Register hand-written mutants.")
    _add_common(manual)
    manual.add_argument("--dir", dest="directory", type=str, required=True)
    manual.add_argument("--strict", action="store_true", help="Fail on the first unmatched file.")

    return parser.parse_args(argv)


OVERRIDE_KEYS = ("source_root", "output_dir", "seed", "include", "exclude", "operators", "higher_order",
                 "build_command", "clean_command", "build_dir", "timeout", "initial_timeout", "jobs")


def _config(args):
    overrides = {key: getattr(args, key) for key in OVERRIDE_KEYS if hasattr(args, key)}
    if getattr(args, "sample", None):
        overrides.update(args.sample)
    return load_config(args.config, overrides)


def main(argv=None):
    args = parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO)
    try:
        if args.command == "subsume":
            patterns = args.patterns
            if patterns is None and (args.config or Path(DEFAULT_CONFIG_FILE).is_file()):
                patterns = load_config(args.config).test_patterns
            cmd_subsume(args.results, patterns, args.dot, args.json_path, args.gml, args.png, args.reduce)
            return EXIT_OK
        config = _config(args)
        if args.command == "mutate":
            cmd_mutate(config)
        elif args.command == "run":
            cmd_run(config)
        elif args.command == "report":
            cmd_report(config)
        elif args.command == "sample":
            seed = args.seed if args.seed is not None else config.seed
            print(json.dumps(cmd_sample(config, args.rate, args.strategy, seed)))
        elif args.command == "manual-import":
            cmd_manual_import(config, args.directory, args.strict)
    except ConfigError as error:
        logger.error("%s", error)
        return EXIT_CONFIG_ERROR
    except NotGreen as error:
        logger.error("%s; no mutant was executed", error)
        logger.error("build output:\n%s", error.output.decode("utf-8", "replace"))
        return EXIT_NOT_GREEN
    except RestoreFailure as error:
        logger.critical("workspace corruption: %s", error)
        return EXIT_WORKSPACE_CORRUPTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
