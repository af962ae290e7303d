"""Experiment harness: configuration, dataset resolution, runs, CSV artifacts.

Configuration comes from three layers with rising precedence: built-in
defaults, a flat key=value config file, then command-line overrides. Every
invocation writes a manifest in the same grammar; rerunning a command with the
manifest as its config file reproduces the output byte for byte.

Config grammar: one `key = value` assignment per line; blank lines and
everything after `#` are ignored. List values are comma-separated without
spaces (kinds=gg,fgf). Bounds are `low,high` or `off`. Booleans are
`true`/`false`.
"""

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

from .analysis import distribution_study
from .dataio import ParseError, load_cifar10, load_mnist, load_wdbc
from .linesearch import LineSearchConfig, sgd_direction
from .network import batch_grad, init_weights, logistic_spec, nn1_spec, nn2_spec
from .quadfit import KINDS, NO_BOUNDS, Bounds
from .training import TrainConfig, summarize, train

CSV_HEADER = "fe,iter,alpha,train_error,test_error,dtheta,outcome"
REGIMES = ("no-bounds", "bounded", "fixed-batch")
DATASETS = ("wdbc", "mnist", "cifar10")
COMMANDS = ("train", "study", "compare-exact", "sweep")
DATA_DIR_ENV = "QUADLS_DATA_DIR"
FIXED_BATCH_M = 10_000
MANIFEST_NAME = "manifest.txt"


class ConfigError(ValueError):
    """Bad or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One harness invocation. None fields mean "use the resolved default"."""

    command: str
    dataset: str = "wdbc"
    data_dir: str = None
    regime: str = None
    kinds: tuple = ("gg", "fgf", "ffg", "fgfg", "fff")
    batch_sizes: tuple = (10, 50, 100, 400)
    seeds: tuple = (0,)
    budget: int = None
    n_fits: int = 200
    iterations: int = None
    eval_every: int = None
    workers: int = 1
    flag: int = None
    bounds: tuple = None
    out_dir: str = "results"
    paper_scale: bool = False


_LIST_KEYS = {"kinds": str, "batch_sizes": int, "seeds": int}
_INT_KEYS = ("budget", "n_fits", "iterations", "eval_every", "workers", "flag")
_STR_KEYS = ("command", "dataset", "data_dir", "regime", "out_dir")


def _coerce(key, value):
    """Turn one raw config string into the typed field value."""
    if not isinstance(value, str):
        return value
    try:
        if key in _LIST_KEYS:
            cast = _LIST_KEYS[key]
            return tuple(cast(part) for part in value.split(",") if part != "")
        if key in _INT_KEYS:
            return int(value)
        if key == "paper_scale":
            if value not in ("true", "false"):
                raise ValueError(value)
            return value == "true"
        if key == "bounds":
            if value == "off":
                return ()
            lo, hi = value.split(",")
            return (float(lo), float(hi))
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}")
    if key in _STR_KEYS:
        return value
    raise ConfigError(f"unknown config key: {key}")


def parse_config_text(text):
    """Flat key=value lines to a raw-string dict. config_hash entries pass
    through untouched so manifests stay loadable."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        pairs[key] = value
    return pairs


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")


def build_config(command, file_pairs=None, cli_pairs=None):
    """Merge defaults, config-file values, then CLI values, in that order."""
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
    known = {f.name for f in fields(ExperimentConfig)}
    cfg = ExperimentConfig(command=command)
    for pairs in (file_pairs or {}, cli_pairs or {}):
        for key, value in pairs.items():
            if key == "config_hash":
                continue  # derived, recomputed on every write
            if key == "command":
                continue  # the subcommand itself wins over any file value
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
            cfg = replace(cfg, **{key: _coerce(key, value)})
    return cfg


def resolve_config(cfg):
    """Fill every None with its documented default and validate the result."""
    if cfg.dataset not in DATASETS:
        raise ConfigError(f"dataset must be one of {DATASETS}, got {cfg.dataset!r}")
    if not cfg.kinds:
        raise ConfigError("kinds must name at least one approximation")
    for kind in cfg.kinds:
        if kind not in KINDS:
            raise ConfigError(f"unknown approximation kind: {kind!r}")
    if not cfg.seeds:
        raise ConfigError("seeds must not be empty")
    if not cfg.batch_sizes or any(m < 1 for m in cfg.batch_sizes):
        raise ConfigError("batch_sizes must be positive")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")

    regime = cfg.regime
    if regime is None:
        regime = "fixed-batch" if cfg.command == "compare-exact" else "bounded"
    if regime not in REGIMES:
        raise ConfigError(f"regime must be one of {REGIMES}, got {regime!r}")
    if cfg.command == "compare-exact" and regime != "fixed-batch":
        raise ConfigError("compare-exact runs on the fixed-batch regime only")

    data_dir = cfg.data_dir
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV, "data")

    budget = cfg.budget
    if budget is None:
        if cfg.command == "compare-exact":
            budget = 10 ** 9  # iteration-capped command; FEs must not bind
        elif cfg.paper_scale:
            budget = 10 ** 5
        else:
            budget = 10 ** 4 if cfg.dataset == "wdbc" else 5 * 10 ** 3
    if budget < 1:
        raise ConfigError("budget must be positive")

    iterations = cfg.iterations
    if iterations is None:
        iterations = 3000 if cfg.paper_scale else 300
    eval_every = cfg.eval_every
    if eval_every is None:
        eval_every = 1 if cfg.command == "compare-exact" else 50

    flag = cfg.flag
    if flag is None:
        flag = 1 if regime == "no-bounds" else 0
    if flag not in (0, 1):
        raise ConfigError(f"flag must be 0 or 1, got {flag!r}")

    bounds = cfg.bounds
    if bounds is None:
        if regime == "no-bounds":
            bounds = ()
        elif cfg.dataset == "wdbc":
            bounds = (1e-8, 1e7)
        else:
            bounds = (1e-7, 1e8)
    if bounds != () and (len(bounds) != 2 or not bounds[0] < bounds[1]):
        raise ConfigError(f"bounds must be low,high or off, got {bounds!r}")

    return replace(cfg, regime=regime, data_dir=data_dir, budget=budget,
                   iterations=iterations, eval_every=eval_every, flag=flag,
                   bounds=bounds)


def _fmt_value(key, value):
    if key in _LIST_KEYS:
        return ",".join(str(v) for v in value)
    if key == "bounds":
        return "off" if value == () else ",".join(repr(float(v)) for v in value)
    if key == "paper_scale":
        return "true" if value else "false"
    return str(value)


def serialize_config(cfg):
    lines = [f"{f.name} = {_fmt_value(f.name, getattr(cfg, f.name))}"
             for f in fields(cfg)]
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


def write_manifest(cfg, notes=()):
    """Config round-trip plus a hash, with per-run status lines as comments."""
    path = os.path.join(cfg.out_dir, MANIFEST_NAME)
    body = serialize_config(cfg) + f"config_hash = {config_hash(cfg)}\n"
    for note in notes:
        body += f"# {note}\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(body)
    return path


def load_dataset(cfg):
    """Resolve the dataset id to loaded arrays, with pointed error messages."""
    try:
        if cfg.dataset == "wdbc":
            path = os.path.join(cfg.data_dir, "wdbc.data")
            if not os.path.exists(path):
                raise FileNotFoundError(
                    f"{path} not found; run scripts/make_wdbc.py or set {DATA_DIR_ENV}")
            return load_wdbc(path, seed=0)
        if cfg.dataset == "mnist":
            return load_mnist(cfg.data_dir)
        return load_cifar10(cfg.data_dir)
    except (OSError, ParseError) as exc:
        raise ConfigError(f"cannot load dataset {cfg.dataset!r}: {exc}")


def network_for(cfg, dataset):
    """Dataset id to network spec; paper_scale restores full layer widths."""
    if cfg.dataset == "wdbc":
        return logistic_spec(dataset.n_features)
    if cfg.dataset == "mnist":
        return nn1_spec(n_hidden=800 if cfg.paper_scale else 80)
    return nn2_spec(hidden=(1000, 500, 250) if cfg.paper_scale else (100, 50, 25))


def search_config(cfg, kind):
    bounds = Bounds(*cfg.bounds) if cfg.bounds else NO_BOUNDS
    return LineSearchConfig(kind=kind, accept_extrapolation=bool(cfg.flag),
                            bounds=bounds)


def _train_config(cfg, spec, dataset, kind, m, seed, exact=False):
    fixed = cfg.regime == "fixed-batch"
    return TrainConfig(
        dataset=cfg.dataset, net=spec,
        sampler_mode="static" if fixed else "dynamic",
        m=min(FIXED_BATCH_M, dataset.n_train) if fixed else m,
        search=search_config(cfg, kind),
        budget=cfg.budget, seed=seed, eval_every=cfg.eval_every,
        max_iterations=cfg.iterations if cfg.command == "compare-exact" else None,
        exact=exact, freeze_batch=fixed)


def _fmt_float(value):
    return repr(float(value))


def write_run_csv(path, records):
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join((str(r.fe), str(r.iter), _fmt_float(r.alpha),
                               _fmt_float(r.train_error), _fmt_float(r.test_error),
                               _fmt_float(r.dtheta), r.outcome)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_agg_csv(path, summary):
    names = ("alpha_mean", "alpha_sigma", "train_error_mean", "train_error_sigma",
             "test_error_mean", "test_error_sigma")
    lines = ["fe," + ",".join(names)]
    for i, fe in enumerate(summary["fe"]):
        row = [str(int(fe))] + [_fmt_float(summary[n][i]) for n in names]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_study_csvs(stats_path, hist_path, kind, m, seed, stats):
    header = "kind,m,seed,n,mu,sigma,q1,q2,q3,reference_minimizer,n_rejected"
    row = ",".join((kind, str(m), str(seed), str(stats.n), _fmt_float(stats.mu),
                    _fmt_float(stats.sigma), _fmt_float(stats.q1),
                    _fmt_float(stats.q2), _fmt_float(stats.q3),
                    _fmt_float(stats.reference_minimizer), str(stats.n_rejected)))
    with open(stats_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n" + row + "\n")
    lines = ["bin_lo,bin_hi,count"]
    for lo, hi, count in zip(stats.bin_edges[:-1], stats.bin_edges[1:],
                             stats.bin_counts):
        lines.append(f"{_fmt_float(lo)},{_fmt_float(hi)},{int(count)}")
    with open(hist_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _run_name(kind, m, seed):
    return f"run_{kind}_m{m}_seed{seed}.csv"


def _run_status(records, train_cfg):
    """A run that stopped before its budget and iteration cap blew up."""
    if records and records[-1].fe >= train_cfg.budget:
        return "ok"
    if train_cfg.max_iterations is not None and len(records) >= train_cfg.max_iterations:
        return "ok"
    return "nonfinite"


def _sweep_task(args):
    """One (kind, m, seed) run; executed in a worker when workers > 1."""
    cfg, spec, dataset, kind, m, seed, path = args
    train_cfg = _train_config(cfg, spec, dataset, kind, m, seed)
    records = train(train_cfg, dataset)
    write_run_csv(path, records)
    return records, _run_status(records, train_cfg)


def _run_tasks(cfg, tasks):
    if cfg.workers == 1:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(_sweep_task, tasks))


def run_sweep(cfg):
    """Train every kind x batch size x seed; write per-run and aggregate CSVs."""
    dataset = load_dataset(cfg)
    spec = network_for(cfg, dataset)
    os.makedirs(cfg.out_dir, exist_ok=True)
    sizes = cfg.batch_sizes
    if cfg.regime == "fixed-batch":
        sizes = (min(FIXED_BATCH_M, dataset.n_train),)
    tasks = [(cfg, spec, dataset, kind, m, seed,
              os.path.join(cfg.out_dir, _run_name(kind, m, seed)))
             for kind in cfg.kinds for m in sizes for seed in cfg.seeds]
    results = _run_tasks(cfg, tasks)

    notes = []
    by_setting = {}
    for task, (records, status) in zip(tasks, results):
        _, _, _, kind, m, seed, path = task
        notes.append(f"{os.path.basename(path)} status={status} records={len(records)}")
        by_setting.setdefault((kind, m), []).append(records)
    for (kind, m), runs in sorted(by_setting.items()):
        runs = [r for r in runs if r]
        if runs:
            write_agg_csv(os.path.join(cfg.out_dir, f"agg_{kind}_m{m}.csv"),
                          summarize(runs))
    write_manifest(cfg, notes)
    return 0


def run_train(cfg):
    """Single run: the first kind, batch size, and seed of the config."""
    dataset = load_dataset(cfg)
    spec = network_for(cfg, dataset)
    os.makedirs(cfg.out_dir, exist_ok=True)
    kind, m, seed = cfg.kinds[0], cfg.batch_sizes[0], cfg.seeds[0]
    if cfg.regime == "fixed-batch":
        m = min(FIXED_BATCH_M, dataset.n_train)
    path = os.path.join(cfg.out_dir, _run_name(kind, m, seed))
    records, status = _sweep_task((cfg, spec, dataset, kind, m, seed, path))
    write_manifest(cfg, [f"{os.path.basename(path)} status={status} "
                         f"records={len(records)}"])
    return 0


def run_study(cfg):
    """Distribution study per kind x batch size x seed; stats + histogram CSVs."""
    dataset = load_dataset(cfg)
    spec = network_for(cfg, dataset)
    os.makedirs(cfg.out_dir, exist_ok=True)
    notes = []
    for seed in cfg.seeds:
        x = init_weights(spec, seed)
        _, grad = batch_grad(spec, x, dataset)
        d = sgd_direction(grad)
        for kind in cfg.kinds:
            for m in cfg.batch_sizes:
                stats = distribution_study(spec, dataset, x, d, kind=kind, m=m,
                                           n_fits=cfg.n_fits, seed=seed)
                base = f"study_{kind}_m{m}_seed{seed}"
                write_study_csvs(os.path.join(cfg.out_dir, base + "_stats.csv"),
                                 os.path.join(cfg.out_dir, base + "_hist.csv"),
                                 kind, m, seed, stats)
                notes.append(f"{base} n={stats.n} rejected={stats.n_rejected}")
    write_manifest(cfg, notes)
    return 0


def run_compare_exact(cfg):
    """Every kind plus the golden-section baseline on one frozen batch."""
    dataset = load_dataset(cfg)
    spec = network_for(cfg, dataset)
    os.makedirs(cfg.out_dir, exist_ok=True)
    seed = cfg.seeds[0]
    notes = []
    for method in tuple(cfg.kinds) + ("exact",):
        kind = cfg.kinds[0] if method == "exact" else method
        train_cfg = _train_config(cfg, spec, dataset, kind, None, seed,
                                  exact=method == "exact")
        records = train(train_cfg, dataset)
        path = os.path.join(cfg.out_dir, f"compare_{method}.csv")
        write_run_csv(path, records)
        notes.append(f"compare_{method}.csv status={_run_status(records, train_cfg)} "
                     f"records={len(records)}")
    write_manifest(cfg, notes)
    return 0
