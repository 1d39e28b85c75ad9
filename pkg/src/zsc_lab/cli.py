"""Command-line entry point and experiment pipeline.

``zsc-lab run experiments/smoke.json`` trains every (framework, seed) model
named in the config, builds the cross-play matrix with similarity estimates,
then writes the correlation artifacts and the intra/inter summary. Progress is
recorded in ``manifest.json`` so an interrupted run resumes where it stopped.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .analysis import (
    ScatterPoint,
    pearson_r,
    render_scatter_svg,
    write_correlation_csv,
    write_scatter_csv,
)
from .crossplay import CrossPlayCell, aggregate_cells, cross_play_matrix
from .environment import GameConfig, resolve_game
from .errors import ConfigError, DegenerateInputError, OutputError, StageMissingError, ZscLabError
from .qlearn import FRAMEWORKS, ModelRecord, TrainConfig, train_selfplay
from .sbrt import Mode, SbrtConfig, train_sbrt
from .similarity import estimate_cpstt

MATRIX_HEADER = ["model_a", "model_b", "framework_a", "framework_b", "seed_a", "seed_b",
                 "mean_score", "std_err", "n_games", "cpstt_ab", "cpstt_ba"]
SUMMARY_HEADER = ["variant", "intra_mean", "intra_std_err", "intra_n_games",
                  "inter_mean", "inter_std_err", "inter_n_games"]
STAGES = ("train", "crossplay", "correlate", "summary")
DEFAULT_EVAL_GAMES = 2000
_SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class FrameworkEntry:
    framework: str
    seeds: tuple[int, ...]
    train: TrainConfig
    sbrt: Optional[SbrtConfig] = None

    @property
    def variant(self) -> str:
        return self.framework + ("+SBRT" if self.sbrt is not None else "")

    def train_config(self, seed: int) -> TrainConfig:
        d = self.train.to_dict()
        d.update(framework=self.framework, seed=seed)
        return TrainConfig.from_dict(d)

    def model_ids(self) -> list[str]:
        return [f"{self.variant.lower()}-s{s}" for s in self.seeds]

    def to_dict(self) -> dict:
        train = self.train.to_dict()
        del train["framework"], train["seed"]
        d = {"framework": self.framework, "seeds": list(self.seeds), "train": train}
        if self.sbrt is not None:
            d["sbrt"] = self.sbrt.to_dict()
        return d


@dataclass(frozen=True)
class EvalConfig:
    n_games: int = DEFAULT_EVAL_GAMES
    master_seed: int = 0
    with_cpstt: bool = True
    cpstt_games: Optional[int] = None

    def to_dict(self) -> dict:
        return {"n_games": self.n_games, "master_seed": self.master_seed,
                "with_cpstt": self.with_cpstt, "cpstt_games": self.cpstt_games}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    game: GameConfig
    frameworks: tuple[FrameworkEntry, ...]
    eval: EvalConfig = field(default_factory=EvalConfig)
    output_dir: str = "results"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("experiment config must be a JSON object")
        unknown = set(data) - {"name", "game", "frameworks", "eval", "output_dir"}
        if unknown:
            raise ConfigError(f"unknown experiment fields: {sorted(unknown)}")
        name = data.get("name")
        if not isinstance(name, str) or not _SAFE_NAME.match(name):
            raise ConfigError(f"experiment name {name!r} is not filesystem-safe")
        game = resolve_game(data.get("game", "hanabi-small"))
        entries = []
        for raw in data.get("frameworks") or []:
            entries.append(_entry_from_dict(raw))
        if not entries:
            raise ConfigError("at least one framework entry is required")
        ids = [i for e in entries for i in e.model_ids()]
        if len(ids) != len(set(ids)):
            raise ConfigError("two framework entries produce the same model id")
        ev = dict(data.get("eval") or {})
        unknown = set(ev) - set(EvalConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown eval fields: {sorted(unknown)}")
        try:
            evc = EvalConfig(**ev)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        if evc.n_games < 2 or evc.n_games % 2:
            raise ConfigError("eval.n_games must be even and >= 2")
        if evc.cpstt_games is not None and evc.cpstt_games < 1:
            raise ConfigError("eval.cpstt_games must be >= 1")
        return cls(name, game, tuple(entries), evc, str(data.get("output_dir", "results")))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {"name": self.name, "game": self.game.to_dict(),
                "frameworks": [e.to_dict() for e in self.frameworks],
                "eval": self.eval.to_dict(), "output_dir": self.output_dir}

    def config_hash(self) -> str:
        """Hash of everything that affects results; ``output_dir`` is excluded."""
        d = self.to_dict()
        del d["output_dir"]
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def root(self) -> Path:
        return Path(self.output_dir) / self.name


def _entry_from_dict(raw: dict) -> FrameworkEntry:
    if not isinstance(raw, dict):
        raise ConfigError("framework entries must be objects")
    unknown = set(raw) - {"framework", "seeds", "train", "sbrt"}
    if unknown:
        raise ConfigError(f"unknown framework-entry fields: {sorted(unknown)}")
    fw = str(raw.get("framework", "")).upper()
    if fw not in FRAMEWORKS:
        raise ConfigError(f"framework must be one of {FRAMEWORKS}, got {raw.get('framework')!r}")
    seeds = raw.get("seeds")
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError(f"{fw}: seeds must be a non-empty list of integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"{fw}: seeds must be distinct")
    train = dict(raw.get("train") or {})
    train.pop("seed", None)
    train["framework"] = fw
    tc = TrainConfig.from_dict(train)
    sbrt = None
    if raw.get("sbrt") is not None:
        sbrt = SbrtConfig.from_dict(raw["sbrt"])
        if sbrt.epochs != tc.epochs:
            raise ConfigError(f"{fw}+SBRT: n_st + n_rt must equal train.epochs ({tc.epochs})")
    return FrameworkEntry(fw, tuple(seeds), tc, sbrt)


# ---------------------------------------------------------------- manifest

def write_atomic(path: Path, text: str) -> None:
    """Write-temp-then-rename, so readers never see a half-written file."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    config: dict
    models: dict = field(default_factory=dict)
    stages: dict = field(default_factory=lambda: {s: False for s in STAGES})

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "tool_version": self.tool_version,
                "config": self.config, "models": self.models, "stages": self.stages}

    def save(self, path: Path) -> None:
        write_atomic(path, json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise OutputError(f"cannot read manifest {path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: corrupt manifest ({exc})") from exc
        stages = {s: False for s in STAGES}
        stages.update(data.get("stages", {}))
        return cls(data["config_hash"], data.get("tool_version", "?"), data["config"],
                   data.get("models", {}), stages)


def _open_manifest(cfg: ExperimentConfig) -> tuple[RunManifest, Path]:
    path = cfg.root / "manifest.json"
    if path.exists():
        m = RunManifest.load(path)
        if m.config_hash != cfg.config_hash():
            raise ConfigError(f"{path} was written for a different config; "
                              "use a new experiment name or delete the directory")
        return m, path
    m = RunManifest(cfg.config_hash(), __version__, cfg.to_dict())
    m.save(path)
    return m, path


# ---------------------------------------------------------------- stages

def _train_task(args) -> tuple[str, str, float]:
    model_id, game, tc, sbrt = args
    t0 = time.perf_counter()
    if sbrt is None:
        rec = train_selfplay(game, tc)
    else:
        rec = train_sbrt(game, tc, sbrt)
    return model_id, rec.dumps(), time.perf_counter() - t0


def _map(fn, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            yield fn(t)
        return
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
        yield from ex.map(fn, tasks)


def stage_train(cfg: ExperimentConfig, manifest: RunManifest, mpath: Path, jobs: int,
                log=print) -> None:
    models_dir = cfg.root / "models"
    tasks = []
    for e in cfg.frameworks:
        for seed, mid in zip(e.seeds, e.model_ids()):
            rel = f"models/{mid}.json"
            if mid in manifest.models and (cfg.root / rel).exists():
                continue
            tasks.append((mid, cfg.game, e.train_config(seed), e.sbrt))
    for mid, text, secs in _map(_train_task, tasks, jobs):
        write_atomic(models_dir / f"{mid}.json", text)
        manifest.models[mid] = {"path": f"models/{mid}.json", "train_seconds": round(secs, 3)}
        manifest.save(mpath)
        log(f"trained {mid} in {secs:.1f}s")
    manifest.stages["train"] = True
    manifest.save(mpath)


def _fmt_float(v: Optional[float]) -> str:
    return "" if v is None else repr(float(v))


def matrix_csv_text(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MATRIX_HEADER)
    for c in cells:
        w.writerow([c.model_a, c.model_b, c.framework_a, c.framework_b, c.seed_a, c.seed_b,
                    _fmt_float(c.score.mean), _fmt_float(c.score.std_err), c.score.n_games,
                    _fmt_float(c.cpstt_ab.value if c.cpstt_ab else None),
                    _fmt_float(c.cpstt_ba.value if c.cpstt_ba else None)])
    return buf.getvalue()


def cells_json_text(cells) -> str:
    return json.dumps({"cells": [c.to_dict() for c in cells]}, indent=1, sort_keys=True) + "\n"


def load_cells(path) -> list[CrossPlayCell]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return [CrossPlayCell.from_dict(d) for d in data["cells"]]


def load_models(root: Path, manifest: RunManifest) -> dict[str, ModelRecord]:
    out = {}
    for mid in sorted(manifest.models):
        path = root / manifest.models[mid]["path"]
        try:
            out[mid] = ModelRecord.load(path)
        except OSError as exc:
            raise OutputError(f"cannot read model {path}: {exc.strerror or exc}") from exc
    return out


def stage_crossplay(cfg: ExperimentConfig, manifest: RunManifest, mpath: Path, jobs: int) -> None:
    if not manifest.stages["train"]:
        raise StageMissingError("training stage incomplete")
    models = load_models(cfg.root, manifest)
    ev = cfg.eval
    cells = cross_play_matrix(models, ev.n_games, ev.master_seed, with_cpstt=ev.with_cpstt,
                              cpstt_games=ev.cpstt_games, jobs=jobs)
    write_atomic(cfg.root / "crossplay.json", cells_json_text(cells))
    write_atomic(cfg.root / "crossplay.csv", matrix_csv_text(cells))
    manifest.stages["crossplay"] = True
    manifest.save(mpath)


def read_matrix_points(path):
    """Scatter points from a matrix CSV; rows without similarity values are skipped."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    pts = []
    for r in rows:
        if not r.get("cpstt_ab") or not r.get("cpstt_ba"):
            continue
        x = (float(r["cpstt_ab"]) + float(r["cpstt_ba"])) / 2
        pts.append(ScatterPoint(x, float(r["mean_score"]), r["model_a"], r["model_b"],
                                r["framework_a"], r["framework_b"]))
    return pts


def correlate(matrix_path, out_dir, seed: int = 0, shuffles: int = 10_000,
              max_score: Optional[float] = None) -> Optional[float]:
    """scatter.csv, scatter.svg and correlation.csv from a matrix CSV; returns r_p."""
    out_dir = Path(out_dir)
    pts = read_matrix_points(matrix_path)
    write_scatter_csv(pts, out_dir / "scatter.csv")
    try:
        r = pearson_r(pts)
    except DegenerateInputError:
        r = None
    if pts:
        render_scatter_svg(pts, r, out_dir / "scatter.svg", max_score)
    write_correlation_csv(pts, out_dir / "correlation.csv", shuffles, seed)
    return r


def stage_correlate(cfg: ExperimentConfig, manifest: RunManifest, mpath: Path) -> None:
    if not manifest.stages["crossplay"]:
        raise StageMissingError("cross-play stage incomplete")
    correlate(cfg.root / "crossplay.csv", cfg.root, cfg.eval.master_seed,
              max_score=cfg.game.max_score)
    manifest.stages["correlate"] = True
    manifest.save(mpath)


# ---------------------------------------------------------------- summary

def summary_rows(config: dict, cells) -> list[list[str]]:
    """Intra and inter cross-play per framework variant.

    Inter partners of a variant are the plain (non-SBRT) models of every other
    base framework; the column is empty when there are none.
    """
    entries = [_entry_from_dict(e) for e in config["frameworks"]]
    rows = []
    for e in entries:
        ids = e.model_ids()
        others = [i for o in entries if o.sbrt is None and o.framework != e.framework
                  for i in o.model_ids()]
        row = [e.variant]
        for mo, ok in ((None, len(ids) >= 2), (others, bool(others))):
            st = aggregate_cells(cells, ids, mo) if ok else None
            row += (["", "", ""] if st is None
                    else [repr(st.mean), repr(st.std_err), str(st.n_games)])
        rows.append(row)
    return rows


def report(manifest_path, out=None) -> list[list[str]]:
    """Print the intra/inter table and write summary.csv next to the manifest."""
    mpath = Path(manifest_path)
    if mpath.is_dir():
        mpath = mpath / "manifest.json"
    manifest = RunManifest.load(mpath)
    if not manifest.stages.get("crossplay"):
        raise StageMissingError(f"{mpath}: cross-play stage has not completed")
    root = mpath.parent
    rows = summary_rows(manifest.config, load_cells(root / "crossplay.json"))
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows([SUMMARY_HEADER] + rows)
    path = root / "summary.csv"
    if not path.exists() or path.read_text(encoding="utf-8") != buf.getvalue():
        write_atomic(path, buf.getvalue())
    (out or sys.stdout).write(format_table(rows))
    return rows


def format_table(rows) -> str:
    def cell(mean, se):
        return "-" if not mean else f"{float(mean):.3f} ± {float(se):.3f}"
    table = [("variant", "intra-algorithm", "inter-algorithm")]
    table += [(r[0], cell(r[1], r[2]), cell(r[4], r[5])) for r in rows]
    widths = [max(len(t[i]) for t in table) for i in range(3)]
    lines = ["  ".join(v.ljust(w) for v, w in zip(t, widths)).rstrip() for t in table]
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, log=print) -> RunManifest:
    manifest, mpath = _open_manifest(cfg)
    root = cfg.root
    if not manifest.stages["train"] or any(
            not (root / "models" / f"{i}.json").exists()
            for e in cfg.frameworks for i in e.model_ids()):
        manifest.stages.update({s: False for s in STAGES})
        stage_train(cfg, manifest, mpath, jobs, log)
    if not manifest.stages["crossplay"] or not (root / "crossplay.json").exists():
        manifest.stages.update(crossplay=False, correlate=False, summary=False)
        stage_crossplay(cfg, manifest, mpath, jobs)
        log("cross-play matrix written")
    if not manifest.stages["correlate"]:
        stage_correlate(cfg, manifest, mpath)
        log("correlation artifacts written")
    if not manifest.stages["summary"]:
        report(mpath, out=io.StringIO())
        manifest.stages["summary"] = True
        manifest.save(mpath)
    return manifest


# ---------------------------------------------------------------- argparse

def _default_jobs() -> int:
    raw = os.environ.get("ZSC_LAB_JOBS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ZSC_LAB_JOBS must be an integer, got {raw!r}") from None
    return max(1, n)


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--game", default="hanabi-small",
                   help="preset name or path to a GameConfig JSON file")
    p.add_argument("--config", help="TrainConfig JSON file; flags override its fields")
    p.add_argument("--framework", choices=FRAMEWORKS)
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int, dest="episodes_per_epoch")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, dest="learning_rate")
    p.add_argument("--gamma", type=float)
    p.add_argument("--eps-start", type=float, dest="epsilon_start")
    p.add_argument("--eps-end", type=float, dest="epsilon_end")
    p.add_argument("--abstraction", choices=["FULL", "COMPACT", "COARSE"])
    p.add_argument("--out", required=True, help="model file to write")


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _game_arg(value: str) -> GameConfig:
    if value.endswith(".json") or os.sep in value:
        return resolve_game(_load_json(value))
    return resolve_game(value)


def _train_config_from_args(args) -> TrainConfig:
    d = _load_json(args.config) if args.config else {}
    for name in ("framework", "seed", "episodes_per_epoch", "epochs", "learning_rate", "gamma",
                 "epsilon_start", "epsilon_end", "abstraction"):
        v = getattr(args, name, None)
        if v is not None:
            d[name] = v
    return TrainConfig.from_dict(d)


def _load_model(path) -> ModelRecord:
    try:
        return ModelRecord.load(path)
    except OSError as exc:
        raise OutputError(f"cannot read model {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid model file ({exc})") from exc


def cmd_train(args) -> int:
    game = _game_arg(args.game)
    rec = train_selfplay(game, _train_config_from_args(args))
    write_atomic(Path(args.out), rec.dumps())
    print(f"wrote {args.out} ({rec.model_id})")
    return 0


def cmd_sbrt_train(args) -> int:
    game = _game_arg(args.game)
    tc = _train_config_from_args(args)
    n_rt = args.n_rt if args.n_rt is not None else min(10, tc.epochs)
    n_st = args.n_st if args.n_st is not None else tc.epochs - n_rt
    if args.epochs is None and (args.n_st is not None or args.n_rt is not None):
        d = tc.to_dict()
        d["epochs"] = n_st + n_rt
        tc = TrainConfig.from_dict(d)
    sc = SbrtConfig(alpha_r=args.alpha_r, n_st=n_st, n_rt=n_rt, mode=args.mode)
    rec = train_sbrt(game, tc, sc)
    write_atomic(Path(args.out), rec.dumps())
    print(f"wrote {args.out} ({rec.model_id})")
    return 0


def cmd_crossplay(args) -> int:
    pool = {}
    for path in args.models:
        rec = _load_model(path)
        if rec.model_id in pool:
            raise ConfigError(f"duplicate model id {rec.model_id} ({path})")
        pool[rec.model_id] = rec
    cells = cross_play_matrix(pool, args.games, args.seed, with_cpstt=not args.no_cpstt,
                              ordered=args.ordered, include_self=args.include_self,
                              cpstt_games=args.cpstt_games, jobs=args.jobs)
    out = Path(args.out)
    if out.suffix == ".csv":
        write_atomic(out, matrix_csv_text(cells))
    else:
        write_atomic(out / "crossplay.csv", matrix_csv_text(cells))
        write_atomic(out / "crossplay.json", cells_json_text(cells))
    print(f"{len(cells)} cells written to {out}")
    return 0


def cmd_cpstt(args) -> int:
    pi, pi1, pi2 = (_load_model(p) for p in (args.pi, args.pi1, args.pi2))
    est = estimate_cpstt(pi, pi1, pi2, args.games, args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["pi", "pi1", "pi2", "value", "n_decisions", "n_games"])
    w.writerow([pi.model_id, pi1.model_id, pi2.model_id, repr(est.value),
                est.n_decisions, est.n_games])
    return 0


def cmd_correlate(args) -> int:
    r = correlate(args.matrix, args.out, args.seed, args.shuffles, args.max_score)
    print("r_p = n/a" if r is None else f"r_p = {r:.3f}")
    return 0


def cmd_report(args) -> int:
    report(args.manifest)
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.output_dir:
        cfg = ExperimentConfig(cfg.name, cfg.game, cfg.frameworks, cfg.eval, args.output_dir)
    log = (lambda *_: None) if args.quiet else (lambda msg: print(msg, flush=True))
    manifest = run_experiment(cfg, args.jobs, log)
    if not args.quiet:
        report(cfg.root / "manifest.json")
    return 0 if all(manifest.stages.values()) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zsc-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="self-play training of one model")
    _add_train_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sbrt-train", help="similarity-based robust training of one model")
    _add_train_args(p)
    p.add_argument("--alpha-r", type=float, default=0.8)
    p.add_argument("--n-st", type=int)
    p.add_argument("--n-rt", type=int)
    p.add_argument("--mode", type=str.upper, choices=[m.value for m in Mode], default="RANDOM")
    p.set_defaults(func=cmd_sbrt_train)

    p = sub.add_parser("crossplay", help="cross-play matrix over model files")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--games", type=int, default=DEFAULT_EVAL_GAMES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-cpstt", action="store_true")
    p.add_argument("--cpstt-games", type=int)
    p.add_argument("--ordered", action="store_true")
    p.add_argument("--include-self", action="store_true")
    p.add_argument("--out", required=True, help="directory, or a .csv path")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_crossplay)

    p = sub.add_parser("cpstt", help="similarity of pi2 to pi1 on (pi, pi1) rollouts")
    p.add_argument("--pi", required=True)
    p.add_argument("--pi1", required=True)
    p.add_argument("--pi2", required=True)
    p.add_argument("--games", type=int, default=DEFAULT_EVAL_GAMES)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cpstt)

    p = sub.add_parser("correlate", help="scatter and correlation files from a matrix CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="permutation-test seed")
    p.add_argument("--shuffles", type=int, default=10_000)
    p.add_argument("--max-score", type=float)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="intra/inter cross-play table of a finished run")
    p.add_argument("manifest", help="manifest.json or the experiment directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="full pipeline from a JSON experiment config")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--output-dir")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "jobs", 0) is None:
            args.jobs = _default_jobs()
        return args.func(args)
    except ZscLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
