"""Experiment configs, seeded fan-out and CSV / summary output.

Config files are YAML::

    instance:
      agents: 4
      means: [0.9, 0.7, 0.7]        # Bernoulli shorthand, or
      # arms: [{kind: bernoulli, mean: 0.9}, {kind: constant, mean: 0.5}]
    algo: cbarc                      # or a list: [cbarc, coop_aae]
    adversary: {kind: targeted, budget: 2000, target: best, depress: 0.4}
    horizon: 200000
    delta: 0.05
    seeds: {count: 20, base: 0}      # or an explicit list
    checkpoints: default             # or a list of rounds
    output: results
    lean: false
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Union

import numpy as np
import yaml

from .adversaries import make_adversary
from .baselines import make_policy
from .checks import check_log
from .env import ArmSpec, BanditInstance, simulate
from .errors import ConfigError, ShapeMismatch
from .metrics import (MetricsSeries, aggregate_over_seeds, compute_series,
                      default_checkpoints)

ALGOS = ("cbarc", "ucb1", "coop_aae")
ADVERSARIES = ("null", "flip_mean", "targeted")
CSV_COLUMNS = ("seed", "t", "algo", "adversary", "regret", "realized_regret",
               "corruption", "comm_values", "comm_messages", "epoch")
_ADV_KEYS = {
    "null": (),
    "flip_mean": ("delta", "alpha", "b0", "start_interval"),
    "targeted": ("budget", "target", "depress"),
}
_TOP_KEYS = {"instance", "algo", "adversary", "horizon", "delta", "seeds",
             "checkpoints", "output", "lean", "algo_params"}


@dataclass
class ExperimentConfig:
    arms: List[ArmSpec]
    agents: int
    algos: List[str] = field(default_factory=lambda: ["cbarc"])
    adversary: dict = field(default_factory=lambda: {"kind": "null"})
    horizon: int = 10000
    delta: float = 0.05
    seeds: List[int] = field(default_factory=lambda: [0])
    checkpoints: Union[str, List[int]] = "default"
    output: str = "results"
    lean: bool = False
    algo_params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self, lines=None):
        lines = lines or {}

        def fail(msg, key):
            raise ConfigError(msg, key=key, line=lines.get(key))

        if self.agents < 1:
            fail("agents must be positive", "instance.agents")
        if self.agents > len(self.arms):
            fail(f"agents={self.agents} exceeds the {len(self.arms)} arms",
                 "instance.agents")
        for a in self.algos:
            if a not in ALGOS:
                fail(f"unknown algorithm {a!r}", "algo")
        kind = self.adversary.get("kind")
        if kind not in ADVERSARIES:
            fail(f"unknown adversary kind {kind!r}", "adversary.kind")
        for k in self.adversary:
            if k != "kind" and k not in _ADV_KEYS[kind]:
                fail(f"unknown parameter for {kind} adversary",
                     f"adversary.{k}")
        if self.horizon < 4:
            fail("horizon must be at least 4", "horizon")
        if not 0.0 < self.delta < 1.0:
            fail("delta must lie in (0, 1)", "delta")
        if not self.seeds:
            fail("at least one seed is required", "seeds")
        if len(set(self.seeds)) != len(self.seeds):
            fail("seeds must be distinct", "seeds")
        if self.checkpoints != "default":
            cp = list(self.checkpoints)
            if not cp or any(not 1 <= c <= self.horizon for c in cp) \
                    or cp != sorted(set(cp)):
                fail("checkpoints must be increasing rounds in [1, horizon]",
                     "checkpoints")
        if kind == "flip_mean":
            d = self.adversary.get("delta", 0.3)
            arms = self.arms
            if (len(arms) != 2 or arms[0].kind != "bernoulli"
                    or arms[1].kind != "constant"
                    or abs(arms[0].mean - (0.5 - d)) > 1e-12
                    or abs(arms[1].mean - 0.5) > 1e-12):
                fail("flip_mean needs arms [bernoulli(1/2 - delta), "
                     "constant(1/2)]", "instance.arms")
        try:
            self.make_adversary()
        except ConfigError as e:
            raise ConfigError(str(e).split(" (key")[0], key=e.key,
                              line=lines.get(e.key)) from None

    def instance(self) -> BanditInstance:
        return BanditInstance(self.arms, self.agents)

    def checkpoint_grid(self):
        if self.checkpoints == "default":
            return default_checkpoints(self.horizon)
        return np.asarray(self.checkpoints, dtype=np.int64)

    def make_adversary(self):
        params = {k: v for k, v in self.adversary.items() if k != "kind"}
        if self.adversary["kind"] == "targeted":
            target = params.pop("target", "best")
            params["target_arm"] = None if target == "best" else int(target)
            params.setdefault("budget", 0.0)
        return make_adversary(self.adversary["kind"], **params)

    def make_policy(self, algo):
        params = dict(self.algo_params.get(algo, {}))
        return make_policy(algo, self.delta, **params)

    def to_dict(self) -> dict:
        return {
            "instance": {
                "agents": self.agents,
                "arms": [{"kind": a.kind, "mean": a.mean} for a in self.arms],
            },
            "algo": list(self.algos),
            "adversary": dict(self.adversary),
            "horizon": self.horizon,
            "delta": self.delta,
            "seeds": list(self.seeds),
            "checkpoints": (self.checkpoints if self.checkpoints == "default"
                            else list(self.checkpoints)),
            "output": self.output,
            "lean": self.lean,
            "algo_params": {k: dict(v) for k, v in self.algo_params.items()},
        }


def _key_lines(text):
    """Map dotted keys to 1-based source lines."""
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[key] = k.start_mark.line + 1
                walk(v, key)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, "")
    return lines


def _as_int(value, key, lines):
    if isinstance(value, bool) or not isinstance(value, (int, float)) \
            or int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", key=key,
                          line=lines.get(key))
    return int(value)


def parse_config(text: str) -> ExperimentConfig:
    """Parse YAML text into a validated ExperimentConfig."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(e, 'problem', e)}",
                          line=mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    lines = _key_lines(text)
    for k in data:
        if k not in _TOP_KEYS:
            raise ConfigError("unknown key", key=str(k), line=lines.get(k))

    inst = data.get("instance")
    if not isinstance(inst, dict):
        raise ConfigError("missing 'instance' section", key="instance",
                          line=lines.get("instance"))
    agents = _as_int(inst.get("agents", 1), "instance.agents", lines)
    try:
        if "arms" in inst:
            arms = []
            for a in inst["arms"]:
                if isinstance(a, dict):
                    arms.append(ArmSpec(str(a.get("kind", "bernoulli")),
                                        float(a["mean"])))
                else:
                    arms.append(ArmSpec("bernoulli", float(a)))
        elif "means" in inst:
            arms = [ArmSpec("bernoulli", float(m)) for m in inst["means"]]
        else:
            raise ConfigError("instance needs 'arms' or 'means'")
    except (ConfigError, KeyError, TypeError, ValueError) as e:
        key = "instance.arms" if "arms" in inst else "instance.means"
        raise ConfigError(f"bad arm specification: {e}", key=key,
                          line=lines.get(key)) from None

    algo = data.get("algo", "cbarc")
    algos = [algo] if isinstance(algo, str) else list(algo)

    adv = data.get("adversary", {"kind": "null"})
    if isinstance(adv, str):
        adv = {"kind": adv}
    if not isinstance(adv, dict):
        raise ConfigError("adversary must be a mapping", key="adversary",
                          line=lines.get("adversary"))
    adv = dict(adv)
    if adv.get("kind") is None:
        adv["kind"] = "null"

    seeds = data.get("seeds", [0])
    if isinstance(seeds, dict):
        count = _as_int(seeds.get("count", 1), "seeds.count", lines)
        base = _as_int(seeds.get("base", 0), "seeds.base", lines)
        seeds = list(range(base, base + count))
    elif isinstance(seeds, int):
        seeds = list(range(seeds))
    else:
        seeds = [_as_int(s, "seeds", lines) for s in seeds]

    cp = data.get("checkpoints", "default")
    if cp != "default":
        if not isinstance(cp, list):
            raise ConfigError("checkpoints must be 'default' or a list",
                              key="checkpoints", line=lines.get("checkpoints"))
        cp = [_as_int(c, "checkpoints", lines) for c in cp]

    delta = data.get("delta", 0.05)
    if isinstance(delta, bool) or not isinstance(delta, (int, float)):
        raise ConfigError("delta must be a number", key="delta",
                          line=lines.get("delta"))
    cfg = ExperimentConfig.__new__(ExperimentConfig)
    cfg.arms = arms
    cfg.agents = agents
    cfg.algos = algos
    cfg.adversary = adv
    cfg.horizon = _as_int(data.get("horizon", 10000), "horizon", lines)
    cfg.delta = float(delta)
    cfg.seeds = seeds
    cfg.checkpoints = cp
    cfg.output = str(data.get("output", "results"))
    cfg.lean = bool(data.get("lean", False))
    cfg.algo_params = dict(data.get("algo_params") or {})
    cfg.validate(lines)
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


@dataclass
class SeedResult:
    seed: int
    algo: str
    series: MetricsSeries
    violations: List[str]
    info: dict


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def algo_labels(algos):
    """Unique labels; repeats of one algorithm become ``name#2``, ``name#3``."""
    seen = {}
    out = []
    for a in algos:
        seen[a] = seen.get(a, 0) + 1
        out.append(a if seen[a] == 1 else f"{a}#{seen[a]}")
    return out


def _run_one(job):
    cfg, algo, label, seed = job
    log = simulate(cfg.make_policy(algo), cfg.instance(), cfg.make_adversary(),
                   cfg.horizon, seed, lean=cfg.lean)
    series = compute_series(log, cfg.checkpoint_grid())
    info = {"epochs": len(log.segment_starts),
            "adversary": log.adversary_info}
    snaps = log.snapshots
    if algo == "cbarc":
        best = log.instance.best_arm
        last = snaps[-1]
        info["any_reactivation"] = any(
            s.reactivated is not None and bool(s.reactivated.any())
            for s in snaps)
        info["best_arm_active_at_end"] = bool(last.active[best])
        info["best_retained"] = sum(s.best_retained for s in snaps)
    return SeedResult(seed, label, series, check_log(log), info)


def run_jobs(cfg, workers=1):
    """Run every (algorithm, seed) pair, in parallel when ``workers > 1``.

    Results come back ordered by algorithm position, then seed, whatever
    order the workers finish in.
    """
    labels = algo_labels(cfg.algos)
    jobs = [(cfg, a, lab, s) for a, lab in zip(cfg.algos, labels)
            for s in cfg.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: (labels.index(r.algo), r.seed))
    return results


def series_rows(res: SeedResult, adversary: str):
    s = res.series
    for k, t in enumerate(s.checkpoints):
        yield [res.seed, int(t), res.algo, adversary, s.regret[k],
               s.realized_regret[k], s.corruption[k], s.comm_values[k],
               s.comm_messages[k], s.epoch[k]]


def csv_text(results, adversary):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        for row in series_rows(r, adversary):
            w.writerow([_fmt(x) if not isinstance(x, str) else x
                        for x in row])
    return buf.getvalue()


def _stats(agg):
    return {"mean": agg.mean.tolist(), "stderr": agg.stderr.tolist(),
            "quantiles": {str(q): v.tolist() for q, v in agg.quantiles.items()}}


def summarize(cfg, results):
    out = {"config": cfg.to_dict(), "algos": {}}
    for algo in algo_labels(cfg.algos):
        rs = [r for r in results if r.algo == algo]
        entry = {
            "checkpoints": rs[0].series.checkpoints.tolist(),
            "seeds": [r.seed for r in rs],
            "final_regret": [float(r.series.regret[-1]) for r in rs],
            "final_realized_regret": [_jsonable(r.series.realized_regret[-1])
                                      for r in rs],
            "final_corruption": [float(r.series.corruption[-1]) for r in rs],
            "invariant_violations": {str(r.seed): r.violations
                                     for r in rs if r.violations},
            "invariants_ok": all(not r.violations for r in rs),
            "per_seed": {str(r.seed): r.info for r in rs},
        }
        if len(rs) >= 2:
            agg = aggregate_over_seeds([r.series for r in rs])
            entry["aggregate"] = {k: _stats(v) for k, v in agg.items()
                                  if k != "mean_realized_regret"}
        out["algos"][algo] = entry
    return out


def _jsonable(x):
    x = float(x)
    return None if math.isnan(x) else x


def _write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def run(cfg: ExperimentConfig, out_dir=None, workers=1):
    """Run every (algo, seed) pair and write CSV + summary files.

    Per-seed CSVs land in ``<out>/seeds/``; ``results.csv`` is their merge in
    (algo, seed) order and ``summary.json`` holds seed aggregates and
    invariant-check outcomes. Returns ``(results, summary)``.
    """
    out_dir = out_dir or cfg.output
    results = run_jobs(cfg, workers)
    adv = cfg.adversary["kind"]
    for r in results:
        _write(os.path.join(out_dir, "seeds", f"{r.algo}_seed{r.seed}.csv"),
               csv_text([r], adv))
    _write(os.path.join(out_dir, "results.csv"), csv_text(results, adv))
    summary = summarize(cfg, results)
    _write(os.path.join(out_dir, "summary.json"),
           json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return results, summary


def compare(cfg: ExperimentConfig, out_dir=None, workers=1):
    """Paired comparison of two or more algorithms on shared reward streams.

    Writes ``compare.csv`` (one row per seed and ordered pair) and
    ``compare.json`` (median differences and win rates on final regret).
    """
    if len(cfg.algos) < 2:
        raise ConfigError("compare needs at least two algorithms", key="algo")
    out_dir = out_dir or cfg.output
    results, summary = run(cfg, out_dir, workers)
    final = {(r.algo, r.seed): float(r.series.regret[-1]) for r in results}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "algo_a", "algo_b", "regret_a", "regret_b", "diff"])
    report = {"pairs": {}, "win_rate": {}}
    algos = algo_labels(cfg.algos)
    for a in algos:
        report["win_rate"][a] = {}
        for b in algos:
            if a == b:
                continue
            diffs = []
            wins = 0
            for s in cfg.seeds:
                ra, rb = final[(a, s)], final[(b, s)]
                diffs.append(ra - rb)
                wins += ra < rb
                w.writerow([s, a, b, _fmt(ra), _fmt(rb), _fmt(ra - rb)])
            report["pairs"][f"{a}-{b}"] = {
                "median_diff": float(np.median(diffs)),
                "mean_diff": float(np.mean(diffs)),
                "diffs": diffs,
            }
            report["win_rate"][a][b] = wins / len(cfg.seeds)
    _write(os.path.join(out_dir, "compare.csv"), buf.getvalue())
    _write(os.path.join(out_dir, "compare.json"),
           json.dumps(report, indent=2, sort_keys=True) + "\n")
    return results, report


def read_csv(path):
    """Rows of a results CSV as dicts with numeric fields converted."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                tuple(reader.fieldnames) != CSV_COLUMNS:
            raise ShapeMismatch(f"{path}: unexpected CSV header "
                                f"{reader.fieldnames}")
        rows = []
        for row in reader:
            rows.append({
                "seed": int(row["seed"]), "t": int(row["t"]),
                "algo": row["algo"], "adversary": row["adversary"],
                "regret": float(row["regret"]),
                "realized_regret": float(row["realized_regret"]),
                "corruption": float(row["corruption"]),
                "comm_values": int(row["comm_values"]),
                "comm_messages": int(row["comm_messages"]),
                "epoch": int(row["epoch"]),
            })
    return rows
