"""Benchmark harness: simulate, estimate, score and aggregate over replicates.

A config is JSON (schema in README). Every replicate draws its graph, data
and CV folds from substreams keyed by ``(master_seed, setting, replicate)``,
so reports do not depend on worker count or on settings added later.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .covariance import sample_covariance
from .edges import select_edges
from .errors import EqvarError
from .metrics import edge_metrics, kendall_tau, ordering_to_ranks, true_ranks
from .ordering import OrderingConfig, discover_order
from .sem import ErrorSpec, SemModel
from .simulate import FAMILIES, CoeffLaw, GraphRecipe, generate, make_rng, sample_data, sparse_pc

__all__ = [
    "Setting",
    "BenchmarkConfig",
    "ReportRow",
    "BenchmarkReport",
    "load_config",
    "run_benchmark",
    "parse_estimator",
]

METRICS = ("tau", "recall", "flipped", "fdr", "hamming")
CONFIG_DIR = Path(__file__).with_name("configs")
_HD = re.compile(r"^(?:TD_HD|HTD)\((\d+)\)$")


class ConfigError(EqvarError):
    pass


def parse_estimator(name: str, q: int | None = None) -> tuple[str, OrderingConfig]:
    """Map ``TD``, ``BU``, ``TD_HD(q)`` / ``HTD(q)`` (or ``HTD`` plus ``q``) to a config."""
    if name == "TD":
        return "TD", OrderingConfig.full()
    if name == "BU":
        return "BU", OrderingConfig.bottom_up()
    m = _HD.match(name)
    if m:
        return "HTD", OrderingConfig.subset(int(m.group(1)))
    if name in ("TD_HD", "HTD"):
        if q is None:
            raise ConfigError(f"estimator {name} needs q")
        return "HTD", OrderingConfig.subset(q)
    raise ConfigError(f"unknown estimator {name!r}")


@dataclass(frozen=True)
class Setting:
    family: str
    p: int
    n: int
    estimators: tuple[str, ...]
    pc: float = 0.0
    coeff: tuple[float, float] = (0.3, 1.0)
    error: ErrorSpec = field(default_factory=ErrorSpec)
    replicates: int = 100
    folds: int = 5
    edges: bool = True
    label: str = ""
    q: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.p < 1 or self.n < 2:
            raise ConfigError("need p >= 1 and n >= 2")
        for e in self.estimators:
            parse_estimator(e, self.q)

    def recipe(self, seed: int) -> GraphRecipe:
        law = CoeffLaw(*self.coeff)
        return GraphRecipe(self.family, self.p, law, seed=seed, pc=self.pc)


@dataclass(frozen=True)
class BenchmarkConfig:
    settings: tuple[Setting, ...]
    master_seed: int = 0
    name: str = "bench"


def _pc_value(raw, p: int) -> float:
    if raw == "sparse":
        return sparse_pc(p)
    if raw == "dense":
        return 0.3
    return float(raw)


def load_config(source, full: bool = False, replicates: int | None = None) -> BenchmarkConfig:
    """Parse a config from a path, a bundled name (``table1``) or a dict.

    ``full`` switches to the ``full_replicates`` counts; ``replicates``
    overrides every count.
    """
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        if not path.exists():
            bundled = CONFIG_DIR / path.name
            if not bundled.exists():
                bundled = CONFIG_DIR / f"{path.name}.json"
            path = bundled
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    try:
        default_reps = int(raw.get("full_replicates" if full else "replicates", 100))
        settings = []
        for s in raw["settings"]:
            p = int(s["p"])
            reps = int(s.get("full_replicates" if full else "replicates", default_reps))
            if replicates is not None:
                reps = int(replicates)
            settings.append(
                Setting(
                    family=s["family"],
                    p=p,
                    n=int(s["n"]),
                    estimators=tuple(s["estimators"]),
                    pc=_pc_value(s.get("pc", 0.0), p),
                    coeff=tuple(float(c) for c in s.get("coeff", (0.3, 1.0))),
                    error=ErrorSpec.from_dict(s.get("error", {})),
                    replicates=reps,
                    folds=int(s.get("folds", raw.get("folds", 5))),
                    edges=bool(s.get("edges", raw.get("edges", True))),
                    label=str(s.get("label", "")),
                    q=s.get("q"),
                )
            )
        return BenchmarkConfig(tuple(settings), int(raw.get("master_seed", 0)), str(raw.get("name", "bench")))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def _derived_seed(master: int, *path: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_replicate(setting: Setting, master_seed: int, s_idx: int, rep: int) -> dict:
    """One replicate of one setting: ``{estimator: metrics-or-error}``."""
    dag = generate(setting.recipe(_derived_seed(master_seed, s_idx, rep, 0)))
    model = SemModel(dag, setting.error.sigma2, setting.error)
    X = sample_data(model, setting.n, make_rng(master_seed, s_idx, rep, 1))
    S = sample_covariance(X)
    truth = true_ranks(dag)
    fold_seed = _derived_seed(master_seed, s_idx, rep, 2)
    out = {}
    for name in setting.estimators:
        label, cfg = parse_estimator(name, setting.q)
        t0 = time.perf_counter()
        try:
            order = discover_order(S, cfg)
            cell = {"tau": kendall_tau(truth, ordering_to_ranks(order))}
            if setting.edges:
                em = edge_metrics(dag, select_edges(X, order, setting.folds, fold_seed))
                cell.update(recall=em.recall, flipped=em.flipped, fdr=em.fdr, hamming=float(em.hamming))
        except EqvarError as exc:
            cell = {"error": type(exc).__name__}
        cell["seconds"] = time.perf_counter() - t0
        out[label] = cell
    return out


def _task(args):
    return run_replicate(*args)


@dataclass
class ReportRow:
    setting: int
    label: str
    family: str
    p: int
    n: int
    estimator: str
    replicates: int
    failures: int
    tau_mean: float | None = None
    tau_se: float | None = None
    recall_mean: float | None = None
    recall_se: float | None = None
    flipped_mean: float | None = None
    flipped_se: float | None = None
    fdr_mean: float | None = None
    fdr_se: float | None = None
    hamming_mean: float | None = None
    hamming_se: float | None = None
    seconds: float | None = None


ROW_FIELDS = [f.name for f in fields(ReportRow)]
_INT_FIELDS = {"setting", "p", "n", "replicates", "failures"}
_STR_FIELDS = {"label", "family", "estimator"}


@dataclass
class BenchmarkReport:
    name: str
    master_seed: int
    rows: list[ReportRow]

    def columns(self, timing: bool) -> list[str]:
        return ROW_FIELDS if timing else [c for c in ROW_FIELDS if c != "seconds"]

    def to_csv(self, timing: bool = False) -> str:
        cols = self.columns(timing)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            d = asdict(r)
            w.writerow(["" if d[c] is None else (repr(d[c]) if isinstance(d[c], float) else d[c]) for c in cols])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, name: str = "bench", master_seed: int = 0) -> "BenchmarkReport":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            kw = {}
            for k, v in rec.items():
                if k in _INT_FIELDS:
                    kw[k] = int(v)
                elif k in _STR_FIELDS:
                    kw[k] = v
                else:
                    kw[k] = None if v == "" else float(v)
            rows.append(ReportRow(**kw))
        return cls(name, master_seed, rows)

    def to_json(self, timing: bool = False) -> str:
        cols = self.columns(timing)
        rows = [{c: asdict(r)[c] for c in cols} for r in self.rows]
        return json.dumps({"name": self.name, "master_seed": self.master_seed, "rows": rows}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BenchmarkReport":
        d = json.loads(text)
        return cls(d["name"], d["master_seed"], [ReportRow(**r) for r in d["rows"]])

    def to_markdown(self, timing: bool = False) -> str:
        return _markdown(self, timing)

    def cell(self, estimator: str, p: int, n: int, label: str | None = None) -> ReportRow:
        for r in self.rows:
            if r.estimator == estimator and r.p == p and r.n == n and (label is None or r.label == label):
                return r
        raise KeyError((estimator, p, n, label))


def _mean_se(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    a = np.asarray(values)
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return float(a.mean()), se


def aggregate(config: BenchmarkConfig, results: dict[tuple[int, int], dict]) -> BenchmarkReport:
    rows = []
    for s_idx, st in enumerate(config.settings):
        labels = [parse_estimator(e, st.q)[0] for e in st.estimators]
        for label in labels:
            cells = [results[(s_idx, r)][label] for r in range(st.replicates)]
            ok = [c for c in cells if "error" not in c]
            row = ReportRow(s_idx, st.label, st.family, st.p, st.n, label, st.replicates, len(cells) - len(ok))
            for m in METRICS:
                mean, se = _mean_se([c[m] for c in ok if m in c])
                setattr(row, f"{m}_mean", mean)
                setattr(row, f"{m}_se", se)
            row.seconds = float(np.mean([c["seconds"] for c in cells]))
            rows.append(row)
    return BenchmarkReport(config.name, config.master_seed, rows)


def run_benchmark(config: BenchmarkConfig, threads: int = 1) -> BenchmarkReport:
    """Run every replicate of every setting and aggregate per estimator."""
    tasks = [
        (st, config.master_seed, s_idx, rep)
        for s_idx, st in enumerate(config.settings)
        for rep in range(st.replicates)
    ]
    if threads <= 1:
        outs = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    results = {(t[2], t[3]): o for t, o in zip(tasks, outs)}
    return aggregate(config, results)


_MD_METRICS = (
    ("tau", "Kendall's τ", lambda v: f"{v:.2f}"),
    ("recall", "Recall %", lambda v: f"{100 * v:.0f}"),
    ("flipped", "Flipped %", lambda v: f"{100 * v:.0f}"),
    ("fdr", "FDR %", lambda v: f"{100 * v:.0f}"),
    ("hamming", "Hamming", lambda v: f"{v:.1f}"),
)


def _markdown(report: BenchmarkReport, timing: bool) -> str:
    """Markdown table: one row per (p, n), columns metric x estimator."""
    multi_label = len({r.label for r in report.rows}) > 1
    def col(r: ReportRow) -> str:
        return f"{r.estimator} {r.label}".strip() if multi_label else r.estimator
    cols = list(dict.fromkeys(col(r) for r in report.rows))
    keys = list(dict.fromkeys((r.p, r.n) for r in report.rows))
    cells = {((r.p, r.n), col(r)): r for r in report.rows}
    metrics = [m for m in _MD_METRICS if any(getattr(r, f"{m[0]}_mean") is not None for r in report.rows)]
    if not any(r.family == "peters" for r in report.rows):
        metrics = [m for m in metrics if m[0] != "hamming"]
    head = ["p", "n"] + [f"{title} {c}" for _, title, _ in metrics for c in cols]
    if timing:
        head += [f"sec {c}" for c in cols]
    lines = [f"### {report.name}", "", "| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for key in keys:
        vals = [str(key[0]), str(key[1])]
        for m, _, fmt in metrics:
            for c in cols:
                r = cells.get((key, c))
                v = None if r is None else getattr(r, f"{m}_mean")
                vals.append("–" if v is None else fmt(v))
        if timing:
            for c in cols:
                r = cells.get((key, c))
                vals.append("–" if r is None or r.seconds is None else f"{r.seconds:.2f}")
        lines.append("| " + " | ".join(vals) + " |")
    failures = sum(r.failures for r in report.rows)
    if failures:
        lines += ["", f"{failures} replicate(s) failed and were left out of the means."]
    return "\n".join(lines) + "\n"
