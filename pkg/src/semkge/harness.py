"""End-to-end experiment protocol over two learning sessions.

A run starts from a knowledge graph (generated or loaded), withholds a set
of new entities, trains a base embedding on the remaining graph, inserts
the withheld entities with a configured initialization method, and
fine-tunes on the full graph at a reduced learning rate while logging the
ranking metric each epoch.  Three experiment drivers aggregate such runs:
immediate inference quality right after insertion, epochs needed to come
within a threshold of a jointly trained reference model, and corruption of
old-entity inference when entities from a second (deployment) graph are
inserted.  A sensitivity sweep varies the indicator-set size.

Replicates are independent and deterministic: every random stream is
derived from the plan seed with a fixed spawn key, so identical plans
produce byte-identical result files regardless of parallelism.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from joblib import Parallel, delayed

from .errors import ConfigError, DataError
from .evaluation import evaluate_split
from .graph import (CountedTripleSet, DatasetSplit, KnowledgeGraph, Triple,
                    Vocabulary, load_triples, split_for_session)
from .initializers import InitConfig, make_initializer
from .model import AnalogyEmbedding
from .synthetic import (SyntheticKGSpec, extend_for_deployment,
                        generate_synthetic_kg)
from .wordvec import WordVectorTable, load_word_vectors

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.10g"

METRIC_COLUMNS = ["epoch", "method", "ookb_size", "replicate", "mrr_star",
                  "mrr_star_old_entities", "mrr_star_new_entities"]


@dataclass
class SessionState:
    """One incremental step: the datasets and model of session ``n``."""

    n: int
    dataset: DatasetSplit
    model: AnalogyEmbedding
    ookb: tuple
    insert_triples: CountedTripleSet


@dataclass
class TrainSettings:
    dim: int = 50
    scalar_count: int = None
    learning_rate: float = 0.1
    weight_decay: float = 3e-3
    negative_ratio: int = 9
    max_epochs: int = 150
    batch_size: int = 128
    early_stop_patience: int = 0       # 0 disables validation early stopping
    early_stop_min_delta: float = 0.003
    early_stop_min_epochs: int = 20

    def estimator(self, random_state) -> AnalogyEmbedding:
        return AnalogyEmbedding(dim=self.dim, scalar_count=self.scalar_count,
                                learning_rate=self.learning_rate,
                                weight_decay=self.weight_decay,
                                negative_ratio=self.negative_ratio,
                                max_epochs=self.max_epochs,
                                batch_size=self.batch_size,
                                random_state=int(random_state))


@dataclass
class CorruptionSettings:
    extra_objects: int = 40
    n_insert: int = 10
    replicates: int = 30
    log_epochs: int = 25
    min_observations: int = 6


@dataclass
class SweepSettings:
    sizes: tuple = (5,)
    replicates: int = 5


@dataclass
class DatasetSource:
    kind: str = "generated"            # "generated" or "files"
    data_seed: int = 11
    spec: SyntheticKGSpec = field(default_factory=SyntheticKGSpec)
    triples: str = None
    word_vectors: str = None

    def load(self):
        """Returns (KnowledgeGraph, word table or None, categories or None)."""
        if self.kind == "generated":
            out = generate_synthetic_kg(self.spec, self.data_seed)
            return out.kg, out.word_vectors, out.categories
        if self.kind == "files":
            if not self.triples:
                raise ConfigError("dataset.kind=files requires a triples path")
            kg = load_triples(self.triples)
            table = load_word_vectors(self.word_vectors) if self.word_vectors else None
            return kg, table, None
        raise ConfigError(f"unknown dataset kind {self.kind!r}")


@dataclass
class ExperimentPlan:
    seed: int = 1234
    output_dir: str = "results"
    dataset: DatasetSource = field(default_factory=DatasetSource)
    methods: tuple = ("xavier", "informed_uniform", "es", "rs", "ers")
    ookb_sizes: tuple = tuple(range(1, 11))
    replicates: int = 30
    convergence_threshold: float = 8.0   # metric percentage points
    fine_tune_learning_rate: float = 2e-3
    fine_tune_max_epochs: int = 150
    stop_at_convergence: bool = True
    split_fractions: tuple = (0.8, 0.1, 0.1)
    ookb_min_observations: int = 6
    ookb_categories: tuple = ("objects",)
    eval_weighting: str = "count"
    train: TrainSettings = field(default_factory=TrainSettings)
    init: InitConfig = field(default_factory=lambda: InitConfig(method="ers"))
    corruption: CorruptionSettings = field(default_factory=CorruptionSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    jobs: int = 1

    def __post_init__(self):
        for m in self.methods:
            if m not in ("xavier", "informed_uniform", "es", "rs", "ers", "joint"):
                raise ConfigError(f"unknown method {m!r} in plan")
        if self.replicates < 1 or any(s < 0 for s in self.ookb_sizes):
            raise ConfigError("replicates must be >= 1 and sizes >= 0")

    def init_config(self, method, seed, k=None) -> InitConfig:
        kwargs = {"method": method, "es_k": self.init.es_k,
                  "rs_k": self.init.rs_k, "ers_k": self.init.ers_k,
                  "ers_preliminary_k": self.init.ers_preliminary_k,
                  "seed": int(seed)}
        if k is not None:
            if method == "es":
                kwargs["es_k"] = k
            elif method == "rs":
                kwargs["rs_k"] = k
            elif method == "ers":
                kwargs["ers_k"] = k
                kwargs["ers_preliminary_k"] = max(kwargs["ers_preliminary_k"], k)
        return InitConfig(**kwargs)


def _subseed(*key) -> int:
    """Stable 32-bit seed derived from a mixed key."""
    parts = []
    for item in key:
        if isinstance(item, str):
            parts.extend(ord(ch) for ch in item)
            parts.append(1)
        else:
            parts.append(int(item) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def _update(obj, data: dict, path: str):
    for key, value in data.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown key {path}{key}")
        setattr(obj, key, value)
    return obj


def load_plan(path) -> ExperimentPlan:
    """Read a YAML experiment plan; unknown keys are rejected."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return plan_from_dict(data)


def plan_from_dict(data: dict) -> ExperimentPlan:
    data = dict(data)
    plan = ExperimentPlan()
    if "dataset" in data:
        ds = dict(data.pop("dataset"))
        spec_data = ds.pop("spec", None)
        source = DatasetSource()
        if spec_data:
            spec_kwargs = {k: tuple(v) if isinstance(v, list) else v
                           for k, v in spec_data.items()}
            source.spec = SyntheticKGSpec(**spec_kwargs)
        _update(source, ds, "dataset.")
        plan.dataset = source
    for section, target in (("train", TrainSettings()),
                            ("corruption", CorruptionSettings()),
                            ("sweep", SweepSettings())):
        if section in data:
            setattr(plan, section, _update(target, dict(data.pop(section)),
                                           f"{section}."))
    if "init" in data:
        plan.init = InitConfig(method="ers", **dict(data.pop("init")))
    for key in ("methods", "ookb_sizes", "split_fractions", "ookb_categories"):
        if key in data and isinstance(data[key], list):
            data[key] = tuple(data[key])
    _update(plan, data, "")
    plan.__post_init__()
    if isinstance(plan.sweep.sizes, list):
        plan.sweep.sizes = tuple(plan.sweep.sizes)
    return plan


# -- shared machinery ----------------------------------------------------


def eligible_ookb_entities(kg: KnowledgeGraph, min_observations: int,
                           categories=None, category_map=None) -> list:
    """Entities allowed to be withheld: observed at least ``min_observations``
    times, optionally restricted to the given category names."""
    totals = np.zeros(kg.n_entities, dtype=np.int64)
    for t, c in kg.triples.items():
        totals[t.head] += c
        totals[t.tail] += c
    out = []
    for e in range(kg.n_entities):
        if totals[e] < min_observations:
            continue
        if categories and category_map is not None:
            if category_map.get(kg.entities.name(e)) not in categories:
                continue
        out.append(e)
    if not out:
        raise DataError("no entities satisfy the withholding eligibility filter")
    return out


class _ValidationTracker:
    """Stops training when the validation metric stops improving and rolls
    the model back to the best epoch's parameters."""

    def __init__(self, split, full_kg, settings: TrainSettings, weighting):
        self.valid_view = DatasetSplit(train=split.train, valid=split.valid,
                                       test=split.valid,
                                       n_entities=split.n_entities,
                                       n_relations=split.n_relations)
        self.full_kg = full_kg
        self.settings = settings
        self.weighting = weighting
        self.best_value = -np.inf
        self.best_epoch = 0
        self.best_params = None

    def __call__(self, epoch, model):
        if not len(self.valid_view.test):
            return False
        value = evaluate_split(model, self.valid_view, self.full_kg,
                               weighting=self.weighting).mrr_star
        if value > self.best_value + self.settings.early_stop_min_delta:
            self.best_value = value
            self.best_epoch = epoch
            self.best_params = (model.entity_vectors_.copy(),
                                model.relation_params_.copy())
        return (epoch >= self.settings.early_stop_min_epochs
                and epoch - self.best_epoch >= self.settings.early_stop_patience)

    def restore(self, model):
        if self.best_params is not None:
            model.entity_vectors_, model.relation_params_ = self.best_params


def train_session0(split, full_kg, plan: ExperimentPlan, entities, relations,
                   random_state) -> AnalogyEmbedding:
    model = plan.train.estimator(random_state)
    tracker = (_ValidationTracker(split, full_kg, plan.train, plan.eval_weighting)
               if plan.train.early_stop_patience else None)
    model.fit(split, entities=entities, relations=relations, callback=tracker)
    if tracker is not None:
        tracker.restore(model)
    return model


def epochs_to_convergence(metric_log, joint_reference: float,
                          threshold_points: float = 8.0, cap: int = 150):
    """First epoch whose metric is within ``threshold_points`` (percentage
    points, metric in [0, 1]) of the reference; None when never reached.

    ``metric_log`` is a sequence of (epoch, value) pairs including epoch 0.
    """
    target = joint_reference - threshold_points / 100.0
    for epoch, value in sorted(metric_log):
        if epoch > cap:
            break
        if value >= target:
            return int(epoch)
    return None


@dataclass
class SessionRun:
    """Output of one method run inside a replicate."""

    method: str
    immediate: float
    immediate_old: float
    immediate_new: float
    metric_rows: list          # per-epoch dicts in the metric CSV schema
    epochs_to_convergence: int = None
    converged: bool = None
    final: float = None


def run_incremental_session(model0, session_split, method_cfg: InitConfig,
                            word_vectors, plan: ExperimentPlan,
                            fine_tune_epochs: int, joint_reference=None,
                            extra: dict = None) -> SessionRun:
    """Insert the withheld entities into a trained base model, measure the
    metric before any training, then fine-tune on the full dataset.

    Stops fine-tuning early once within the convergence threshold of
    ``joint_reference`` when the plan says so.  ``extra`` keys are copied
    into every metric row.
    """
    ss = session_split
    names = [ss.entities.name(i) for i in ss.ookb_ids]
    initializer = make_initializer(method_cfg)
    model1, records = initializer.insert(model0, names,
                                         insert_triples=ss.insert_triples,
                                         word_vectors=word_vectors)
    model1.entity_vocab_ = ss.entities
    old_ids = range(ss.n_known)
    new_ids = set(ss.ookb_ids)

    def measure(model):
        res = evaluate_split(model, ss.d1, ss.full_triples,
                             weighting=plan.eval_weighting)
        old = res.restricted_mrr_star(old_ids)
        new = res.touching_mrr_star(new_ids)
        return res.mrr_star, old, new

    base = dict(extra or {})
    rows = []
    value, old, new = measure(model1)
    rows.append({**base, "epoch": 0, "method": method_cfg.method,
                 "mrr_star": value, "mrr_star_old_entities": old,
                 "mrr_star_new_entities": new})
    immediate = (value, old, new)
    log = [(0, value)]

    if fine_tune_epochs > 0 and len(ss.d1.train):
        target = (None if joint_reference is None
                  else joint_reference - plan.convergence_threshold / 100.0)
        tuned = model1.copy()
        tuned.set_params(warm_start=True,
                         learning_rate=plan.fine_tune_learning_rate,
                         max_epochs=fine_tune_epochs)

        def callback(epoch, m):
            v, o, n = measure(m)
            rows.append({**base, "epoch": epoch, "method": method_cfg.method,
                         "mrr_star": v, "mrr_star_old_entities": o,
                         "mrr_star_new_entities": n})
            log.append((epoch, v))
            return (plan.stop_at_convergence and target is not None
                    and v >= target)

        tuned.fit(ss.d1, callback=callback)

    run = SessionRun(method=method_cfg.method, immediate=immediate[0],
                     immediate_old=immediate[1], immediate_new=immediate[2],
                     metric_rows=rows)
    run.final = log[-1][1]
    if joint_reference is not None:
        epoch = epochs_to_convergence(log, joint_reference,
                                      plan.convergence_threshold,
                                      cap=fine_tune_epochs)
        run.converged = epoch is not None
        run.epochs_to_convergence = epoch if epoch is not None else fine_tune_epochs
    return run


# -- replicate drivers ---------------------------------------------------


def _replicate_task(plan, kg, word_vectors, categories, size, rep,
                    fine_tune_epochs, with_joint, k_override=None,
                    methods=None):
    """One (ookb size, replicate) unit: shared withheld set and base model,
    then every method."""
    eligible = eligible_ookb_entities(kg, plan.ookb_min_observations,
                                      plan.ookb_categories, categories)
    rng = np.random.default_rng(_subseed(plan.seed, "ookb", size, rep))
    ookb = sorted(int(e) for e in rng.choice(eligible, size=size, replace=False))
    ss = split_for_session(kg, set(ookb), seed=_subseed(plan.seed, "split", size, rep),
                           fractions=plan.split_fractions)
    known_vocab = Vocabulary(ss.entities.names[:ss.n_known])
    model0 = train_session0(ss.d0, ss.full_triples, plan, known_vocab,
                            ss.relations, _subseed(plan.seed, "theta0", size, rep))

    joint_reference = None
    joint_epochs = None
    if with_joint:
        joint = train_session0(ss.d1, ss.full_triples, plan, ss.entities,
                               ss.relations, _subseed(plan.seed, "joint", size, rep))
        joint_reference = evaluate_split(joint, ss.d1, ss.full_triples,
                                         weighting=plan.eval_weighting).mrr_star
        joint_epochs = joint.n_epochs_

    runs = []
    for mi, method in enumerate(methods or plan.methods):
        extra = {"ookb_size": size, "replicate": rep}
        if method == "joint":
            value = joint_reference
            if value is None:
                raise ConfigError("method 'joint' needs a joint reference model")
            runs.append(SessionRun(method="joint", immediate=value,
                                   immediate_old=None, immediate_new=None,
                                   metric_rows=[{**extra, "epoch": 0,
                                                 "method": "joint",
                                                 "mrr_star": value,
                                                 "mrr_star_old_entities": None,
                                                 "mrr_star_new_entities": None}],
                                   epochs_to_convergence=0, converged=True,
                                   final=value))
            continue
        cfg = plan.init_config(method, _subseed(plan.seed, "init", size, rep, mi),
                               k=k_override)
        runs.append(run_incremental_session(
            model0, ss, cfg, word_vectors, plan, fine_tune_epochs,
            joint_reference=joint_reference, extra=extra))
    ookb_names = [kg.entities.name(e) for e in ookb]
    return {"size": size, "rep": rep, "ookb": ookb_names, "runs": runs,
            "joint_mrr_star": joint_reference, "joint_epochs": joint_epochs}


def _run_calls(plan, calls):
    """Run (function, args, kwargs) triples preserving order; parallel over
    replicates when the plan allows."""
    if plan.jobs > 1:
        return Parallel(n_jobs=plan.jobs)(
            delayed(f)(*args, **kwargs) for f, args, kwargs in calls)
    return [f(*args, **kwargs) for f, args, kwargs in calls]


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT,
                 lineterminator="\n")


def _metric_frame(results) -> pd.DataFrame:
    rows = []
    for res in results:
        for run in res["runs"]:
            rows.extend(run.metric_rows)
    frame = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    return frame.sort_values(["method", "ookb_size", "replicate", "epoch"],
                             kind="stable").reset_index(drop=True)


def _ookb_frame(results) -> pd.DataFrame:
    rows = [{"ookb_size": r["size"], "replicate": r["rep"],
             "entities": ";".join(r["ookb"])} for r in results]
    return pd.DataFrame(rows, columns=["ookb_size", "replicate", "entities"]) \
        .sort_values(["ookb_size", "replicate"], kind="stable").reset_index(drop=True)


def experiment_immediate(plan: ExperimentPlan, out_dir=None) -> pd.DataFrame:
    """Epoch-0 metric per method and withheld-set size (no fine-tuning)."""
    kg, word_vectors, categories = plan.dataset.load()
    out = Path(out_dir if out_dir is not None else plan.output_dir)
    calls = [(_replicate_task, (plan, kg, word_vectors, categories, size, rep,
                                0, False), {})
             for size in plan.ookb_sizes for rep in range(plan.replicates)]
    results = _run_calls(plan, calls)

    _write_csv(_metric_frame(results), out / "immediate_runs.csv")
    _write_csv(_ookb_frame(results), out / "ookb_sets.csv")

    rows = []
    for res in results:
        for run in res["runs"]:
            rows.append({"method": run.method, "ookb_size": res["size"],
                         "replicate": res["rep"], "mrr_star": run.immediate,
                         "mrr_star_old_entities": run.immediate_old,
                         "mrr_star_new_entities": run.immediate_new})
    frame = pd.DataFrame(rows).sort_values(
        ["method", "ookb_size", "replicate"], kind="stable").reset_index(drop=True)
    summary = (frame.groupby(["method", "ookb_size"], as_index=False)
               .agg(n=("mrr_star", "size"), mean_mrr_star=("mrr_star", "mean"),
                    std_mrr_star=("mrr_star", "std"))
               .fillna({"std_mrr_star": 0.0}))
    _write_csv(summary, out / "immediate_summary.csv")
    _write_curve(summary, out / "immediate_vs_size.dat",
                 index="ookb_size", value="mean_mrr_star")
    return summary


def experiment_convergence(plan: ExperimentPlan, out_dir=None) -> pd.DataFrame:
    """Epochs to come within the threshold of the joint model, per method."""
    kg, word_vectors, categories = plan.dataset.load()
    out = Path(out_dir if out_dir is not None else plan.output_dir)
    calls = [(_replicate_task, (plan, kg, word_vectors, categories, size, rep,
                                plan.fine_tune_max_epochs, True), {})
             for size in plan.ookb_sizes for rep in range(plan.replicates)]
    results = _run_calls(plan, calls)

    metric_frame = _metric_frame(results)
    _write_csv(metric_frame, out / "convergence_epoch_log.csv")
    _write_csv(_ookb_frame(results), out / "ookb_sets_convergence.csv")

    rows = []
    for res in results:
        for run in res["runs"]:
            rows.append({"method": run.method, "ookb_size": res["size"],
                         "replicate": res["rep"],
                         "joint_mrr_star": res["joint_mrr_star"],
                         "immediate_mrr_star": run.immediate,
                         "final_mrr_star": run.final,
                         "epochs_to_convergence": run.epochs_to_convergence,
                         "converged": run.converged})
    frame = pd.DataFrame(rows).sort_values(
        ["method", "ookb_size", "replicate"], kind="stable").reset_index(drop=True)
    _write_csv(frame, out / "convergence_runs.csv")
    summary = (frame.groupby("method", as_index=False)
               .agg(n=("epochs_to_convergence", "size"),
                    mean_epochs=("epochs_to_convergence", "mean"),
                    std_epochs=("epochs_to_convergence", "std"),
                    n_not_converged=("converged", lambda s: int((~s).sum())))
               .fillna({"std_epochs": 0.0}))
    _write_csv(summary, out / "convergence_summary.csv")
    _write_learning_curves(metric_frame, plan, out)
    return summary


def _write_curve(summary, path, index, value):
    pivot = summary.pivot_table(index=index, columns="method", values=value,
                                aggfunc="mean")
    pivot = pivot.sort_index()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + index + " " + " ".join(str(c) for c in pivot.columns) + "\n")
        for idx, row in pivot.iterrows():
            cells = " ".join("nan" if pd.isna(v) else CSV_FLOAT_FORMAT % v
                             for v in row.values)
            fh.write(f"{idx} {cells}\n")


def _write_learning_curves(metric_frame, plan, out: Path):
    for size in sorted(set(metric_frame["ookb_size"].dropna())):
        sub = metric_frame[metric_frame["ookb_size"] == size]
        mean = (sub.groupby(["epoch", "method"], as_index=False)
                .agg(mrr_star=("mrr_star", "mean")))
        _write_curve(mean, out / f"learning_curve_size{int(size)}.dat",
                     index="epoch", value="mrr_star")


def _corruption_replicate(plan, kg_a, split_a, model_a, pre_value, kg_b,
                          word_vectors, rep):
    """Insert deployment-graph entities into the base model and log the
    old-entity metric before and during fine-tuning."""
    cs = plan.corruption
    known = set(kg_a.entities.names)
    degree = {}
    for t, c in kg_b.triples.items():
        h = kg_b.entities.name(t.head)
        tl = kg_b.entities.name(t.tail)
        if (h in known) != (tl in known):
            new_name = tl if h in known else h
            degree[new_name] = degree.get(new_name, 0) + c
    candidates = sorted(n for n, c in degree.items()
                        if c >= cs.min_observations and n not in known)
    if len(candidates) < cs.n_insert:
        raise DataError(f"deployment graph offers only {len(candidates)} "
                        f"insertable entities")
    rng = np.random.default_rng(_subseed(plan.seed, "corruption", rep))
    chosen = sorted(rng.choice(candidates, size=cs.n_insert, replace=False))

    n_known = kg_a.n_entities
    new_ids = {name: n_known + j for j, name in enumerate(chosen)}
    added = {}
    for t, c in kg_b.triples.items():
        h = kg_b.entities.name(t.head)
        tl = kg_b.entities.name(t.tail)
        touches_new = h in new_ids or tl in new_ids
        inside = (h in known or h in new_ids) and (tl in known or tl in new_ids)
        if touches_new and inside:
            hi = new_ids.get(h, kg_a.entities.index(h) if h in known else None)
            ti = new_ids.get(tl, kg_a.entities.index(tl) if tl in known else None)
            rel = kg_a.relations.index(kg_b.relations.name(t.relation))
            key = Triple(hi, rel, ti)
            added[key] = added.get(key, 0) + c
    added = CountedTripleSet(added)
    insert_triples = CountedTripleSet(
        {t: c for t, c in added.items()
         if (t.head >= n_known) != (t.tail >= n_known)})

    d1 = DatasetSplit(train=split_a.d0.train.merged_with(added),
                      valid=split_a.d0.valid, test=split_a.d0.test,
                      n_entities=n_known + cs.n_insert,
                      n_relations=kg_a.n_relations)
    session = dataclasses.replace(
        split_a, entities=kg_a.entities.extended(chosen), d1=d1,
        insert_triples=insert_triples, n_known=n_known)

    runs = []
    for mi, method in enumerate(plan.methods):
        if method == "joint":
            continue
        cfg = plan.init_config(method, _subseed(plan.seed, "corruption-init",
                                                rep, mi))
        run = run_incremental_session(
            model_a, session, cfg, word_vectors, plan, cs.log_epochs,
            joint_reference=None,
            extra={"ookb_size": cs.n_insert, "replicate": rep})
        runs.append(run)
    return {"size": cs.n_insert, "rep": rep, "ookb": list(chosen),
            "runs": runs, "pre_mrr_star": pre_value, "joint_mrr_star": None,
            "joint_epochs": None}


def experiment_corruption(plan: ExperimentPlan, out_dir=None) -> pd.DataFrame:
    """Old-entity metric drop when inserting entities from a second graph.

    The base model is trained once on the full first graph; each replicate
    draws a fresh subset of deployment entities.  The reported metric is
    restricted to queries about the original entities throughout.
    """
    if plan.dataset.kind != "generated":
        raise ConfigError("the corruption experiment needs the generated dataset")
    out = Path(out_dir if out_dir is not None else plan.output_dir)
    base = generate_synthetic_kg(plan.dataset.spec, plan.dataset.data_seed)
    deployment_spec = extend_for_deployment(plan.dataset.spec,
                                            plan.corruption.extra_objects)
    deployed = generate_synthetic_kg(deployment_spec,
                                     _subseed(plan.seed, "deployment-data"))
    kg_a = base.kg
    split_a = split_for_session(kg_a, set(),
                                seed=_subseed(plan.seed, "corruption-split"),
                                fractions=plan.split_fractions)
    model_a = train_session0(split_a.d0, split_a.full_triples, plan,
                             split_a.entities, split_a.relations,
                             _subseed(plan.seed, "corruption-theta0"))
    pre_value = evaluate_split(model_a, split_a.d0, split_a.full_triples,
                               weighting=plan.eval_weighting).mrr_star

    calls = [(_corruption_replicate, (plan, kg_a, split_a, model_a, pre_value,
                                      deployed.kg, deployed.word_vectors, rep), {})
             for rep in range(plan.corruption.replicates)]
    results = _run_calls(plan, calls)

    _write_csv(_metric_frame(results), out / "corruption_epoch_log.csv")
    rows = []
    for res in results:
        for run in res["runs"]:
            rows.append({"method": run.method, "replicate": res["rep"],
                         "pre_mrr_star": res["pre_mrr_star"],
                         "post_mrr_star": run.immediate_old,
                         "drop": res["pre_mrr_star"] - run.immediate_old})
    frame = pd.DataFrame(rows).sort_values(["method", "replicate"],
                                           kind="stable").reset_index(drop=True)
    _write_csv(frame, out / "corruption_runs.csv")
    summary = (frame.groupby("method", as_index=False)
               .agg(n=("drop", "size"), mean_drop=("drop", "mean"),
                    std_drop=("drop", "std"),
                    mean_post=("post_mrr_star", "mean"))
               .fillna({"std_drop": 0.0}))
    summary.insert(1, "pre_mrr_star", pre_value)
    _write_csv(summary, out / "corruption_summary.csv")
    return summary


def sensitivity_sweep(plan: ExperimentPlan, k_values, out_dir=None) -> pd.DataFrame:
    """Immediate metric and epochs-to-convergence as functions of the
    indicator-set size, for the similarity-based methods."""
    kg, word_vectors, categories = plan.dataset.load()
    out = Path(out_dir if out_dir is not None else plan.output_dir)
    methods = [m for m in plan.methods if m in ("es", "rs", "ers")]
    if not methods:
        raise ConfigError("the sweep needs at least one of es/rs/ers in methods")

    calls = []
    meta = []
    for k in k_values:
        for size in plan.sweep.sizes:
            for rep in range(plan.sweep.replicates):
                calls.append((_replicate_task,
                              (plan, kg, word_vectors, categories, size, rep,
                               plan.fine_tune_max_epochs, True),
                              {"k_override": int(k), "methods": methods}))
                meta.append(k)
    results = _run_calls(plan, calls)

    rows = []
    for k, res in zip(meta, results):
        for run in res["runs"]:
            rows.append({"method": run.method, "k": k, "ookb_size": res["size"],
                         "replicate": res["rep"], "immediate_mrr_star": run.immediate,
                         "epochs_to_convergence": run.epochs_to_convergence,
                         "converged": run.converged})
    frame = pd.DataFrame(rows).sort_values(["method", "k", "ookb_size",
                                            "replicate"], kind="stable")
    frame = frame.reset_index(drop=True)
    _write_csv(frame, out / "sweep_runs.csv")
    summary = (frame.groupby(["method", "k"], as_index=False)
               .agg(n=("immediate_mrr_star", "size"),
                    mean_immediate_mrr_star=("immediate_mrr_star", "mean"),
                    mean_epochs=("epochs_to_convergence", "mean")))
    _write_csv(summary, out / "sweep_summary.csv")
    _write_curve(summary, out / "sweep_immediate_vs_k.dat", index="k",
                 value="mean_immediate_mrr_star")
    _write_curve(summary, out / "sweep_epochs_vs_k.dat", index="k",
                 value="mean_epochs")
    return summary
