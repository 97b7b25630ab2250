"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
All logging goes to stderr; files are the only data outputs besides the
summary lines explicitly printed by each command.
"""

import logging
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import harness
from .errors import (ConfigError, DataError, NumericalError, ParseError,
                     SamplingError)
from .evaluation import evaluate_split
from .graph import (CountedTripleSet, DatasetSplit, KnowledgeGraph, Triple,
                    Vocabulary, load_triples, save_triples, split_for_session)
from .initializers import InitConfig, insert_entities, write_report
from .model import AnalogyEmbedding
from .synthetic import SyntheticKGSpec, generate_synthetic_kg
from .wordvec import load_word_vectors, save_word_vectors

logger = logging.getLogger("semkge")

METHOD_CHOICES = ("xavier", "informed_uniform", "es", "rs", "ers")


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug.")
def cli(verbose):
    """Train, extend and evaluate multi-relational graph embeddings."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _load_spec(path) -> SyntheticKGSpec:
    if path is None:
        return SyntheticKGSpec()
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return SyntheticKGSpec(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad generator spec: {exc}") from None


@cli.command("generate-data")
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None,
              help="YAML file overriding generator spec fields.")
@click.option("--seed", type=int, default=11, show_default=True)
@click.option("--out", required=True, type=click.Path(),
              help="Triple TSV output path.")
@click.option("--word-vectors-out", type=click.Path(), default=None,
              help="Also write the co-generated word vectors.")
@click.option("--categories-out", type=click.Path(), default=None,
              help="Also write entity categories as TSV.")
def generate_data(spec_path, seed, out, word_vectors_out, categories_out):
    """Generate a synthetic knowledge graph and write it as triple TSV."""
    spec = _load_spec(spec_path)
    result = generate_synthetic_kg(spec, seed)
    save_triples(result.kg, out)
    if word_vectors_out:
        save_word_vectors(result.word_vectors, word_vectors_out)
    if categories_out:
        with open(categories_out, "w", encoding="utf-8") as fh:
            for name in result.kg.entities.names:
                fh.write(f"{name}\t{result.categories[name]}\n")
    kg = result.kg
    click.echo(f"entities: {kg.n_entities}")
    click.echo(f"relations: {kg.n_relations}")
    click.echo(f"unique triples: {kg.triples.unique_count}")
    click.echo(f"total observations: {kg.triples.total_count}")


def _training_kwargs(config_path, overrides):
    kwargs = {}
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            kwargs.update(yaml.safe_load(fh) or {})
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return kwargs


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--out-model", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="YAML with AnalogyEmbedding parameters.")
@click.option("--dim", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--weight-decay", type=float, default=None)
@click.option("--negative-ratio", type=int, default=None)
@click.option("--epochs", "max_epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Training seed (random_state).")
@click.option("--split-seed", type=int, default=7, show_default=True,
              help="Seed of the train/valid/test partition.")
def train(data, out_model, config_path, seed, split_seed, **overrides):
    """Train an embedding on a triple TSV and save a checkpoint."""
    kg = load_triples(data)
    session = split_for_session(kg, set(), seed=split_seed)
    kwargs = _training_kwargs(config_path, overrides)
    model = AnalogyEmbedding(random_state=seed, **kwargs)
    model.fit(session.d0, entities=session.entities, relations=session.relations)
    model.save(out_model)
    logger.info("trained %d epochs; final mean loss %.6f", model.n_epochs_,
                model.history_[-1]["mean_loss"] if model.history_ else float("nan"))
    value = evaluate_split(model, session.d0, session.full_triples).mrr_star
    click.echo(f"test mrr_star: {100 * value:.2f}%")


def _read_names(path):
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()
                and not line.lstrip().startswith("#")]


def _triples_by_name(path, model, new_index):
    """Load a triple TSV and map names into the grown model's index space."""
    kg = load_triples(path)
    counts = {}
    for t, c in kg.triples.items():
        def resolve(name):
            if name in new_index:
                return new_index[name]
            if name in model.entity_vocab_:
                return model.entity_vocab_.index(name)
            raise DataError(f"entity {name!r} is neither in the model nor in "
                            "the insertion set")
        rel_name = kg.relations.name(t.relation)
        if rel_name not in model.relation_vocab_:
            raise DataError(f"relation {rel_name!r} is not in the model")
        key = Triple(resolve(kg.entities.name(t.head)),
                     model.relation_vocab_.index(rel_name),
                     resolve(kg.entities.name(t.tail)))
        counts[key] = counts.get(key, 0) + c
    return CountedTripleSet(counts)


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--method", required=True, type=click.Choice(METHOD_CHOICES))
@click.option("--ookb-list", required=True, type=click.Path(exists=True),
              help="File with one new entity name per line.")
@click.option("--word-vectors", type=click.Path(exists=True), default=None)
@click.option("--insert-triples", type=click.Path(exists=True), default=None,
              help="Triple TSV connecting new entities to known ones.")
@click.option("--out-model", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--es-k", type=int, default=8, show_default=True)
@click.option("--rs-k", type=int, default=18, show_default=True)
@click.option("--ers-k", type=int, default=9, show_default=True)
@click.option("--ers-preliminary-k", type=int, default=30, show_default=True)
def insert(model_path, method, ookb_list, word_vectors, insert_triples,
           out_model, report_path, seed, es_k, rs_k, ers_k, ers_preliminary_k):
    """Add new entities to a trained model with a chosen initializer."""
    model = AnalogyEmbedding.load(model_path)
    names = _read_names(ookb_list)
    if not names:
        raise DataError(f"no entity names found in {ookb_list}")
    new_index = {n: len(model.entity_vocab_) + i for i, n in enumerate(names)}
    triples = (_triples_by_name(insert_triples, model, new_index)
               if insert_triples else None)
    table = load_word_vectors(word_vectors) if word_vectors else None
    config = InitConfig(method=method, es_k=es_k, rs_k=rs_k, ers_k=ers_k,
                        ers_preliminary_k=ers_preliminary_k, seed=seed)
    grown, records = insert_entities(model, names, config,
                                     insert_triples=triples, word_vectors=table)
    grown.save(out_model)
    if report_path:
        write_report(records, report_path)
    used = {}
    for rec in records:
        used[rec.method_used] = used.get(rec.method_used, 0) + 1
    click.echo(f"inserted {len(names)} entities "
               + " ".join(f"{m}={n}" for m, n in sorted(used.items())))


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--split-seed", type=int, default=7, show_default=True,
              help="Must match the seed used when the training split was cut.")
@click.option("--restrict-entities", type=click.Path(exists=True), default=None,
              help="File of entity names; only queries inside the set count.")
@click.option("--queries", type=click.Choice(["test", "all"]), default="test",
              show_default=True)
@click.option("--weighting", type=click.Choice(["count", "uniform"]),
              default="count", show_default=True)
@click.option("--per-query-out", type=click.Path(), default=None,
              help="Write one row per evaluated (query, candidate) pair.")
def evaluate(model_path, data, split_seed, restrict_entities, queries,
             weighting, per_query_out):
    """Evaluate a model's ranking quality on a triple TSV."""
    model = AnalogyEmbedding.load(model_path)
    kg = load_triples(data)
    session = split_for_session(kg, set(), seed=split_seed)

    def to_model_space(counted):
        out = {}
        for t, c in counted.items():
            h = session.entities.name(t.head)
            tl = session.entities.name(t.tail)
            r = session.relations.name(t.relation)
            if h not in model.entity_vocab_ or tl not in model.entity_vocab_:
                raise DataError(f"entity {h!r} or {tl!r} missing from the model")
            if r not in model.relation_vocab_:
                raise DataError(f"relation {r!r} missing from the model")
            out[Triple(model.entity_vocab_.index(h),
                       model.relation_vocab_.index(r),
                       model.entity_vocab_.index(tl))] = c
        return CountedTripleSet(out)

    split = DatasetSplit(train=to_model_space(session.d0.train),
                         valid=to_model_space(session.d0.valid),
                         test=to_model_space(session.d0.test),
                         n_entities=len(model.entity_vocab_),
                         n_relations=len(model.relation_vocab_))
    full = to_model_space(session.full_triples)
    result = evaluate_split(model, split, full, weighting=weighting,
                            queries=queries)
    if restrict_entities:
        wanted = set(_read_names(restrict_entities))
        ids = {model.entity_vocab_.index(n) for n in wanted
               if n in model.entity_vocab_}
        value = result.restricted_mrr_star(ids)
        if value is None:
            raise DataError("no evaluated query lies inside the restriction set")
    else:
        value = result.mrr_star
    if per_query_out:
        import pandas as pd
        rows = [{"side": r.side,
                 "head": model.entity_vocab_.name(r.triple.head),
                 "relation": model.relation_vocab_.name(r.triple.relation),
                 "tail": model.entity_vocab_.name(r.triple.tail),
                 "candidate": model.entity_vocab_.name(r.candidate),
                 "r_g": r.r_g, "r_p": r.r_p, "weight": r.weight}
                for r in result.rows]
        pd.DataFrame(rows).to_csv(per_query_out, index=False,
                                  float_format="%.10g", lineterminator="\n")
    click.echo(f"mrr_star: {100 * value:.2f}%  ({result.n_pairs} query pairs)")


@cli.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--only", type=click.Choice(["immediate", "convergence",
                                           "corruption", "all"]),
              default="all", show_default=True)
@click.option("--jobs", type=int, default=None,
              help="Override the plan's replicate parallelism.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Override the plan's output directory.")
def experiment(plan_path, only, jobs, out_dir):
    """Run the experiment suite described by a YAML plan."""
    plan = harness.load_plan(plan_path)
    if jobs is not None:
        plan.jobs = jobs
    if out_dir is not None:
        plan.output_dir = out_dir
    if only in ("immediate", "all"):
        summary = harness.experiment_immediate(plan)
        click.echo("immediate epoch-0 mrr_star (percent):")
        _echo_frame(summary, {"mean_mrr_star": 100.0})
    if only in ("convergence", "all"):
        summary = harness.experiment_convergence(plan)
        click.echo("epochs to convergence:")
        _echo_frame(summary)
    if only in ("corruption", "all"):
        summary = harness.experiment_corruption(plan)
        click.echo("old-entity mrr_star drop after insertion (percent):")
        _echo_frame(summary, {"pre_mrr_star": 100.0, "mean_drop": 100.0,
                              "std_drop": 100.0, "mean_post": 100.0})


@cli.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--k-values", default="2,4,8,16,32", show_default=True,
              help="Comma-separated indicator-set sizes.")
@click.option("--jobs", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def sweep(plan_path, k_values, jobs, out_dir):
    """Sweep the indicator-set size for the similarity initializers."""
    plan = harness.load_plan(plan_path)
    if jobs is not None:
        plan.jobs = jobs
    if out_dir is not None:
        plan.output_dir = out_dir
    try:
        ks = [int(v) for v in k_values.split(",") if v.strip()]
    except ValueError:
        raise click.UsageError(f"bad --k-values {k_values!r}")
    if not ks:
        raise click.UsageError("--k-values is empty")
    summary = harness.sensitivity_sweep(plan, ks)
    click.echo("indicator-set size sweep:")
    _echo_frame(summary, {"mean_immediate_mrr_star": 100.0})


def _echo_frame(frame, percent_columns=None):
    shown = frame.copy()
    for col, scale in (percent_columns or {}).items():
        if col in shown.columns:
            shown[col] = shown[col] * scale
    click.echo(shown.to_string(index=False, float_format=lambda v: f"{v:.2f}"))


@cli.command()
@click.option("--results", "results_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
def report(results_dir):
    """Print the summary tables found in an experiment output directory."""
    import pandas as pd
    results = Path(results_dir)
    found = False
    for name, title, percents in (
            ("immediate_summary.csv", "immediate epoch-0 mrr_star",
             {"mean_mrr_star": 100.0, "std_mrr_star": 100.0}),
            ("convergence_summary.csv", "epochs to convergence", {}),
            ("corruption_summary.csv", "old-entity corruption",
             {"pre_mrr_star": 100.0, "mean_drop": 100.0, "std_drop": 100.0,
              "mean_post": 100.0}),
            ("sweep_summary.csv", "indicator-set size sweep",
             {"mean_immediate_mrr_star": 100.0})):
        path = results / name
        if path.exists():
            found = True
            click.echo(f"== {title} ==")
            _echo_frame(pd.read_csv(path), percents)
    if not found:
        raise DataError(f"no summary files found under {results_dir}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        return 1
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (ParseError, DataError, ConfigError, SamplingError,
            FileNotFoundError) as exc:
        logger.error("%s", exc)
        return 2
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
