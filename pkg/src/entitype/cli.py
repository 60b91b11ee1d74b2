"""Pipeline orchestrator: every stage as a subcommand over one config file.

A run directory collects the artifacts of one configuration:

    rewritten/    token streams (entity-id and notable-type rewrites)
    embeddings/   trained embedding tables
    datasets/     featurized context datasets per split
    models/       MLP checkpoints
    scores/       per-model score TSVs for dev and test
    reports/      evaluation reports and the context-size sweep table

Artifacts are written atomically (temp file + rename) and carry a sidecar
``<name>.manifest.json`` recording the config hash, the input hashes and
the package version. Re-running a command in a directory whose manifests
were produced by a different config is refused; use a fresh run directory.

Exit codes: 0 success, 2 validation failure (bad config, missing
prerequisite, invariant violation), 1 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import entity_mention_counts, preprocess_line, read_corpus, rewrite_corpus, \
    sentence_to_json, write_corpus
from .embeddings import EmbeddingTable, SkipgramModel
from .evaluation import evaluate_model, precision_at_1, select_thresholds, \
    classify_and_score
from .kb import load_kb, save_entities, save_types, split_entities
from .models import ContextExamples, ContextModel, GlobalModel, ScoreMatrix, \
    build_distant_dataset, joint_scores, mft_scores, sample_eval_contexts, \
    sample_train_contexts, truncate_features
from .neural import MultiLabelMLP
from .syngen import SynSpec, generate
from .validation import ValidationError

logger = logging.getLogger("entitype")

MANIFEST_VERSION = 1
MODELS = ("gm", "cm", "jm", "mft")


def _bool(text):
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text):
    return tuple(float(x) for x in text.split(","))


# key -> (parser, default); None default means the key must be set when used
CONFIG_SCHEMA = {
    "corpus": (str, None),
    "kb_entities": (str, None),
    "kb_types": (str, None),
    "run_dir": (str, None),
    "seed": (int, 0),
    "deterministic": (_bool, True),
    "workers": (int, 1),
    "split_ratios": (_floats, (0.5, 0.2, 0.3)),
    # embeddings
    "entity_dim": (int, 200),
    "unit_dim": (int, 100),
    "embed_window": (int, 5),
    "embed_negatives": (int, 5),
    "embed_epochs": (int, 5),
    "embed_min_count": (int, 5),
    "embed_subsample": (float, 0.0),
    "embed_lr": (float, 0.025),
    # context features
    "context_k": (int, 4),
    "context_l": (int, 5),
    # global model training
    "gm_hidden": (int, 200),
    "gm_lr": (float, 0.1),
    "gm_batch_size": (int, 128),
    "gm_max_epochs": (int, 100),
    "gm_patience": (int, 3),
    # context model training
    "cm_hidden": (int, 300),
    "cm_lr": (float, 0.1),
    "cm_batch_size": (int, 128),
    "cm_max_epochs": (int, 100),
    "cm_patience": (int, 3),
    "cm_aggregate": (str, "mean"),
    "adagrad_epsilon": (float, 1e-8),
    "early_stop_metric": (str, "loss"),
    # context sampling
    "sample_train": (_bool, True),
    "sample_eval": (_bool, True),
    "train_min_per_type": (int, 10_000),
    "train_max_per_type": (int, 20_000),
    "test_contexts_per_entity": (int, 300),
    "dev_contexts_per_entity": (int, 200),
    # evaluation slices
    "head_entity_min_freq": (int, 100),
    "tail_entity_max_freq": (int, 5),
    "head_type_min_train": (int, 3000),
    "tail_type_max_train": (int, 200),
    # synthetic corpus generation
    "syn_num_types": (int, 8),
    "syn_entities_per_type": (int, 200),
    "syn_types_per_entity": (_floats, (0.6, 0.25, 0.15)),
    "syn_vocab_per_type": (int, 40),
    "syn_background_vocab": (int, 80),
    "syn_informativeness": (float, 0.7),
    "syn_mentions_mean": (float, 50.0),
    "syn_mentions_distribution": (str, "poisson"),
    "syn_words_per_side": (int, 4),
    "syn_positional_signal": (_bool, False),
    "syn_inner_positions": (int, 2),
}


class RunConfig:
    """Flat key-value configuration with schema-checked types."""

    def __init__(self, values):
        self.values = values

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None

    def require(self, *keys):
        for key in keys:
            if self.values.get(key) is None:
                raise ValidationError(f"config key {key!r} is required for this command")

    def canonical(self):
        lines = []
        for key in sorted(self.values):
            v = self.values[key]
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def load_config(path=None, overrides=()):
    values = {k: default for k, (_, default) in CONFIG_SCHEMA.items()}

    def apply(key, raw, where):
        if key not in CONFIG_SCHEMA:
            raise ValidationError(f"{where}: unknown config key {key!r}")
        parser = CONFIG_SCHEMA[key][0]
        try:
            values[key] = parser(raw)
        except ValueError as exc:
            raise ValidationError(f"{where}: bad value for {key}: {exc}") from exc

    if path is not None:
        if not os.path.exists(path):
            raise ValidationError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = (part.strip() for part in line.split("=", 1))
                apply(key, raw, f"{path}:{lineno}")
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        apply(key, raw, "--set")
    cfg = RunConfig(values)
    for key in ("workers", "embed_epochs", "context_l"):
        if cfg.values[key] < 1:
            raise ValidationError(f"config key {key} must be >= 1")
    if cfg.context_k < 0:
        raise ValidationError("context_k must be >= 0")
    return cfg


# ---------------------------------------------------------------------------
# artifacts


def _paths(cfg):
    run = Path(cfg.run_dir)
    p = {
        "entity_tokens": run / "rewritten" / "entity_tokens.txt",
        "unit_tokens": run / "rewritten" / "unit_tokens.txt",
        "entity_vec": run / "embeddings" / "entities.vec",
        "unit_vec": run / "embeddings" / "units.vec",
        "gm_model": run / "models" / "gm.json",
        "cm_model": run / "models" / "cm.json",
        "sweep": run / "reports" / "sweep.tsv",
    }
    for split in ("train", "dev", "test"):
        p[f"dataset_{split}"] = run / "datasets" / f"cm.{split}.npz"
    for model in MODELS:
        for split in ("dev", "test"):
            p[f"scores_{model}_{split}"] = run / "scores" / f"{model}.{split}.tsv"
        p[f"report_{model}"] = run / "reports" / f"{model}.json"
    return p


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require_inputs(stage, inputs):
    for label, path in inputs.items():
        if not os.path.exists(path):
            raise ValidationError(
                f"{stage}: missing input {label} at {path}; run the producing command first")


def write_artifact(path, cfg, inputs, writer):
    """Atomically write an artifact plus its manifest sidecar.

    Refuses to overwrite an artifact whose manifest was produced under a
    different config hash (stale run directory).
    """
    path = Path(path)
    manifest_path = path.with_name(path.name + ".manifest.json")
    if manifest_path.exists():
        with open(manifest_path, encoding="utf-8") as f:
            previous = json.load(f)
        if previous.get("config_hash") != cfg.hash():
            raise ValidationError(
                f"{path}: existing artifact was produced with a different config; "
                "use a fresh run directory")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "package_version": __version__,
        "artifact": path.name,
        "config_hash": cfg.hash(),
        "input_hashes": {label: _sha256(p) for label, p in sorted(inputs.items())},
    }
    tmp = manifest_path.with_name(manifest_path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, manifest_path)
    logger.info("wrote %s", path)


class TokenFile:
    """Re-iterable token stream over a one-sentence-per-line text file."""

    def __init__(self, path):
        self.path = path

    def __iter__(self):
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                tokens = line.split()
                if tokens:
                    yield tokens


def _load_run_kb(cfg):
    cfg.require("kb_entities", "kb_types")
    _require_inputs("kb", {"kb_entities": cfg.kb_entities, "kb_types": cfg.kb_types})
    kb = load_kb(cfg.kb_entities, cfg.kb_types)
    if kb.split is None:
        kb = split_entities(kb, cfg.split_ratios, cfg.seed)
    return kb


# ---------------------------------------------------------------------------
# commands


def cmd_preprocess(cfg, args):
    with open(args.input, encoding="utf-8") as f, \
            open(args.output + ".tmp", "w", encoding="utf-8") as out:
        kept = 0
        for line in f:
            for sentence in preprocess_line(line.rstrip("\n")):
                out.write(sentence_to_json(sentence) + "\n")
                kept += 1
    os.replace(args.output + ".tmp", args.output)
    logger.info("preprocess: kept %d sentences -> %s", kept, args.output)


def cmd_generate_synthetic(cfg, args):
    cfg.require("corpus", "kb_entities", "kb_types")
    spec = SynSpec(
        num_types=cfg.syn_num_types,
        entities_per_type=cfg.syn_entities_per_type,
        types_per_entity=cfg.syn_types_per_entity,
        vocab_per_type=cfg.syn_vocab_per_type,
        background_vocab=cfg.syn_background_vocab,
        context_informativeness=cfg.syn_informativeness,
        mentions_per_entity=cfg.syn_mentions_mean,
        mentions_distribution=cfg.syn_mentions_distribution,
        words_per_side=cfg.syn_words_per_side,
        positional_signal=cfg.syn_positional_signal,
        inner_positions=cfg.syn_inner_positions,
        seed=cfg.seed,
    )
    sentences, kb = generate(spec)
    kb = split_entities(kb, cfg.split_ratios, cfg.seed)
    write_artifact(cfg.corpus, cfg, {}, lambda tmp: write_corpus(sentences, tmp))
    write_artifact(cfg.kb_types, cfg, {}, lambda tmp: save_types(kb.types, tmp))
    write_artifact(cfg.kb_entities, cfg, {}, lambda tmp: save_entities(kb, tmp))
    logger.info("generated %d sentences, %d entities, %d types",
                len(sentences), kb.num_entities, len(kb.types))


def cmd_rewrite(cfg, args):
    cfg.require("corpus", "run_dir")
    _require_inputs("rewrite", {"corpus": cfg.corpus})
    kb = _load_run_kb(cfg)
    p = _paths(cfg)
    if args.mode == "entity-id":
        out_path, exclude = p["entity_tokens"], ()
    else:
        out_path, exclude = p["unit_tokens"], set(kb.entities_in_split("test"))

    def writer(tmp):
        with open(tmp, "w", encoding="utf-8") as f:
            for tokens in rewrite_corpus(read_corpus(cfg.corpus), args.mode,
                                         kb=kb, exclude=exclude):
                f.write(" ".join(tokens) + "\n")

    inputs = {"corpus": cfg.corpus, "kb_entities": cfg.kb_entities}
    write_artifact(out_path, cfg, inputs, writer)


def cmd_embed(cfg, args):
    cfg.require("run_dir")
    p = _paths(cfg)
    if args.target == "entity":
        token_path, out_path, dim = p["entity_tokens"], p["entity_vec"], cfg.entity_dim
    else:
        token_path, out_path, dim = p["unit_tokens"], p["unit_vec"], cfg.unit_dim
    _require_inputs("embed", {f"{args.target} tokens": token_path})
    model = SkipgramModel(
        dim=dim, window=cfg.embed_window, negatives=cfg.embed_negatives,
        epochs=cfg.embed_epochs, min_count=cfg.embed_min_count,
        learning_rate=cfg.embed_lr, subsample=cfg.embed_subsample, seed=cfg.seed,
    ).fit(TokenFile(token_path))
    write_artifact(out_path, cfg, {"tokens": token_path},
                   lambda tmp: model.table_.save(tmp))
    logger.info("embed %s: vocabulary %d, dim %d", args.target, len(model.table_), dim)


def cmd_build_dataset(cfg, args):
    cfg.require("corpus", "run_dir")
    p = _paths(cfg)
    _require_inputs("build-dataset", {"corpus": cfg.corpus, "unit embeddings": p["unit_vec"]})
    kb = _load_run_kb(cfg)
    table = EmbeddingTable.load(p["unit_vec"])
    quotas = {"dev": cfg.dev_contexts_per_entity, "test": cfg.test_contexts_per_entity}
    for split in ("train", "dev", "test"):
        examples = build_distant_dataset(read_corpus(cfg.corpus), kb, split, table,
                                         cfg.context_k, cfg.context_l)
        if split == "train" and cfg.sample_train:
            examples, report = sample_train_contexts(
                examples, kb, cfg.train_min_per_type, cfg.train_max_per_type, cfg.seed)
            empty = [t for t, r in report.items() if r["kept"] == 0]
            if empty:
                logger.warning("train sampling: no contexts for types %s", empty)
        elif split != "train" and cfg.sample_eval:
            examples = sample_eval_contexts(examples, quotas[split], cfg.seed)
        inputs = {"corpus": cfg.corpus, "unit embeddings": p["unit_vec"]}
        write_artifact(p[f"dataset_{split}"], cfg, inputs,
                       lambda tmp, ex=examples: ex.save(tmp))
        logger.info("dataset %s: %d contexts", split, len(examples))


def _mlp_params(cfg, model):
    return {
        "hidden_size": cfg.values[f"{model}_hidden"],
        "learning_rate": cfg.values[f"{model}_lr"],
        "adagrad_epsilon": cfg.adagrad_epsilon,
        "batch_size": cfg.values[f"{model}_batch_size"],
        "max_epochs": cfg.values[f"{model}_max_epochs"],
        "patience": cfg.values[f"{model}_patience"],
        "seed": cfg.seed,
        "early_stop_metric": cfg.early_stop_metric,
    }


def cmd_train(cfg, args):
    cfg.require("run_dir")
    p = _paths(cfg)
    if args.model == "gm":
        _require_inputs("train gm", {"entity embeddings": p["entity_vec"]})
        kb = _load_run_kb(cfg)
        table = EmbeddingTable.load(p["entity_vec"])
        gm = GlobalModel(**_mlp_params(cfg, "gm")).fit(table, kb)
        inputs = {"entity embeddings": p["entity_vec"], "kb_entities": cfg.kb_entities}
        write_artifact(p["gm_model"], cfg, inputs, lambda tmp: gm.mlp_.save(tmp))
    else:
        _require_inputs("train cm", {"train dataset": p["dataset_train"],
                                     "dev dataset": p["dataset_dev"]})
        train = ContextExamples.load(p["dataset_train"])
        dev = ContextExamples.load(p["dataset_dev"])
        cm = ContextModel(aggregate=cfg.cm_aggregate, **_mlp_params(cfg, "cm")).fit(train, dev)
        inputs = {"train dataset": p["dataset_train"], "dev dataset": p["dataset_dev"]}
        write_artifact(p["cm_model"], cfg, inputs, lambda tmp: cm.mlp_.save(tmp))
    logger.info("trained %s", args.model)


def _write_scores(cfg, p, model, split, matrix, inputs):
    write_artifact(p[f"scores_{model}_{split}"], cfg, inputs,
                   lambda tmp: matrix.save_tsv(tmp))


def cmd_score(cfg, args):
    cfg.require("run_dir")
    p = _paths(cfg)
    model = args.model
    if model in ("gm", "cm", "mft"):
        kb = _load_run_kb(cfg)
    if model == "gm":
        _require_inputs("score gm", {"gm model": p["gm_model"],
                                     "entity embeddings": p["entity_vec"]})
        table = EmbeddingTable.load(p["entity_vec"])
        gm = GlobalModel(**_mlp_params(cfg, "gm"))
        gm.mlp_ = MultiLabelMLP.load(p["gm_model"])
        for split in ("dev", "test"):
            matrix = gm.score_entities(table, kb, kb.entities_in_split(split))
            if matrix.missing:
                logger.info("gm %s: %d entities without embeddings", split, len(matrix.missing))
            _write_scores(cfg, p, "gm", split, matrix,
                          {"gm model": p["gm_model"], "entity embeddings": p["entity_vec"]})
    elif model == "cm":
        _require_inputs("score cm", {"cm model": p["cm_model"],
                                     "dev dataset": p["dataset_dev"],
                                     "test dataset": p["dataset_test"]})
        cm = ContextModel(aggregate=cfg.cm_aggregate, **_mlp_params(cfg, "cm"))
        cm.mlp_ = MultiLabelMLP.load(p["cm_model"])
        for split in ("dev", "test"):
            examples = ContextExamples.load(p[f"dataset_{split}"])
            matrix = cm.score_entities(examples, list(kb.types.types),
                                       kb.entities_in_split(split))
            if matrix.missing:
                logger.info("cm %s: %d entities without contexts", split, len(matrix.missing))
            _write_scores(cfg, p, "cm", split, matrix,
                          {"cm model": p["cm_model"], "dataset": p[f"dataset_{split}"]})
    elif model == "jm":
        for split in ("dev", "test"):
            gm_path, cm_path = p[f"scores_gm_{split}"], p[f"scores_cm_{split}"]
            _require_inputs("score jm", {"gm scores": gm_path, "cm scores": cm_path})
            gm = ScoreMatrix.load_tsv(gm_path, provenance="gm")
            cm = ScoreMatrix.load_tsv(cm_path, provenance="cm")
            matrix = joint_scores(gm, cm)
            _write_scores(cfg, p, "jm", split, matrix,
                          {"gm scores": gm_path, "cm scores": cm_path})
    else:
        for split in ("dev", "test"):
            matrix = mft_scores(kb, kb.entities_in_split(split))
            _write_scores(cfg, p, "mft", split, matrix,
                          {"kb_entities": cfg.kb_entities})
    logger.info("scored %s", model)


def cmd_evaluate(cfg, args):
    cfg.require("corpus", "run_dir")
    p = _paths(cfg)
    model = args.model
    dev_path, test_path = p[f"scores_{model}_dev"], p[f"scores_{model}_test"]
    _require_inputs("evaluate", {"dev scores": dev_path, "test scores": test_path,
                                 "corpus": cfg.corpus})
    kb = _load_run_kb(cfg)
    dev = ScoreMatrix.load_tsv(dev_path, provenance=model)
    test = ScoreMatrix.load_tsv(test_path, provenance=model)
    freqs = entity_mention_counts(read_corpus(cfg.corpus))
    report = evaluate_model(
        dev, test, kb, freqs,
        requested_entities=kb.entities_in_split("test"),
        slice_config={
            "head_entity_min_freq": cfg.head_entity_min_freq,
            "tail_entity_max_freq": cfg.tail_entity_max_freq,
            "head_type_min_train": cfg.head_type_min_train,
            "tail_type_max_train": cfg.tail_type_max_train,
        },
    )
    write_artifact(p[f"report_{model}"], cfg,
                   {"dev scores": dev_path, "test scores": test_path},
                   lambda tmp: report.save(tmp))
    overall = report.overall
    logger.info("%s: P@1 %.3f BEP %.3f acc %.3f micro %.3f", model,
                overall["p_at_1"], overall["bep"], overall["accuracy"], overall["micro_f1"])


def cmd_sweep_context(cfg, args):
    cfg.require("run_dir")
    p = _paths(cfg)
    _require_inputs("sweep-context", {"train dataset": p["dataset_train"],
                                      "dev dataset": p["dataset_dev"],
                                      "test dataset": p["dataset_test"]})
    k_values = sorted({int(x) for x in args.k_values.split(",")})
    if any(k < 0 for k in k_values):
        raise ValidationError("k values must be >= 0")
    if max(k_values) > cfg.context_k:
        raise ValidationError(
            f"k={max(k_values)} exceeds the built window (context_k={cfg.context_k})")
    kb = _load_run_kb(cfg)
    data = {split: ContextExamples.load(p[f"dataset_{split}"])
            for split in ("train", "dev", "test")}
    dim = data["train"].features.shape[1] // (2 * cfg.context_k + 1)
    rows = []
    for k in k_values:
        cut = {
            split: ContextExamples(
                truncate_features(ex.features, cfg.context_k, k, dim),
                ex.labels, ex.entity_ids)
            for split, ex in data.items()
        }
        cm = ContextModel(aggregate=cfg.cm_aggregate, **_mlp_params(cfg, "cm"))
        cm.fit(cut["train"], cut["dev"])
        types = list(kb.types.types)
        dev_m = cm.score_entities(cut["dev"], types, kb.entities_in_split("dev"))
        test_m = cm.score_entities(cut["test"], types, kb.entities_in_split("test"))
        scored = [e for e in kb.entities_in_split("test") if e in test_m]
        thresholds = select_thresholds(dev_m, kb)
        stats = classify_and_score(test_m, thresholds, kb, scored)
        p_at_1 = precision_at_1(test_m, kb, scored)
        rows.append((2 * k, stats["micro_f1"], p_at_1))
        logger.info("sweep 2k=%d: micro %.3f P@1 %.3f", 2 * k, stats["micro_f1"], p_at_1)

    def writer(tmp):
        with open(tmp, "w", encoding="utf-8") as f:
            f.write("2k\tmicro_f1\tp_at_1\n")
            for two_k, micro, p1 in rows:
                f.write(f"{two_k}\t{micro:.10g}\t{p1:.10g}\n")

    write_artifact(p["sweep"], cfg, {"train dataset": p["dataset_train"]}, writer)


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="entitype",
        description="Corpus-level fine-grained entity typing pipeline.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable; wins over the file)")
    common.add_argument("--seed", type=int, help="override the seed")
    common.add_argument("--workers", type=int, help="worker count override")
    common.add_argument("--deterministic", dest="deterministic", action="store_true",
                        default=None, help="force deterministic mode")
    common.add_argument("--no-deterministic", dest="deterministic", action="store_false",
                        help="allow nondeterministic fast paths")

    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("preprocess", parents=[common],
                        help="raw text lines -> tokenized JSONL (no mentions)")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sub.add_parser("generate-synthetic", parents=[common],
                   help="write a synthetic corpus and knowledge base")
    sp = sub.add_parser("rewrite", parents=[common], help="corpus -> token stream")
    sp.add_argument("--mode", choices=("entity-id", "notable-type"), required=True)
    sp = sub.add_parser("embed", parents=[common], help="train skipgram embeddings")
    sp.add_argument("--target", choices=("entity", "unit"), required=True)
    sub.add_parser("build-dataset", parents=[common],
                   help="featurized context datasets for train/dev/test")
    sp = sub.add_parser("train", parents=[common], help="train a scorer")
    sp.add_argument("model", choices=("gm", "cm"))
    sp = sub.add_parser("score", parents=[common], help="write score TSVs")
    sp.add_argument("model", choices=MODELS)
    sp = sub.add_parser("evaluate", parents=[common], help="write the evaluation report")
    sp.add_argument("--model", choices=MODELS, required=True)
    sp = sub.add_parser("sweep-context", parents=[common],
                        help="retrain the context model at several window sizes")
    sp.add_argument("--k-values", required=True, help="comma-separated k values")
    return parser


COMMANDS = {
    "preprocess": cmd_preprocess,
    "generate-synthetic": cmd_generate_synthetic,
    "rewrite": cmd_rewrite,
    "embed": cmd_embed,
    "build-dataset": cmd_build_dataset,
    "train": cmd_train,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "sweep-context": cmd_sweep_context,
}


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.config is None and args.command != "preprocess":
            raise ValidationError("--config is required for this command")
        cfg = load_config(args.config, args.set)
        if args.seed is not None:
            cfg.values["seed"] = args.seed
        if args.workers is not None:
            cfg.values["workers"] = args.workers
        if args.deterministic is not None:
            cfg.values["deterministic"] = args.deterministic
        COMMANDS[args.command](cfg, args)
    except (ValidationError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failure boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
