"""Resumable stage orchestration.

Stages run in a fixed order (prepare-docs, gen-rationales, rank, select,
train, predict, evaluate), each persisting its artifacts atomically
under the run directory together with a manifest of input/output
digests.  A stage refuses to run when a dependency has not run yet or
when its recorded artifacts no longer match the files on disk, so stale
data can never silently mix into a run.  Provider calls dominate cost;
the shared disk cache makes any rerun cheap and byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import classifier as clf
from .config import (
    RunConfig,
    build_cache,
    build_embedder,
    build_llm,
    build_reranker,
)
from .core import Dataset, Sample, Split, StanceLabel, load_canonical
from .docprep import StanceDocuments, build_documents
from .errors import IrisError, StageDependencyError, StaleArtifactError
from .evalkit import (
    EvalReport,
    aggregate_runs,
    macro_f1,
    stratified_subsample,
    sweep,
    sweep_table,
)
from .ranking import (
    RankingQuery,
    RationaleRanker,
    RelevanceProfile,
    build_instruction,
    default_instruction,
)
from .rationales import RationaleSet, default_template, generate_rationales
from .rationales import PromptTemplate
from .selection import RelevanceVerdict, group_and_select

__all__ = ["STAGE_ORDER", "run_stage", "end_to_end", "run_sweep"]

STAGE_ORDER = [
    "prepare-docs",
    "gen-rationales",
    "rank",
    "select",
    "train",
    "predict",
    "evaluate",
]

_SPLITS = ("train", "dev", "test")


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _dumps(rec: dict) -> str:
    return json.dumps(rec, ensure_ascii=False, sort_keys=True)


@dataclass
class StageContext:
    """Bookkeeping for one stage run: inputs consumed, outputs written,
    provider backends used."""

    cfg: RunConfig
    run_dir: Path
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    _cache: object = None
    _llm: object = None
    _embedder: object = None
    _reranker: object = None

    def input_file(self, path: str | Path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise IrisError(f"required input file missing: {path}")
        self.inputs[str(path)] = _sha256_file(path)
        return path

    def write_text(self, relpath: str, text: str) -> Path:
        path = self.run_dir / relpath
        _atomic_write(path, text)
        self.outputs[relpath] = _sha256_file(path)
        return path

    def write_jsonl(self, relpath: str, records: list[dict]) -> Path:
        return self.write_text(
            relpath, "".join(_dumps(r) + "\n" for r in records))

    def write_bytes_output(self, relpath: str, writer) -> Path:
        """Record an output produced by an external writer callable."""
        path = self.run_dir / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path)
        self.outputs[relpath] = _sha256_file(path)
        return path

    @property
    def cache(self):
        if self._cache is None:
            self._cache = build_cache(self.cfg)
        return self._cache

    @property
    def llm(self):
        if self._llm is None:
            self._llm = build_llm(self.cfg, self.cache)
        return self._llm

    @property
    def embedder(self):
        if self._embedder is None:
            self._embedder = build_embedder(self.cfg, self.cache)
        return self._embedder

    @property
    def reranker(self):
        if self._reranker is None:
            self._reranker = build_reranker(self.cfg, self.cache)
        return self._reranker

    def provider_calls(self) -> dict[str, int]:
        return {
            "llm": self._llm.backend_calls if self._llm else 0,
            "embed": self._embedder.backend_calls if self._embedder else 0,
            "rerank": self._reranker.backend_calls if self._reranker else 0,
        }

    def map_samples(self, func, items):
        workers = max(1, self.cfg.run.workers)
        if workers == 1:
            return [func(x) for x in items]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))


def _manifest_path(run_dir: Path) -> Path:
    return run_dir / "manifest.json"


def _load_manifest(run_dir: Path) -> dict:
    path = _manifest_path(run_dir)
    if not path.is_file():
        return {"stages": {}}
    return json.loads(path.read_text(encoding="utf-8"))


def _save_manifest(run_dir: Path, manifest: dict) -> None:
    _atomic_write(_manifest_path(run_dir),
                  json.dumps(manifest, sort_keys=True, indent=1))


def _check_dependency(stage: str, run_dir: Path, manifest: dict) -> None:
    idx = STAGE_ORDER.index(stage)
    if idx == 0:
        return
    dep = STAGE_ORDER[idx - 1]
    entry = manifest["stages"].get(dep)
    if entry is None:
        raise StageDependencyError(
            f"stage {stage!r} requires {dep!r}; run `iris {dep}` first")
    for path_str, digest in entry["inputs"].items():
        path = Path(path_str)
        if not path.is_file() or _sha256_file(path) != digest:
            raise StaleArtifactError(
                f"input {path_str} of stage {dep!r} changed since it ran; "
                f"rerun `iris {dep}` to avoid mixing stale artifacts")
    for relpath, digest in entry["outputs"].items():
        path = run_dir / relpath
        if not path.is_file() or _sha256_file(path) != digest:
            raise StaleArtifactError(
                f"artifact {relpath} of stage {dep!r} is missing or was "
                f"modified; rerun `iris {dep}`")


def _freeze_config(cfg: RunConfig, run_dir: Path) -> None:
    _atomic_write(run_dir / "config.resolved.yaml",
                  yaml.safe_dump(cfg.to_dict(), sort_keys=True))


def _load_dataset(cfg: RunConfig, ctx: StageContext, split: str) -> Dataset:
    path = getattr(cfg.data, split if split != "source" else "source")
    if not path:
        raise IrisError(f"config data.{split} is not set")
    split_enum = Split.TRAIN if split == "source" else Split(split)
    return load_canonical(ctx.input_file(path), split=split_enum)


# --------------------------------------------------------------------------
# stage implementations


def _stage_prepare_docs(ctx: StageContext) -> None:
    cfg = ctx.cfg
    source = _load_dataset(cfg, ctx, "source")
    train = _load_dataset(cfg, ctx, "train")
    test = _load_dataset(cfg, ctx, "test")
    docs = build_documents(
        source, train, test, ctx.embedder,
        sim_threshold=cfg.docprep.threshold,
        max_per_bucket=cfg.docprep.max_per_bucket,
        separator=cfg.docprep.separator,
        workers=cfg.run.workers,
    )
    for name, doc in zip(("favor", "against", "neutral"), docs.by_label()):
        ctx.write_text(f"docs/{name}.txt", doc)
    manifest = [{"source_id": sid, "bucket": bucket}
                for sid, bucket in docs.provenance]
    ctx.write_text("docs/provenance.json",
                   json.dumps(manifest, ensure_ascii=False, sort_keys=True,
                              indent=1))


def _templates(cfg: RunConfig, ctx: StageContext) -> tuple[PromptTemplate, PromptTemplate]:
    if cfg.gen.implicit_template:
        implicit = PromptTemplate.from_file(
            ctx.input_file(cfg.gen.implicit_template))
    else:
        implicit = default_template("implicit")
    if cfg.gen.explicit_template:
        explicit = PromptTemplate.from_file(
            ctx.input_file(cfg.gen.explicit_template))
    else:
        explicit = default_template("explicit")
    return implicit, explicit


def _stage_gen_rationales(ctx: StageContext) -> None:
    cfg = ctx.cfg
    implicit_tpl, explicit_tpl = _templates(cfg, ctx)
    for split in _SPLITS:
        dataset = _load_dataset(cfg, ctx, split)

        def one(sample: Sample) -> dict:
            rset = generate_rationales(
                sample, implicit_tpl, explicit_tpl, ctx.llm,
                model_id=cfg.llm.model or "default",
                error_policy=cfg.run.error_policy,
            )
            return rset.to_record()

        records = ctx.map_samples(one, dataset.samples)
        ctx.write_jsonl(f"rationales/{split}.jsonl", records)


def _load_docs(ctx: StageContext) -> StanceDocuments:
    docs_dir = ctx.run_dir / "docs"
    texts = []
    for name in ("favor", "against", "neutral"):
        path = docs_dir / f"{name}.txt"
        ctx.input_file(path)
        texts.append(path.read_text(encoding="utf-8"))
    return StanceDocuments(favor_doc=texts[0], against_doc=texts[1],
                           neutral_doc=texts[2], provenance=())


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _stage_rank(ctx: StageContext) -> None:
    cfg = ctx.cfg
    docs = _load_docs(ctx)
    if cfg.rank.instruction_file:
        tpl = ctx.input_file(cfg.rank.instruction_file).read_text(
            encoding="utf-8")
    else:
        tpl = default_instruction()
    instruction = build_instruction(tpl, use_instruction=cfg.rank.use_instruction)
    ranker = RationaleRanker(
        kind=cfg.rank.scorer,
        docs=docs,
        reranker=ctx.reranker if cfg.rank.scorer == "reranker" else None,
        embedder=ctx.embedder if cfg.rank.scorer == "cosine" else None,
        llm=ctx.llm if cfg.rank.scorer == "llm-rank" else None,
        llm_model=cfg.llm.model or "default",
        bm25_k1=cfg.rank.bm25_k1,
        bm25_b=cfg.rank.bm25_b,
    )
    for split in _SPLITS:
        dataset = _load_dataset(cfg, ctx, split)
        targets = {s.id: s.target for s in dataset.samples}
        rationale_records = _read_jsonl(
            ctx.input_file(ctx.run_dir / f"rationales/{split}.jsonl"))

        def one(rec: dict) -> dict:
            rset = RationaleSet.from_record(rec)
            profiles = []
            for i, rationale in enumerate(rset.implicit):
                query = RankingQuery.build(
                    instruction=instruction,
                    rationale_text=rationale.text,
                    target=targets[rset.sample_id],
                    use_target=cfg.rank.use_target,
                    target_sep=cfg.rank.target_sep,
                )
                llm_scores = (rset.llm_stance_scores[i]
                              if rset.llm_stance_scores is not None else None)
                raw = ranker.score_rationale(query, llm_scores=llm_scores)
                profiles.append(
                    RelevanceProfile.from_raw(rationale.rationale_id, raw)
                    .to_record())
            return {"sample_id": rset.sample_id, "profiles": profiles}

        records = ctx.map_samples(one, rationale_records)
        ctx.write_jsonl(f"profiles/{split}.jsonl", records)


def _stage_select(ctx: StageContext) -> None:
    cfg = ctx.cfg
    for split in _SPLITS:
        profile_records = _read_jsonl(
            ctx.input_file(ctx.run_dir / f"profiles/{split}.jsonl"))
        out = []
        for rec in profile_records:
            profiles = [RelevanceProfile.from_record(p)
                        for p in rec["profiles"]]
            if not profiles:
                if cfg.run.error_policy == "strict":
                    raise IrisError(
                        f"sample {rec['sample_id']!r} has no rationales to "
                        f"select from (stage gen-rationales produced none)")
                out.append({
                    "sample_id": rec["sample_id"],
                    "verdicts": [],
                    "relevant": {"selected": [], "trace": []},
                    "irrelevant": {"selected": [], "trace": []},
                })
                continue
            verdicts, relevant, irrelevant = group_and_select(
                profiles, threshold=cfg.select.threshold, k=cfg.select.k,
                epsilon=cfg.select.epsilon)
            out.append({
                "sample_id": rec["sample_id"],
                "verdicts": [v.to_record() for v in verdicts],
                "relevant": relevant.to_record(),
                "irrelevant": irrelevant.to_record(),
            })
        ctx.write_jsonl(f"selections/{split}.jsonl", out)


def _encoded_samples(ctx: StageContext, split: str,
                     dataset: Dataset | None = None) -> list[clf.EncodedSample]:
    """Assemble classifier inputs for a split from the stage artifacts."""
    cfg = ctx.cfg
    if dataset is None:
        dataset = _load_dataset(cfg, ctx, split)
    samples_by_id = {s.id: s for s in dataset.samples}
    rationales = {
        r["sample_id"]: RationaleSet.from_record(r)
        for r in _read_jsonl(
            ctx.input_file(ctx.run_dir / f"rationales/{split}.jsonl"))
    }
    profile_rows = {
        r["sample_id"]: r
        for r in _read_jsonl(
            ctx.input_file(ctx.run_dir / f"profiles/{split}.jsonl"))
    }
    selection_rows = {
        r["sample_id"]: r
        for r in _read_jsonl(
            ctx.input_file(ctx.run_dir / f"selections/{split}.jsonl"))
    }
    sep = cfg.docprep.separator

    texts: list[str] = []
    for sid in samples_by_id:
        if sid not in selection_rows:
            raise IrisError(
                f"sample {sid!r} missing from stage 'select' outputs for "
                f"split {split!r}")
        rset = rationales[sid]
        if rset.explicit.text:
            texts.append(rset.explicit.text)
        by_rid = {r.rationale_id: r for r in rset.implicit}
        row = selection_rows[sid]
        for group in ("relevant", "irrelevant"):
            for rid in row[group]["selected"]:
                texts.append(
                    f"{by_rid[rid].text}{sep}{samples_by_id[sid].target}")
    # warm the embedding cache concurrently, then assemble deterministically
    ctx.map_samples(lambda t: ctx.embedder.embed(t), sorted(set(texts)))

    encoded = []
    for sid, sample in samples_by_id.items():
        rset = rationales[sid]
        row = selection_rows[sid]
        by_rid = {r.rationale_id: r for r in rset.implicit}
        raw_by_rid = {p["rid"]: p["raw"] for p in profile_rows[sid]["profiles"]}
        verdicts_by_rid = {
            v["rid"]: RelevanceVerdict.from_record(v) for v in row["verdicts"]
        }
        groups: dict[str, list[clf.RationaleInput]] = {"relevant": [],
                                                       "irrelevant": []}
        for group in ("relevant", "irrelevant"):
            for rid in row[group]["selected"]:
                text = f"{by_rid[rid].text}{sep}{sample.target}"
                groups[group].append(clf.RationaleInput(
                    rationale_id=rid,
                    imp_emb=ctx.embedder.embed(text).values,
                    raw_scores=np.asarray(raw_by_rid[rid], dtype=np.float64),
                    verdict=verdicts_by_rid[rid],
                ))
        if rset.explicit.text:
            exp_emb = ctx.embedder.embed(rset.explicit.text).values
        else:
            exp_emb = np.zeros(cfg.embed.dim)
        encoded.append(clf.EncodedSample(
            sample_id=sid,
            relevant=tuple(groups["relevant"]),
            irrelevant=tuple(groups["irrelevant"]),
            exp_emb=exp_emb,
            gold=sample.gold,
        ))
    return encoded


def _stage_train(ctx: StageContext) -> None:
    cfg = ctx.cfg
    train_dataset = _load_dataset(cfg, ctx, "train")
    if cfg.run.train_fraction < 1.0:
        train_dataset = stratified_subsample(
            train_dataset, cfg.run.train_fraction, cfg.run.seed)
    train_samples = _encoded_samples(ctx, "train", dataset=train_dataset)
    dev_samples = _encoded_samples(ctx, "dev")
    train_cfg = clf.TrainConfig(
        lr=cfg.train.lr,
        batch_size=cfg.train.batch_size,
        beta=cfg.train.beta,
        q=cfg.train.q,
        epochs=cfg.train.epochs,
        seed=cfg.run.seed,
        vote_mode=cfg.train.vote_mode,
        dense_dim=cfg.train.dense_dim,
        calibration_trainable=cfg.train.calibration_trainable,
    )
    params, logs = clf.train(train_samples, dev_samples, train_cfg)
    ctx.write_bytes_output("params/checkpoint.bin",
                           lambda path: params.save(path))
    ctx.write_jsonl("logs/train_log.jsonl", [log.to_record() for log in logs])


def _stage_predict(ctx: StageContext) -> None:
    cfg = ctx.cfg
    params = clf.ClassifierParams.load(
        ctx.input_file(ctx.run_dir / "params/checkpoint.bin"))
    test_samples = _encoded_samples(ctx, "test")
    vote_mode = clf.VoteMode(cfg.train.vote_mode)
    records = []
    for sample in test_samples:
        label, predictions = clf.predict_stance(sample, params, vote_mode)
        records.append({
            "id": sample.sample_id,
            "pred": label.to_string(),
            "votes": [
                {"rid": p.rationale_id, "probs": list(p.probs),
                 "group": p.group.value}
                for p in predictions
            ],
        })
    ctx.write_jsonl("predictions/test.jsonl", records)


def _stage_evaluate(ctx: StageContext) -> None:
    cfg = ctx.cfg
    dataset = _load_dataset(cfg, ctx, "test")
    golds_by_id = {s.id: s.gold for s in dataset.samples}
    records = _read_jsonl(
        ctx.input_file(ctx.run_dir / "predictions/test.jsonl"))
    preds, golds = [], []
    for rec in records:
        gold = golds_by_id.get(rec["id"])
        if gold is None:
            continue
        preds.append(StanceLabel.from_string(rec["pred"]))
        golds.append(gold)
    if not preds:
        raise IrisError("no labeled test samples to evaluate")
    report = macro_f1(preds, golds, run_seed=cfg.run.seed)
    ctx.write_text("report/eval.json",
                   json.dumps(report.to_record(), sort_keys=True, indent=1))


_STAGE_FUNCS = {
    "prepare-docs": _stage_prepare_docs,
    "gen-rationales": _stage_gen_rationales,
    "rank": _stage_rank,
    "select": _stage_select,
    "train": _stage_train,
    "predict": _stage_predict,
    "evaluate": _stage_evaluate,
}


def run_stage(stage: str, cfg: RunConfig) -> Path:
    """Run one pipeline stage; returns the run directory.

    Dependencies must have run already and their artifacts must still
    match the recorded digests.
    """
    if stage not in _STAGE_FUNCS:
        raise IrisError(
            f"unknown stage {stage!r}; expected one of {STAGE_ORDER}")
    run_dir = Path(cfg.run.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    _freeze_config(cfg, run_dir)
    manifest = _load_manifest(run_dir)
    _check_dependency(stage, run_dir, manifest)

    ctx = StageContext(cfg=cfg, run_dir=run_dir)
    _STAGE_FUNCS[stage](ctx)

    manifest["stages"][stage] = {
        "config": hashlib.sha256(
            cfg.digest_payload().encode("utf-8")).hexdigest(),
        "inputs": dict(sorted(ctx.inputs.items())),
        "outputs": dict(sorted(ctx.outputs.items())),
        "provider_calls": ctx.provider_calls(),
    }
    _save_manifest(run_dir, manifest)
    return run_dir


def _single_run(cfg: RunConfig) -> EvalReport:
    for stage in STAGE_ORDER:
        run_stage(stage, cfg)
    report_path = Path(cfg.run.out_dir) / "report" / "eval.json"
    return EvalReport.from_record(
        json.loads(report_path.read_text(encoding="utf-8")))


def end_to_end(cfg: RunConfig) -> list[EvalReport]:
    """Run every stage in dependency order.

    With ``run.seeds`` set, each seed gets its own child run directory
    (sharing the provider cache) and the per-seed reports are aggregated
    into ``aggregate.json``.
    """
    if not cfg.run.seeds:
        return [_single_run(cfg)]
    out_dir = Path(cfg.run.out_dir)
    cache_dir = cfg.cache.dir or str(out_dir / "cache")
    reports = []
    for seed in cfg.run.seeds:
        child = cfg.with_overrides(seed=int(seed),
                                   out_dir=str(out_dir / f"seed={seed}"))
        child.run.seeds = None
        child.cache.dir = cache_dir
        reports.append(_single_run(child))
    aggregate = aggregate_runs(reports)
    _atomic_write(out_dir / "aggregate.json",
                  json.dumps(aggregate, sort_keys=True, indent=1))
    return reports


def run_sweep(cfg: RunConfig) -> Path:
    """Train and evaluate once per sweep value in child run directories;
    emit a machine-readable table."""
    parameter = cfg.sweep.parameter
    values = cfg.sweep.values
    out_dir = Path(cfg.run.out_dir)
    cache_dir = cfg.cache.dir or str(out_dir / "cache")

    def run_one(param: str, value) -> EvalReport:
        child = cfg.with_overrides(
            out_dir=str(out_dir / f"sweep-{param}" / f"{param}={value:g}"))
        child.run.seeds = None
        child.cache.dir = cache_dir
        if param == "k":
            child.select.k = int(value)
        else:
            child.train.beta = float(value)
        child.validate("<sweep>")
        return _single_run(child)

    rows = sweep(parameter, values, run_one)
    table = sweep_table(rows, parameter)
    path = out_dir / "sweeps" / f"sweep_{parameter}.tsv"
    _atomic_write(path, table)
    return path
