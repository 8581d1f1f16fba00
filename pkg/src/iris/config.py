"""Run configuration: one YAML file drives every stage.

The resolved configuration is frozen into the run directory so any
artifact can be traced back to the exact settings that produced it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .errors import ConfigError
from .providers import (
    DiskCache,
    EmbeddingClient,
    HashEmbedder,
    LlmClient,
    MockLlm,
    RemoteEmbedder,
    RemoteLlm,
    RemoteReranker,
    RerankClient,
    TokenHashEmbedder,
    TokenOverlapReranker,
)
from .ranking import SCORER_KINDS

__all__ = [
    "RunConfig",
    "build_cache",
    "build_llm",
    "build_embedder",
    "build_reranker",
    "build_providers",
]

_TRAIN_FRACTIONS = (0.1, 0.3, 0.5, 1.0)


@dataclass
class RunSection:
    out_dir: str = ""
    seed: int = 7
    seeds: list[int] | None = None
    train_fraction: float = 1.0
    error_policy: str = "strict"
    workers: int = 1


@dataclass
class DataSection:
    train: str = ""
    dev: str = ""
    test: str = ""
    source: str = ""


@dataclass
class LlmSection:
    kind: str = "remote"
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    lexicon: str = ""


@dataclass
class EmbedSection:
    kind: str = "remote"
    endpoint: str = ""
    model: str = ""
    dim: int = 4096


@dataclass
class RerankSection:
    kind: str = "remote"
    endpoint: str = ""
    model: str = ""


@dataclass
class CacheSection:
    dir: str = ""


@dataclass
class NetSection:
    max_concurrency: int = 4
    retries: int = 3


@dataclass
class GenSection:
    implicit_template: str = ""
    explicit_template: str = ""


@dataclass
class DocprepSection:
    threshold: float = 0.05
    max_per_bucket: int = 200
    separator: str = " [SEP] "


@dataclass
class RankSection:
    scorer: str = "reranker"
    instruction_file: str = ""
    use_target: bool = True
    use_instruction: bool = True
    target_sep: str = " [TGT] "
    bm25_k1: float = 1.5
    bm25_b: float = 0.75


@dataclass
class SelectSection:
    threshold: float = 0.3
    k: int = 3
    epsilon: float = 1e-6


@dataclass
class TrainSection:
    lr: float = 1e-4
    batch_size: int = 32
    beta: float = 0.1
    q: float = 0.5
    epochs: int = 30
    vote_mode: str = "relevant-explicit"
    dense_dim: int = 128
    calibration_trainable: bool = True


@dataclass
class SweepSection:
    parameter: str = ""
    values: list[float] = field(default_factory=list)


_SECTIONS = {
    "run": RunSection,
    "data": DataSection,
    "llm": LlmSection,
    "embed": EmbedSection,
    "rerank": RerankSection,
    "cache": CacheSection,
    "net": NetSection,
    "gen": GenSection,
    "docprep": DocprepSection,
    "rank": RankSection,
    "select": SelectSection,
    "train": TrainSection,
    "sweep": SweepSection,
}


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    data: DataSection = field(default_factory=DataSection)
    llm: LlmSection = field(default_factory=LlmSection)
    embed: EmbedSection = field(default_factory=EmbedSection)
    rerank: RerankSection = field(default_factory=RerankSection)
    cache: CacheSection = field(default_factory=CacheSection)
    net: NetSection = field(default_factory=NetSection)
    gen: GenSection = field(default_factory=GenSection)
    docprep: DocprepSection = field(default_factory=DocprepSection)
    rank: RankSection = field(default_factory=RankSection)
    select: SelectSection = field(default_factory=SelectSection)
    train: TrainSection = field(default_factory=TrainSection)
    sweep: SweepSection = field(default_factory=SweepSection)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(raw, origin=str(path))

    @classmethod
    def from_dict(cls, raw: dict, origin: str = "<dict>") -> "RunConfig":
        kwargs = {}
        for key, value in raw.items():
            if key not in _SECTIONS:
                raise ConfigError(
                    f"{origin}: unknown config section {key!r} "
                    f"(expected one of {sorted(_SECTIONS)})")
            section_cls = _SECTIONS[key]
            known = {f.name for f in fields(section_cls)}
            if not isinstance(value, dict):
                raise ConfigError(f"{origin}: section {key!r} must be a mapping")
            unknown = set(value) - known
            if unknown:
                raise ConfigError(
                    f"{origin}: unknown key(s) {sorted(unknown)} in section "
                    f"{key!r}")
            kwargs[key] = section_cls(**value)
        cfg = cls(**kwargs)
        cfg.validate(origin)
        return cfg

    def validate(self, origin: str = "<config>") -> None:
        if not self.run.out_dir:
            raise ConfigError(f"{origin}: run.out_dir is required")
        if self.run.error_policy not in ("strict", "degrade"):
            raise ConfigError(
                f"{origin}: run.error_policy must be 'strict' or 'degrade'")
        if self.run.train_fraction not in _TRAIN_FRACTIONS:
            raise ConfigError(
                f"{origin}: run.train_fraction must be one of "
                f"{_TRAIN_FRACTIONS}, got {self.run.train_fraction}")
        if self.rank.scorer not in SCORER_KINDS:
            raise ConfigError(
                f"{origin}: rank.scorer must be one of {SCORER_KINDS}, "
                f"got {self.rank.scorer!r}")
        if not 0 < self.select.threshold < 1:
            raise ConfigError(
                f"{origin}: select.threshold must lie in (0, 1)")
        if self.select.k < 1:
            raise ConfigError(f"{origin}: select.k must be >= 1")
        if not 0 < self.train.beta < 1:
            raise ConfigError(f"{origin}: train.beta must lie in (0, 1)")
        if self.train.q < 0:
            raise ConfigError(f"{origin}: train.q must be >= 0")
        if self.embed.dim < 1:
            raise ConfigError(f"{origin}: embed.dim must be positive")

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def digest_payload(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def with_overrides(
        self,
        seed: int | None = None,
        train_fraction: float | None = None,
        vote_mode: str | None = None,
        scorer: str | None = None,
        out_dir: str | None = None,
    ) -> "RunConfig":
        """A copy with the CLI-level overrides applied and re-validated."""
        cfg = RunConfig(**{
            name: _SECTIONS[name](**asdict(getattr(self, name)))
            for name in _SECTIONS
        })
        if seed is not None:
            cfg.run.seed = seed
        if train_fraction is not None:
            cfg.run.train_fraction = train_fraction
        if vote_mode is not None:
            cfg.train.vote_mode = vote_mode
        if scorer is not None:
            cfg.rank.scorer = scorer
        if out_dir is not None:
            cfg.run.out_dir = out_dir
        cfg.validate("<override>")
        return cfg


def build_cache(cfg: RunConfig) -> DiskCache:
    cache_dir = cfg.cache.dir or str(Path(cfg.run.out_dir) / "cache")
    return DiskCache(cache_dir)


def build_llm(cfg: RunConfig, cache: DiskCache) -> LlmClient:
    if cfg.llm.kind == "remote":
        if not cfg.llm.endpoint:
            raise ConfigError("llm.endpoint is required for llm.kind=remote")
        backend = RemoteLlm(cfg.llm.endpoint, retries=cfg.net.retries)
    elif cfg.llm.kind == "synthetic":
        from .synthetic import Lexicon, SyntheticStanceLlm

        lexicon = (Lexicon.load(cfg.llm.lexicon) if cfg.llm.lexicon
                   else Lexicon.default())
        backend = SyntheticStanceLlm(lexicon)
    elif cfg.llm.kind == "mock":
        backend = MockLlm(default="NONE")
    else:
        raise ConfigError(f"unknown llm.kind {cfg.llm.kind!r}")
    return LlmClient(backend, cache)


def build_embedder(cfg: RunConfig, cache: DiskCache) -> EmbeddingClient:
    if cfg.embed.kind == "remote":
        if not cfg.embed.endpoint:
            raise ConfigError("embed.endpoint is required for embed.kind=remote")
        backend = RemoteEmbedder(cfg.embed.endpoint, cfg.embed.model,
                                 retries=cfg.net.retries)
    elif cfg.embed.kind == "hash":
        backend = HashEmbedder(cfg.embed.dim, cfg.embed.model or "mock-hash")
    elif cfg.embed.kind == "token-hash":
        backend = TokenHashEmbedder(cfg.embed.dim,
                                    cfg.embed.model or "mock-token-hash")
    else:
        raise ConfigError(f"unknown embed.kind {cfg.embed.kind!r}")
    return EmbeddingClient(backend, cfg.embed.dim, cache)


def build_reranker(cfg: RunConfig, cache: DiskCache) -> RerankClient:
    if cfg.rerank.kind == "remote":
        if not cfg.rerank.endpoint:
            raise ConfigError(
                "rerank.endpoint is required for rerank.kind=remote")
        backend = RemoteReranker(cfg.rerank.endpoint, cfg.rerank.model,
                                 retries=cfg.net.retries)
    elif cfg.rerank.kind == "token-overlap":
        backend = TokenOverlapReranker()
    else:
        raise ConfigError(f"unknown rerank.kind {cfg.rerank.kind!r}")
    return RerankClient(backend, cache)


def build_providers(cfg: RunConfig) -> tuple[LlmClient, EmbeddingClient, RerankClient]:
    """Construct the three provider clients, sharing one disk cache."""
    cache = build_cache(cfg)
    return (build_llm(cfg, cache), build_embedder(cfg, cache),
            build_reranker(cfg, cache))
