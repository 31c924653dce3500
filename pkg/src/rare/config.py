"""Pipeline configuration: one TOML file, ``${VAR}`` interpolation, validation."""

from __future__ import annotations

import os
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigInvalid
from .evalcore.judge import EMBED_THRESHOLD, MODES
from .ingest import DEFAULT_BUDGET, DOMAINS
from .kgraph import DEFAULT_STRIDE, DEFAULT_TAU_REL, DEFAULT_WINDOW
from .patterns import DEFAULT_EDGE_CAP, KINDS
from .perturb.llm import DEFAULT_TAU_D, DEFAULT_TAU_Q

_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass
class Endpoint:
    """One model behind an OpenAI-compatible endpoint."""

    model: str
    base_url: str = ""
    api_key: str = ""


@dataclass
class CorpusConfig:
    dir: str = "corpus"
    domain: str = "other"
    chunk_budget: int = DEFAULT_BUDGET


@dataclass
class KGConfig:
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE
    tau_rel: float = DEFAULT_TAU_REL
    edge_cap: Optional[int] = DEFAULT_EDGE_CAP
    max_chain: int = 3


@dataclass
class QAConfig:
    threshold: int = 3
    seed: int = 13
    test_quota: Union[int, dict[str, int]] = 1000
    eval_split: str = "test"


@dataclass
class PerturbConfig:
    seed: int = 7
    tau_q: float = DEFAULT_TAU_Q
    tau_d: float = DEFAULT_TAU_D
    pivot_language: str = "German"
    lexicon: Optional[str] = None


@dataclass
class EvalConfig:
    judge_mode: str = "strict"
    report_both: bool = False
    match_threshold: float = EMBED_THRESHOLD
    include_original_in_query: bool = False
    fold_retrieval: bool = False
    refusal_phrases: list[str] = field(default_factory=list)
    k: int = 3


@dataclass
class ProviderSettings:
    attempts: int = 3
    backoff: float = 1.0
    max_in_flight: int = 8
    timeout: float = 60.0


@dataclass
class PipelineConfig:
    root: Path
    output_dir: str
    extractor: Endpoint
    qa_generator: Endpoint
    qa_judge: Endpoint
    perturber: Endpoint
    utility_embedder: Endpoint
    generators: list[Endpoint]
    embedding_models: list[Endpoint]
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    kg: KGConfig = field(default_factory=KGConfig)
    qa: QAConfig = field(default_factory=QAConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    evaluate: EvalConfig = field(default_factory=EvalConfig)
    providers: ProviderSettings = field(default_factory=ProviderSettings)
    cache_dir: Optional[str] = None

    @property
    def out(self) -> Path:
        return self._resolve(self.output_dir)

    @property
    def corpus_dir(self) -> Path:
        return self._resolve(self.corpus.dir)

    @property
    def cache_path(self) -> Path:
        return self._resolve(self.cache_dir) if self.cache_dir else self.out / "cache"

    def _resolve(self, p: str) -> Path:
        path = Path(p).expanduser()
        return path if path.is_absolute() else self.root / path

    def section(self, name: str) -> dict:
        """Plain-data view of one part of the config, secrets removed (for fingerprints)."""
        value = getattr(self, name)
        if isinstance(value, list):
            return {"items": [_public(v) for v in value]}
        return _public(value)


def _public(obj) -> Any:
    data = asdict(obj)
    data.pop("api_key", None)
    data.pop("base_url", None)
    return data


def interpolate(value: Any, env: Optional[dict] = None) -> Any:
    env = os.environ if env is None else env
    if isinstance(value, str):
        return _VAR.sub(lambda m: env.get(m.group(1), ""), value)
    if isinstance(value, list):
        return [interpolate(v, env) for v in value]
    if isinstance(value, dict):
        return {k: interpolate(v, env) for k, v in value.items()}
    return value


def _build(cls, data: Optional[dict], where: str):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigInvalid(f"[{where}] unknown keys: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigInvalid(f"[{where}] {exc}") from exc


def _endpoint(data: Any, where: str) -> Endpoint:
    if isinstance(data, str):
        data = {"model": data}
    if not isinstance(data, dict) or not data.get("model"):
        raise ConfigInvalid(f"{where}: a model name is required")
    return _build(Endpoint, data, where)


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigInvalid(msg)


def validate(cfg: PipelineConfig) -> None:
    _check(cfg.corpus.domain in DOMAINS, f"corpus.domain must be one of {DOMAINS}")
    _check(cfg.corpus.chunk_budget >= 1, "corpus.chunk_budget must be >= 1")
    _check(cfg.kg.window >= 1 and cfg.kg.stride >= 1, "kg.window and kg.stride must be >= 1")
    _check(cfg.kg.stride <= cfg.kg.window, "kg.stride must not exceed kg.window")
    _check(cfg.kg.max_chain >= 2, "kg.max_chain must be >= 2")
    _check(cfg.kg.edge_cap is None or cfg.kg.edge_cap >= 1, "kg.edge_cap must be >= 1")
    _check(0 < cfg.kg.tau_rel <= 1, "kg.tau_rel must be in (0, 1]")
    for name in ("tau_q", "tau_d"):
        _check(0 < getattr(cfg.perturb, name) <= 1, f"perturb.{name} must be in (0, 1]")
    _check(0 < cfg.evaluate.match_threshold <= 1, "evaluate.match_threshold must be in (0, 1]")
    _check(1 <= cfg.qa.threshold <= 5, "qa.threshold must be in [1, 5]")
    _check(cfg.qa.eval_split in ("test", "train", "all"), "qa.eval_split must be test, train or all")
    if isinstance(cfg.qa.test_quota, dict):
        bad = sorted(set(cfg.qa.test_quota) - set(KINDS))
        _check(not bad, f"qa.test_quota has unknown kinds: {bad}")
    _check(cfg.evaluate.judge_mode in MODES, f"evaluate.judge_mode must be one of {MODES}")
    _check(cfg.evaluate.k >= 1, "evaluate.k must be >= 1")
    _check(bool(cfg.generators), "at least one [[generators]] entry is required")
    _check(bool(cfg.embedding_models), "at least one [[embedding_models]] entry is required")
    names = [e.model for e in cfg.embedding_models]
    _check(len(set(names)) == len(names), "embedding model names must be unique")
    _check(cfg.providers.attempts >= 1 and cfg.providers.max_in_flight >= 1, "providers.attempts and max_in_flight must be >= 1")


def parse_config(data: dict, root: Path, env: Optional[dict] = None) -> PipelineConfig:
    data = interpolate(data, env)
    roles = data.get("roles", {})
    extractor = _endpoint(roles.get("extractor"), "roles.extractor")
    qa_judge = _endpoint(roles.get("qa_judge"), "roles.qa_judge")
    generators = [_endpoint(g, "generators") for g in data.get("generators", [])]
    embedders = [_endpoint(e, "embedding_models") for e in data.get("embedding_models", [])]
    if not embedders:
        raise ConfigInvalid("at least one [[embedding_models]] entry is required")
    extra = sorted(set(roles) - {"extractor", "qa_generator", "qa_judge", "perturber", "utility_embedder"})
    if extra:
        raise ConfigInvalid(f"[roles] unknown roles: {', '.join(extra)}")
    output = data.get("output", {})
    cfg = PipelineConfig(
        root=root,
        output_dir=output.get("dir", "runs/default"),
        cache_dir=output.get("cache_dir"),
        extractor=extractor,
        qa_generator=_endpoint(roles["qa_generator"], "roles.qa_generator") if "qa_generator" in roles else extractor,
        qa_judge=qa_judge,
        perturber=_endpoint(roles["perturber"], "roles.perturber") if "perturber" in roles else extractor,
        utility_embedder=(
            _endpoint(roles["utility_embedder"], "roles.utility_embedder") if "utility_embedder" in roles else embedders[0]
        ),
        generators=generators,
        embedding_models=embedders,
        corpus=_build(CorpusConfig, data.get("corpus"), "corpus"),
        kg=_build(KGConfig, data.get("kg"), "kg"),
        qa=_build(QAConfig, data.get("qa"), "qa"),
        perturb=_build(PerturbConfig, data.get("perturb"), "perturb"),
        evaluate=_build(EvalConfig, data.get("evaluate"), "evaluate"),
        providers=_build(ProviderSettings, data.get("providers"), "providers"),
    )
    unknown = sorted(set(data) - {"roles", "output", "generators", "embedding_models", "corpus", "kg", "qa", "perturb", "evaluate", "providers"})
    if unknown:
        raise ConfigInvalid(f"unknown sections: {', '.join(unknown)}")
    validate(cfg)
    return cfg


def load_config(path: Path, env: Optional[dict] = None) -> PipelineConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigInvalid(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return parse_config(data, path.resolve().parent, env)
