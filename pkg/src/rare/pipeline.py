"""Stage orchestration: every stage reads artifacts, writes artifacts, and is
skipped when its fingerprint (config section + input digests) is unchanged."""

from __future__ import annotations

import json
import logging
import re
import threading
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from . import __version__
from .config import Endpoint, PipelineConfig
from .errors import ConfigInvalid, MissingArtifact, RareError
from .evalcore import AnswerMatcher, EvalSettings, GenerationRecord, JudgeVerdict, MetricOptions, RAGGenerator, aggregate_report, evaluate
from .ingest import Chunk, SourceDocument, chunk_corpus, load_corpus
from .io import atomic_write_text, dumps, file_digest, read_json, read_jsonl, sha256_bytes, write_json, write_jsonl
from .kgraph import KnowledgeGraph, build_corpus_graph, extract_corpus, normalize_relations
from .patterns import MULTI_HOP, PatternInstance, find_all, pattern_stats
from .perturb import (
    DocVariant,
    QueryVariant,
    SimilarityGuard,
    ground_truth_variant,
    load_lexicon,
    perturb_char,
    perturb_doc_backtranslate,
    perturb_doc_remove_answer,
    perturb_llm,
    perturb_word,
)
from .providers import OpenAICompatBackend, ProviderClient, ResponseCache
from .qagen import QAPair, generate_multi_hop, generate_single_hop, quality_gate, split_benchmark
from .retrieval import RetrievalSet, VectorIndex, build_index, decide_availability, retrieve

log = logging.getLogger(__name__)

STAGES = ("ingest", "extract_kg", "patterns", "genqa", "perturb", "index", "evaluate", "report")
MANIFEST = "manifest.json"


def model_slug(model: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "__", model)


@dataclass
class StageSpec:
    name: str
    inputs: list[str]
    outputs: list[str]
    sections: list[str]
    run: Callable[[], None]


@dataclass
class StageResult:
    name: str
    skipped: bool
    outputs: dict[str, str] = field(default_factory=dict)


class Pipeline:
    """Runs the benchmark stages against one config.

    In ``mock`` mode every role is served by the scripted offline backend and
    nothing touches the network.
    """

    def __init__(self, config: PipelineConfig, mock: bool = False, backend=None):
        self.cfg = config
        self.mock = mock
        self.out = config.out
        self._backend = backend
        self._clients: dict[tuple[str, str], ProviderClient] = {}
        self._lock = threading.Lock()
        self.responder = None
        if mock and backend is None:
            from .mock import scripted_backend

            fixture = config.corpus_dir / "mock" / "extraction.json"
            triplets = json.loads(fixture.read_text(encoding="utf-8")) if fixture.exists() else None
            self._backend, self.responder = scripted_backend(triplets, answer_loader=self._reference_answers)

    # providers

    def client(self, endpoint: Endpoint) -> ProviderClient:
        key = ("mock", "") if self._backend is not None else (endpoint.base_url, endpoint.api_key)
        with self._lock:
            if key not in self._clients:
                self._clients[key] = ProviderClient(
                    self._backend if self._backend is not None else self._http(endpoint),
                    ResponseCache(self.cfg.cache_path),
                    attempts=self.cfg.providers.attempts,
                    backoff=self.cfg.providers.backoff,
                    max_in_flight=self.cfg.providers.max_in_flight,
                )
            return self._clients[key]

    def _http(self, endpoint: Endpoint) -> OpenAICompatBackend:
        if not endpoint.base_url:
            raise ConfigInvalid(f"model {endpoint.model!r} has no base_url (set it in the config or use --mock)")
        return OpenAICompatBackend(endpoint.base_url, endpoint.api_key, timeout=self.cfg.providers.timeout)

    @property
    def network_calls(self) -> int:
        return sum(c.network_calls for c in self._clients.values())

    # artifact helpers

    def path(self, name: str) -> Path:
        return self.out / name

    def _need(self, stage: str, name: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise MissingArtifact(stage, str(p))
        return p

    def chunks(self) -> list[Chunk]:
        return read_jsonl(self._need("ingest", "chunks.jsonl"), Chunk.from_dict)

    def chunk_map(self) -> dict[str, Chunk]:
        return {c.chunk_id: c for c in self.chunks()}

    def documents(self) -> list[SourceDocument]:
        return read_jsonl(self._need("ingest", "documents.jsonl"), SourceDocument.from_dict)

    def accepted(self) -> list[QAPair]:
        return read_jsonl(self._need("genqa", "qa.accepted.jsonl"), QAPair.from_dict)

    def eval_qas(self) -> list[QAPair]:
        qas = self.accepted()
        split = self.cfg.qa.eval_split
        if split == "all":
            return qas
        ids = set(read_json(self._need("genqa", "split.json"))[split])
        return [q for q in qas if q.qa_id in ids]

    def _reference_answers(self) -> dict[str, str]:
        """Question text (original and every variant) -> reference answer; for the scripted generators."""
        answers: dict[str, str] = {}
        if not self.path("qa.accepted.jsonl").exists():
            return answers
        by_id = {q.qa_id: q for q in self.accepted()}
        answers.update({q.question: q.answer for q in by_id.values()})
        if self.path("query_variants.jsonl").exists():
            for v in read_jsonl(self.path("query_variants.jsonl"), QueryVariant.from_dict):
                if v.qa_id in by_id:
                    answers[v.text] = by_id[v.qa_id].answer
        return answers

    def _index_file(self, model: str) -> str:
        return f"index.{model_slug(model)}.jsonl"

    # stage table

    def specs(self) -> dict[str, StageSpec]:
        indexes = [self._index_file(e.model) for e in self.cfg.embedding_models]
        return {
            "ingest": StageSpec("ingest", [], ["documents.jsonl", "chunks.jsonl"], ["corpus"], self.stage_ingest),
            "extract_kg": StageSpec(
                "extract_kg",
                ["chunks.jsonl", "documents.jsonl"],
                ["triplets.raw.jsonl", "triplets.jsonl", "kg.json"],
                ["kg", "extractor", "utility_embedder"],
                self.stage_extract_kg,
            ),
            "patterns": StageSpec("patterns", ["kg.json"], ["patterns.jsonl", "pattern_stats.json"], ["kg"], self.stage_patterns),
            "genqa": StageSpec(
                "genqa",
                ["patterns.jsonl", "chunks.jsonl", "documents.jsonl"],
                ["qa.accepted.jsonl", "qa.rejected.jsonl", "split.json"],
                ["qa", "qa_generator", "qa_judge"],
                self.stage_genqa,
            ),
            "perturb": StageSpec(
                "perturb",
                ["qa.accepted.jsonl", "split.json", "chunks.jsonl"],
                ["query_variants.jsonl", "doc_variants.jsonl", "perturb_failures.jsonl"],
                ["perturb", "perturber", "utility_embedder", "qa"],
                self.stage_perturb,
            ),
            "index": StageSpec(
                "index",
                ["chunks.jsonl", "qa.accepted.jsonl", "split.json"],
                indexes + ["retrieval_sets.jsonl"],
                ["embedding_models", "evaluate", "qa"],
                self.stage_index,
            ),
            "evaluate": StageSpec(
                "evaluate",
                ["qa.accepted.jsonl", "split.json", "query_variants.jsonl", "doc_variants.jsonl", "retrieval_sets.jsonl", "chunks.jsonl"],
                ["generations.jsonl", "verdicts.jsonl"],
                ["evaluate", "generators", "utility_embedder", "embedding_models", "qa"],
                self.stage_evaluate,
            ),
            "report": StageSpec(
                "report",
                ["verdicts.jsonl", "qa.accepted.jsonl"],
                ["report.json", "report.csv", "report.md"],
                ["evaluate"],
                self.stage_report,
            ),
        }

    def _producer(self, artifact: str) -> str:
        for spec in self.specs().values():
            if artifact in spec.outputs:
                return spec.name
        return "ingest"

    def fingerprint(self, spec: StageSpec) -> str:
        parts = {
            "stage": spec.name,
            "version": __version__,
            "mock": self.mock,
            "config": {s: self.cfg.section(s) for s in spec.sections},
        }
        if spec.name == "ingest":
            parts["corpus"] = self._corpus_digest()
        else:
            parts["inputs"] = {
                name: file_digest(self._need(self._producer(name), name)) for name in spec.inputs
            }
        return sha256_bytes(json.dumps(parts, sort_keys=True, default=str).encode("utf-8"))

    def _corpus_digest(self) -> str:
        root = self.cfg.corpus_dir
        if not root.is_dir():
            raise ConfigInvalid(f"corpus directory not found: {root}")
        entries = [
            [p.relative_to(root).as_posix(), file_digest(p)] for p in sorted(root.rglob("*")) if p.is_file()
        ]
        return sha256_bytes(json.dumps(entries).encode("utf-8"))

    def _manifest(self) -> dict:
        p = self.path(MANIFEST)
        if p.exists():
            return read_json(p)
        return {"tool_version": __version__, "stages": {}}

    def run_stage(self, name: str, force: bool = False) -> StageResult:
        spec = self.specs()[name]
        fp = self.fingerprint(spec)
        manifest = self._manifest()
        entry = manifest["stages"].get(name)
        if not force and entry and entry.get("fingerprint") == fp and self._outputs_intact(entry):
            log.info("stage %s is up to date; skipping", name)
            return StageResult(name, True, entry["outputs"])
        log.info("running stage %s", name)
        self.out.mkdir(parents=True, exist_ok=True)
        spec.run()
        outputs = {o: file_digest(self.path(o)) for o in spec.outputs}
        manifest = self._manifest()
        manifest["tool_version"] = __version__
        manifest["stages"][name] = {"fingerprint": fp, "outputs": outputs, "mock": self.mock}
        write_json(self.path(MANIFEST), manifest)
        return StageResult(name, False, outputs)

    def _outputs_intact(self, entry: dict) -> bool:
        for name, digest in entry.get("outputs", {}).items():
            p = self.path(name)
            if not p.exists() or file_digest(p) != digest:
                return False
        return True

    def run_all(self, force: bool = False, until: Optional[str] = None) -> list[StageResult]:
        results = []
        for name in STAGES:
            results.append(self.run_stage(name, force))
            if name == until:
                break
        return results

    # stages

    def stage_ingest(self) -> None:
        docs = load_corpus(self.cfg.corpus_dir, self.cfg.corpus.domain)
        chunks = chunk_corpus(docs, self.cfg.corpus.chunk_budget)
        write_jsonl(self.path("documents.jsonl"), docs)
        write_jsonl(self.path("chunks.jsonl"), chunks)
        log.info("ingested %d documents into %d chunks", len(docs), len(chunks))

    def stage_extract_kg(self) -> None:
        docs = self.documents()
        chunks = self.chunks()
        kg_cfg = self.cfg.kg
        ex = self.cfg.extractor
        raw = extract_corpus(
            self.client(ex), ex.model, chunks, {d.doc_id: d.domain for d in docs},
            kg_cfg.window, kg_cfg.stride, self.cfg.providers.max_in_flight,
        )
        emb = self.cfg.utility_embedder
        normalized, clusters = normalize_relations(raw, self.client(emb), emb.model, kg_cfg.tau_rel)
        kg = build_corpus_graph(normalized)
        write_jsonl(self.path("triplets.raw.jsonl"), raw)
        write_jsonl(self.path("triplets.jsonl"), normalized)
        write_json(self.path("kg.json"), kg.to_dict(clusters))
        log.info("extracted %d triplets; graph has %d nodes, %d edges", len(raw), len(kg.names), len(kg.edges))

    def stage_patterns(self) -> None:
        kg = KnowledgeGraph.from_dict(read_json(self._need("extract_kg", "kg.json")))
        instances = find_all(kg, self.cfg.kg.max_chain, edge_cap=self.cfg.kg.edge_cap)
        write_jsonl(self.path("patterns.jsonl"), [i.to_dict() for i in instances])
        write_json(self.path("pattern_stats.json"), pattern_stats(instances))

    def stage_genqa(self) -> None:
        instances = read_jsonl(self._need("patterns", "patterns.jsonl"), PatternInstance.from_dict)
        chunks = self.chunk_map()
        meta = {d.doc_id: d.meta for d in self.documents()}
        gen, judge = self.cfg.qa_generator, self.cfg.qa_judge
        if gen.model == judge.model:
            log.warning("qa_judge and qa_generator share model %r; the quality gate is self-graded", gen.model)
        gclient, jclient = self.client(gen), self.client(judge)

        def make(inst: PatternInstance) -> Optional[QAPair]:
            try:
                doc = chunks[inst.chunk_ids[0]].doc_id
                if inst.kind in MULTI_HOP:
                    return generate_multi_hop(inst, chunks, meta[doc], gclient, gen.model)
                return generate_single_hop(inst, chunks[inst.chunk_ids[0]], meta[doc], gclient, gen.model)
            except RareError as exc:
                log.warning("QA generation failed for a %s instance: %s", inst.kind, exc)
                return None

        workers = self.cfg.providers.max_in_flight
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = [p for p in pool.map(make, instances) if p is not None]
        pairs = list({p.qa_id: p for p in reversed(pairs)}.values())[::-1]

        def gate(pair: QAPair):
            try:
                return quality_gate(pair, chunks, jclient, judge.model, self.cfg.qa.threshold)
            except RareError as exc:
                log.warning("quality judge failed for %s: %s", pair.qa_id, exc)
                return False, None

        with ThreadPoolExecutor(max_workers=workers) as pool:
            gates = list(pool.map(gate, pairs))
        accepted, rejected = [], []
        for pair, (ok, scores) in zip(pairs, gates):
            if ok:
                accepted.append(pair)
            else:
                rejected.append({**json.loads(dumps(pair)), "scores": json.loads(dumps(scores)) if scores else None})
        split = split_benchmark(accepted, self.cfg.qa.test_quota, self.cfg.qa.seed)
        write_jsonl(self.path("qa.accepted.jsonl"), accepted)
        write_jsonl(self.path("qa.rejected.jsonl"), rejected)
        write_json(self.path("split.json"), {"train": split.train, "test": split.test})
        log.info("accepted %d of %d generated QA pairs", len(accepted), len(pairs))

    def stage_perturb(self) -> None:
        qas = self.eval_qas()
        chunks = self.chunk_map()
        pc = self.cfg.perturb
        lexicon = load_lexicon(Path(self.cfg._resolve(pc.lexicon)) if pc.lexicon else None)
        llm = self.cfg.perturber
        emb = self.cfg.utility_embedder
        lclient = self.client(llm)
        qguard = SimilarityGuard(self.client(emb), emb.model, pc.tau_q)
        dguard = SimilarityGuard(self.client(emb), emb.model, pc.tau_d)

        def one(qa: QAPair):
            protected = (qa.answer,)
            qvs: list[QueryVariant] = [QueryVariant(qa.qa_id, "original", qa.question, pc.seed)]
            dvs: list[DocVariant] = [ground_truth_variant(qa, chunks)]
            failures = []
            steps = [
                ("char_level", lambda: perturb_char(qa.question, pc.seed, qa.qa_id, protected)),
                ("word_level", lambda: perturb_word(qa.question, pc.seed, lexicon, qa.qa_id, protected)),
                ("grammar", lambda: perturb_llm(qa.question, "grammar", lclient, llm.model, qguard, qa.qa_id, pc.seed, protected)),
                ("irrelevant_info", lambda: perturb_llm(qa.question, "irrelevant_info", lclient, llm.model, qguard, qa.qa_id, pc.seed, protected)),
            ]
            for kind, fn in steps:
                try:
                    qvs.append(fn())
                except RareError as exc:
                    failures.append({"qa_id": qa.qa_id, "kind": kind, "reason": str(exc)})
            doc_steps = [
                ("answer_removed", lambda: perturb_doc_remove_answer(qa, chunks)),
                ("back_translated", lambda: perturb_doc_backtranslate(qa, chunks, lclient, llm.model, dguard, pc.pivot_language)),
            ]
            for kind, fn in doc_steps:
                try:
                    dvs.append(fn())
                except RareError as exc:
                    failures.append({"qa_id": qa.qa_id, "kind": kind, "reason": str(exc)})
            return qvs, dvs, failures

        with ThreadPoolExecutor(max_workers=self.cfg.providers.max_in_flight) as pool:
            results = list(pool.map(one, qas))
        write_jsonl(self.path("query_variants.jsonl"), [v for q, _, _ in results for v in q])
        write_jsonl(self.path("doc_variants.jsonl"), [v for _, d, _ in results for v in d])
        write_jsonl(self.path("perturb_failures.jsonl"), [f for _, _, fs in results for f in fs])

    def stage_index(self) -> None:
        chunks = self.chunks()
        by_id = {c.chunk_id: c for c in chunks}
        qas = self.eval_qas()
        sets: list[RetrievalSet] = []
        for emb in self.cfg.embedding_models:
            client = self.client(emb)
            index = build_index(client, emb.model, chunks)
            index.save(self.path(self._index_file(emb.model)))
            for qa in qas:
                rs = retrieve(index, client, qa.question, self.cfg.evaluate.k, qa.qa_id)
                rs.answer_available = decide_availability(rs, qa, by_id)
                sets.append(rs)
        write_jsonl(self.path("retrieval_sets.jsonl"), sets)

    def stage_evaluate(self) -> None:
        qas = self.eval_qas()
        chunks = self.chunk_map()
        qvars: dict[str, dict[str, QueryVariant]] = defaultdict(dict)
        for v in read_jsonl(self._need("perturb", "query_variants.jsonl"), QueryVariant.from_dict):
            qvars[v.qa_id][v.kind] = v
        dvars: dict[str, dict[str, DocVariant]] = defaultdict(dict)
        for v in read_jsonl(self._need("perturb", "doc_variants.jsonl"), DocVariant.from_dict):
            dvars[v.qa_id][v.kind] = v
        rsets: dict[str, list[RetrievalSet]] = defaultdict(list)
        for rs in read_jsonl(self._need("index", "retrieval_sets.jsonl"), RetrievalSet.from_dict):
            rsets[rs.qa_id].append(rs)

        ec = self.cfg.evaluate
        settings = EvalSettings(ec.judge_mode, tuple(ec.refusal_phrases), self.cfg.providers.max_in_flight, ec.fold_retrieval)
        emb = self.cfg.utility_embedder
        matcher = AnswerMatcher(self.client(emb), emb.model, ec.match_threshold)
        retriever = self._retriever(chunks) if ec.fold_retrieval else None

        records: list[GenerationRecord] = []
        verdicts: list[JudgeVerdict] = []
        for g in self.cfg.generators:
            gen = RAGGenerator(self.client(g), g.model)
            recs, vs = evaluate(gen, matcher, qas, qvars, dvars, rsets, chunks, settings, retriever)
            records += recs
            verdicts += vs
        if matcher.errors:
            log.warning("embedding stage of the matcher failed %d times (treated as no match)", matcher.errors)
        write_jsonl(self.path("generations.jsonl"), records)
        write_jsonl(self.path("verdicts.jsonl"), verdicts)

    def _retriever(self, chunks: dict[str, Chunk]):
        indexes = {
            e.model: (VectorIndex.load(self._need("index", self._index_file(e.model)), e.model), self.client(e))
            for e in self.cfg.embedding_models
        }

        def run(qa: QAPair, query: str, model: str) -> RetrievalSet:
            index, client = indexes[model]
            rs = retrieve(index, client, query, self.cfg.evaluate.k, qa.qa_id)
            rs.answer_available = decide_availability(rs, qa, chunks)
            return rs

        return run

    def build_report(self, mode: Optional[str] = None):
        ec = self.cfg.evaluate
        mode = mode or ec.judge_mode
        verdicts = read_jsonl(self._need("evaluate", "verdicts.jsonl"), JudgeVerdict.from_dict)
        qas = {q.qa_id: q for q in self.accepted()}
        opts = MetricOptions("f" if mode == ec.judge_mode else "f_lenient", ec.include_original_in_query, ec.fold_retrieval)
        return aggregate_report(verdicts, qas, opts, mode)

    def stage_report(self) -> None:
        ec = self.cfg.evaluate
        report = self.build_report()
        data = report.to_dict()
        markdown = report.to_markdown()
        if ec.report_both and ec.judge_mode == "strict":
            alt = self.build_report("lenient")
            data["alternate"] = alt.to_dict()
            markdown += "\n" + alt.to_markdown()
        write_json(self.path("report.json"), data)
        atomic_write_text(self.path("report.csv"), report.to_csv())
        atomic_write_text(self.path("report.md"), markdown)
