"""Scripted offline responses for every LLM role.

The responder reads the inputs back out of the fixed prompt layouts and
answers deterministically, so a whole pipeline run can happen without a
network. Generator models are selected by name:

* ``mock-echo``     always returns the reference answer
* ``mock-refuse``   always refuses
* ``mock-literal``  returns the reference answer only when it appears verbatim
                    in the supplied context, otherwise a wrong guess
"""

from __future__ import annotations

import json
import re
import threading
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

from . import prompts
from .providers import ChatRequest, MockBackend
from .textnorm import collapse_ws, contains

ECHO = "mock-echo"
REFUSE = "mock-refuse"
LITERAL = "mock-literal"
GENERATORS = (ECHO, REFUSE, LITERAL)
WRONG_GUESS = "unspecified amount"

# back-translation drift: a few word swaps that never touch numbers
_DRIFT = {
    "including": "such as",
    "about": "around",
    "during": "over",
    "rose": "increased",
    "mainly": "chiefly",
    "through": "via",
    "expects": "anticipates",
    "improved": "got better",
}
_DRIFT_RE = re.compile(r"\b(" + "|".join(_DRIFT) + r")\b")
_PIVOT_TAG = "[de] "

_TRIPLET = re.compile(r"^Triplet \d+: (\{.*\})$", re.M)
_META = re.compile(r"^- (File Type|Title|Country|Company|Year): (.+)$", re.M)
_PATTERN = re.compile(r"^Pattern: (\w+)$", re.M)

AnswerLoader = Callable[[], Mapping[str, str]]


def toy_root() -> Path:
    return Path(str(resources.files("rare") / "data" / "toy"))


def load_extraction_fixture(path: Optional[Path] = None) -> list[dict]:
    path = path or toy_root() / "extraction.json"
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _drift(text: str) -> str:
    return _DRIFT_RE.sub(lambda m: _DRIFT[m.group(1)], text)


def _capital(s: str) -> str:
    return s[:1].upper() + s[1:]


def restructure(question: str) -> str:
    """Move the clause after the first comma to the front."""
    body = question.rstrip("?").strip()
    head, sep, tail = body.partition(", ")
    if not sep:
        return f"Tell me, {body[:1].lower()}{body[1:]}?"
    return f"{_capital(tail)}, {head[:1].lower()}{head[1:]}?"


class ScriptedResponder:
    """Chat handler for :class:`MockBackend`; returns ``None`` for unknown prompts."""

    def __init__(
        self,
        triplets: Sequence[dict],
        answers: Optional[Mapping[str, str]] = None,
        answer_loader: Optional[AnswerLoader] = None,
        long_question_words: int = 16,
    ):
        self.triplets = list(triplets)
        self.answers: dict[str, str] = dict(answers or {})
        self.answer_loader = answer_loader
        self.long_question_words = long_question_words
        self._lock = threading.Lock()
        self._loaded = False

    def __call__(self, req: ChatRequest) -> Optional[str]:
        s = req.system_prompt
        if req.model in GENERATORS:
            return self._generate(req)
        if "extract knowledge-graph triplets" in s:
            return self._extract(req.user_prompt)
        if s.startswith("Write one natural"):
            return self._single_hop(req.user_prompt)
        if s.startswith("You design multi-hop"):
            return self._multi_hop(req.user_prompt)
        if s.startswith("You evaluate"):
            return self._quality(req.user_prompt, "reasonableness" in s)
        if s == prompts.GRAMMAR_SYSTEM:
            return restructure(_question(req.user_prompt))
        if s == prompts.IRRELEVANT_SYSTEM:
            # the retry adds less, as a real rewriter told to stay closer would
            aside = " (for a class)?" if "(Attempt" in req.user_prompt else ", asked for a class?"
            return _question(req.user_prompt).rstrip("?") + aside
        if s.startswith("Translate the user's text into"):
            return self._translate(req.user_prompt, s)
        if s.startswith("Paraphrase"):
            return _drift(_text(req.user_prompt))
        return None

    # extraction and QA generation

    def _extract(self, user: str) -> str:
        out = []
        for block in user.split("\n\n---\n\n"):
            first, _, text = block.partition("\n")
            cid = first.removeprefix("Chunk ID: ").strip()
            flat = collapse_ws(text)
            for t in self.triplets:
                if collapse_ws(t["source_sentence"]) in flat:
                    out.append({**t, "answer_chunk_id": cid})
        return json.dumps(out)

    def _single_hop(self, user: str) -> str:
        t = json.loads(_TRIPLET.search(user).group(1))
        meta = dict(_META.findall(user))
        source = meta.get("Title") or meta.get("Company") or meta.get("Country") or "report"
        q = f"{_capital(t['entity_1'])} {t['relation']} what, according to the {source}?"
        return json.dumps({"question": q, "answer": t["entity_2"]})

    def _multi_hop(self, user: str) -> str:
        kind = _PATTERN.search(user).group(1)
        ts = [json.loads(m) for m in _TRIPLET.findall(user)]
        if kind == "chained":
            rels = " and then ".join(f"'{t['relation']}'" for t in ts[1:])
            q = f"Starting from what {ts[0]['entity_1']} {ts[0]['relation']}, which entity is reached by following {rels}?"
            answer = ts[-1]["entity_2"]
        elif kind == "star":
            known = " and ".join(f"{t['relation']} {t['entity_2']}" for t in ts[:-1])
            q = f"The entity that {known} also {ts[-1]['relation']} what?"
            answer = ts[-1]["entity_2"]
        else:
            known = " and ".join(f"{t['entity_1']} {t['relation']}" for t in ts[:-1])
            q = f"Which entity {ts[-1]['relation']} the same thing that {known}?"
            answer = ts[-1]["entity_1"]
        return json.dumps({"question": q, "answer": answer})

    def _quality(self, user: str, multi_hop: bool) -> str:
        question = _question(user)
        clarity = 3 if len(question.split()) > self.long_question_words else 4
        dims = {"clarity": clarity, "correctness": 5}
        if multi_hop:
            dims["reasonableness"] = 4
        return json.dumps({"score": sum(dims.values()) / len(dims), "dimension_scores": dims})

    def _translate(self, user: str, system: str) -> str:
        text = _text(user)
        if "into English" in system:
            return _drift(text.removeprefix(_PIVOT_TAG))
        return _PIVOT_TAG + text

    # generators under test

    def reference(self, question: str) -> Optional[str]:
        key = collapse_ws(question)
        if key not in self.answers and self.answer_loader is not None:
            with self._lock:
                if not self._loaded:
                    self.answers.update({collapse_ws(k): v for k, v in self.answer_loader().items()})
                    self._loaded = True
        return self.answers.get(key)

    def _generate(self, req: ChatRequest) -> str:
        question, _, context = req.user_prompt.partition("\nContext: ")
        question = question.removeprefix("Question: ")
        ref = self.reference(question)
        if req.model == REFUSE:
            answer = prompts.REFUSAL
        elif req.model == ECHO:
            answer = ref if ref is not None else WRONG_GUESS
        else:
            answer = ref if ref is not None and context and contains(context, ref) else WRONG_GUESS
        return json.dumps({"cot_answer": "scripted", "answer": answer})


def _question(user: str) -> str:
    first = user.splitlines()[0] if user else ""
    return first.removeprefix("Question: ").strip()


def _text(user: str) -> str:
    body = user.removeprefix("Text:\n")
    return re.sub(r"\n\n\(Attempt \d+: .*\)$", "", body)


def scripted_backend(
    triplets: Optional[Sequence[dict]] = None,
    answer_loader: Optional[AnswerLoader] = None,
    responses: Optional[Mapping[str, str]] = None,
) -> tuple[MockBackend, ScriptedResponder]:
    responder = ScriptedResponder(triplets if triplets is not None else load_extraction_fixture(), answer_loader=answer_loader)
    return MockBackend(responses, handler=responder), responder
