"""Prompt templates for every LLM role in the pipeline.

User prompts use a fixed line layout ("Chunk ID: ...", "Triplet N: {...}",
"Question: ...", "[Doc] ...") so responses can be replayed from fixtures and
so offline handlers can read the inputs back.
"""

from __future__ import annotations

import json
from typing import Iterable, Optional, Sequence

REFUSAL = "no such info"

DOMAIN_FOCUS = {
    "finance": (
        "a financial analyst reading annual reports of listed companies",
        "performance metrics, operational activities and financial events; prefer relations that "
        "would apply to any company in the same industry",
    ),
    "economics": (
        "an economist reading national economic surveys",
        "policy measures, key economic indicators and patterns of national development",
    ),
    "policy": (
        "a public-policy analyst reading program performance reports",
        "fund allocation, program implementation and beneficiary data",
    ),
    "other": (
        "a domain analyst reading technical documents",
        "the central facts, quantities and events described in the text",
    ),
}

DOMAIN_NOUN = {"finance": "finance", "economics": "economics", "policy": "public policy", "other": "general"}


def _focus(domain: str) -> tuple[str, str]:
    return DOMAIN_FOCUS.get(domain, DOMAIN_FOCUS["other"])


def extraction_system(domain: str) -> str:
    persona, emphasis = _focus(domain)
    return f"""You are {persona}. Read the consecutive text chunks below (all from one document) and extract knowledge-graph triplets of the form {{"entity_1", "relation", "entity_2"}}.

Every triplet must be stated by exactly one chunk. Other chunks may be used to find triplets that connect to each other. Focus on {emphasis}.

Look for three connection shapes:
1. Chain: the entity_2 of one triplet is the entity_1 of the next one, ideally stated in a different chunk.
   e.g. {{"entity_1": "Luxembourg", "relation": "implemented", "entity_2": "free public transport"}} then {{"entity_1": "free public transport", "relation": "aims to reduce", "entity_2": "carbon emissions"}}
2. Star: one entity_1 with several different relations, each from its own chunk.
3. Inverted star: different entity_1 values pointing at the same entity_2.
Skip a shape when the text does not support it.

Fields of every triplet:
- entity_1, relation, entity_2 (strings)
- answer_chunk_id: the chunk ID printed at the top of the chunk the triplet comes from
- source_sentence: the supporting sentence copied character for character from that chunk; for tables give only the relevant row, column and value

Relations: short (2-4 words), reusable across documents of this kind, no dates or one-off details ("implemented", "invests in", "faces challenges in").
Entities: specific (never "the country" or "the company"), and always named the same way throughout.

Aim for 15 to 20 triplets. Answer with a JSON array of triplet objects only. If nothing qualifies, answer with []."""


def extraction_user(chunks: Iterable[tuple[str, str]]) -> str:
    return "\n\n---\n\n".join(f"Chunk ID: {cid}\n{text}" for cid, text in chunks)


def _meta_lines(meta: dict) -> str:
    labels = [
        ("file_type", "File Type"),
        ("title", "Title"),
        ("country", "Country"),
        ("company", "Company"),
        ("year", "Year"),
    ]
    lines = [f"- {label}: {meta[k]}" for k, label in labels if meta.get(k) not in (None, "")]
    return "\n".join(lines) or "- (none)"


def single_hop_system(domain: str) -> str:
    noun = DOMAIN_NOUN.get(domain, "general")
    return f"""Write one natural {noun} question-answer pair from a triplet (entity_1, relation, entity_2), the text chunk it was extracted from, and the document metadata.

Rules:
- The answer is either entity_1 or entity_2, copied as it appears in the text; the question is built from the other entity, the relation and enough context (names, places, years from the metadata) to point at this one chunk.
- Only information in the text may be used.
- Refer to a country or company by its name, not as "the government" or "the company".
- The question must not contain the answer.
- If the triplet is too generic to single out one passage, return empty strings for both fields.

Example: triplet {{"entity_1": "inflation", "relation": "is", "entity_2": "2.9% in 2023"}} from a 2023 survey of Luxembourg gives
{{"question": "What is the inflation of Luxembourg in 2023?", "answer": "2.9%"}}

Answer with JSON only: {{"question": "...", "answer": "..."}}"""


def single_hop_user(triplet: dict, chunk_text: str, meta: dict) -> str:
    return (
        f"Triplet 1: {json.dumps(triplet, ensure_ascii=False)}\n\n"
        f"Text Context:\n{chunk_text}\n\n"
        f"Metadata:\n{_meta_lines(meta)}"
    )


def multi_hop_system() -> str:
    return """You design multi-hop retrieval questions. You receive triplets that share a pivot entity and the chunks they came from.

Shapes:
- chained: tail of triplet 1 == head of triplet 2 (A -> B -> C, pivot B)
- star: all triplets share their head (pivot = the shared head; A and C are tails)
- inverted_star: all triplets share their tail (pivot = the shared tail; A and C are heads)

Procedure:
1. Choose the answer: an end entity (A or C), never the pivot.
2. Write one fluent, specific question that needs evidence from at least two chunks: one hop identifies the pivot through the other end entity and its relation, the next hop goes from the pivot to the answer.
3. Mention the pivot only indirectly. Never write the answer in the question.
4. Add concrete context (names, years, places) so the question is not vague.
5. Give the answer as a short phrase, exactly as supported by the chunks.

Quality checks:
- Pivot rarity: if the pivot is generic (fewer than two meaningful words, e.g. "measures", "it"), return empty strings.
- Single-chunk safety: if one chunk alone answers the question, return empty strings.

Example: ("forward-looking fuel-tax trajectory", "would reduce", "reliance on combustion-engine cars") and ("reliance on combustion-engine cars", "drives", "transport-sector emissions") give
{"question": "Which forward-looking tax trajectory is proposed to cut the main driver of transport-sector emissions?", "answer": "forward-looking fuel-tax trajectory"}

Answer with JSON only: {"question": "...", "answer": "..."}"""


def multi_hop_user(kind: str, pivot: str, triplets: Sequence[dict], chunks: Sequence[tuple[str, str]], meta: dict) -> str:
    lines = [f"Pattern: {kind}", f"Pivot: {pivot}"]
    for i, t in enumerate(triplets, 1):
        lines.append(f"Triplet {i}: {json.dumps(t, ensure_ascii=False)}")
    for i, (cid, text) in enumerate(chunks, 1):
        lines.append(f"\nChunk {i} ({cid}):\n{text}")
    lines.append(f"\nMetadata:\n{_meta_lines(meta)}")
    return "\n".join(lines)


def quality_system(multi_hop: bool) -> str:
    scale = """Score each dimension from 1 (unusable) to 5 (excellent):"""
    dims = []
    if multi_hop:
        dims.append("- reasonableness: a natural question that genuinely needs every hop (3 = one chunk would do with assumptions)")
    dims.append("- clarity: unambiguous wording of question and answer (3 = some vagueness, meaning recoverable)")
    dims.append("- correctness: the answer agrees with every fact in the chunks (3 = one factual slip)")
    keys = (['"reasonableness": <1-5>, '] if multi_hop else []) + ['"clarity": <1-5>, "correctness": <1-5>']
    kind = "multi-hop" if multi_hop else "single-hop"
    return (
        f"You evaluate {kind} benchmark questions against their source text.\n{scale}\n"
        + "\n".join(dims)
        + '\n\nAnswer with JSON only: {"score": <mean>, "dimension_scores": {'
        + "".join(keys)
        + "}}"
    )


def quality_user(question: str, answer: str, chunks: Sequence[tuple[str, str]]) -> str:
    body = "\n\n".join(f"[{cid}]\n{text}" for cid, text in chunks)
    return f"Question: {question}\nAnswer: {answer}\n\nText chunks:\n{body}"


def generator_system(domain: str) -> str:
    noun = DOMAIN_NOUN.get(domain, "general")
    return f"""You are a {noun} expert answering a question from the contexts supplied with it.
Use only those contexts. Reason step by step in "cot_answer", then put the bare answer in "answer": a short phrase or figure, no full sentence, no "according to the context".
If the contexts do not contain the answer, "answer" must be exactly "{REFUSAL}".

Example: Question: What was Apple's revenue in Q2 2023? Context: [Doc] ... The Company posted quarterly revenue of $94.8 billion, down 2.5 percent year over year.
{{"cot_answer": "The context reports quarterly revenue of $94.8 billion for fiscal Q2 2023.", "answer": "$94.8 billion"}}

Answer with JSON only: {{"cot_answer": "...", "answer": "..."}}"""


def closed_book_system(domain: str) -> str:
    noun = DOMAIN_NOUN.get(domain, "general")
    return f"""You are a {noun} expert. Answer the question from your own knowledge; no documents are provided.
Reason step by step in "cot_answer", then put the bare answer in "answer" (a short phrase or figure).
If you do not know, "answer" must be exactly "{REFUSAL}".

Answer with JSON only: {{"cot_answer": "...", "answer": "..."}}"""


def generator_user(question: str, contexts: Sequence[str]) -> str:
    if not contexts:
        return f"Question: {question}"
    docs = "\n".join(f"[Doc] {c}" for c in contexts)
    return f"Question: {question}\nContext: {docs}"


GRAMMAR_SYSTEM = """Rewrite the user's question with a different grammatical structure (reorder clauses, change voice or question form) while keeping its meaning, every name and every number unchanged. Return only the rewritten question."""

IRRELEVANT_SYSTEM = """Add one short clause or sentence of irrelevant background to the user's question (for example why the asker is curious) without changing what is being asked. Keep every name and number. Return only the new question."""


def rewrite_user(question: str, attempt: int = 0) -> str:
    note = "" if attempt == 0 else f"\n(Attempt {attempt + 1}: keep every number and name exactly as written.)"
    return f"Question: {question}{note}"


def translate_system(target: str) -> str:
    return (
        f"Translate the user's text into {target}. Keep every number, date, amount, name and "
        f"table row exactly. Return only the translation."
    )


def translate_user(text: str, attempt: int = 0) -> str:
    note = "" if attempt == 0 else f"\n\n(Attempt {attempt + 1}: do not drop any figure.)"
    return f"Text:\n{text}{note}"


def paraphrase_system(keep: Optional[str]) -> str:
    keep_line = f' The phrase "{keep}" must appear verbatim in your output.' if keep else ""
    return (
        "Paraphrase the user's text with different wording and sentence structure while preserving every fact, "
        f"number and name.{keep_line} Return only the paraphrase."
    )
