"""Query construction and top-k passage retrieval.

The default backend is an in-process BM25 ranker (k1=1.2, b=0.75,
Lucene-style idf) over lowercased whitespace tokens; a remote embedding
service can be plugged in for dense scoring. Both backends break score
ties by (page_id, passage_index) ascending, so retrieval order is
deterministic for a fixed store.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import requests

from .core import EntityRef
from .knowledge import Passage, PassageStore
from .text import tokenize

DEFAULT_K = 5
BM25_K1 = 1.2
BM25_B = 0.75

DISAMBIGUATION_SUFFIX = "(disambiguation)"

QUERY_TEMPLATE = "Tell me a bio of {name}"


class RetrievalError(Exception):
    pass


class EmptyStore(RetrievalError):
    pass


class EndpointUnreachable(RetrievalError):
    pass


@dataclass(frozen=True)
class RetrievedPassage:
    passage: Passage
    score: float
    rank: int


@dataclass(frozen=True)
class RetrieverConfig:
    backend: str = "lexical"
    k: int = DEFAULT_K
    endpoint: Optional[str] = None

    def __post_init__(self) -> None:
        if self.backend not in ("lexical", "embedding_service"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.backend == "embedding_service" and not self.endpoint:
            raise ValueError("embedding_service backend requires an endpoint")
        if self.backend == "lexical" and self.endpoint:
            raise ValueError("lexical backend takes no endpoint")


def make_query(name: str) -> str:
    """Bio query for a target name, with any trailing disambiguation
    marker removed."""
    cleaned = name.strip()
    if cleaned.lower().endswith(DISAMBIGUATION_SUFFIX):
        cleaned = cleaned[: -len(DISAMBIGUATION_SUFFIX)].strip()
    return QUERY_TEMPLATE.format(name=cleaned)


class Bm25Index:
    """Okapi BM25 over a fixed list of passages.

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)); repeated query tokens
    contribute once per occurrence.
    """

    def __init__(self, passages: Sequence[Passage], k1: float = BM25_K1, b: float = BM25_B):
        self._passages = list(passages)
        self._k1 = k1
        self._b = b
        self._doc_tokens = [tokenize(p.text) for p in self._passages]
        self._doc_lengths = [len(toks) for toks in self._doc_tokens]
        n_docs = len(self._passages)
        self._avgdl = (sum(self._doc_lengths) / n_docs) if n_docs else 0.0
        df: dict[str, int] = {}
        for tokens in self._doc_tokens:
            for term in set(tokens):
                df[term] = df.get(term, 0) + 1
        self._idf = {
            term: math.log(1.0 + (n_docs - count + 0.5) / (count + 0.5))
            for term, count in df.items()
        }
        self._tf = [
            {term: tokens.count(term) for term in set(tokens)}
            for tokens in self._doc_tokens
        ]

    def score(self, query: str, doc_index: int) -> float:
        total = 0.0
        tf = self._tf[doc_index]
        dl = self._doc_lengths[doc_index]
        norm = self._k1 * (1.0 - self._b + self._b * dl / self._avgdl)
        for token in tokenize(query):
            idf = self._idf.get(token)
            if idf is None:
                continue
            freq = tf.get(token, 0)
            if freq == 0:
                continue
            total += idf * freq * (self._k1 + 1.0) / (freq + norm)
        return total

    def rank(self, query: str, k: int) -> list[RetrievedPassage]:
        scored = sorted(
            (
                (-self.score(query, i), p.page_id, p.passage_index, i)
                for i, p in enumerate(self._passages)
            ),
        )
        out = []
        for rank, (neg_score, _, _, i) in enumerate(scored[:k], start=1):
            out.append(RetrievedPassage(passage=self._passages[i], score=-neg_score, rank=rank))
        return out


def rank_passages_lexical(query: str, passages: Sequence[Passage], k: int) -> list[Passage]:
    """Top-k of the given passages by BM25 score against the query,
    scored over just these passages. Used for picking evidence inside a
    single entity page."""
    index = Bm25Index(passages)
    return [rp.passage for rp in index.rank(query, k)]


class _EmbeddingServiceClient:
    def __init__(self, endpoint: str, timeout: float = 30.0):
        self._endpoint = endpoint
        self._timeout = timeout

    def scores(self, query: str, texts: list[str]) -> list[float]:
        try:
            response = requests.post(
                self._endpoint,
                json={"query": query, "passages": texts},
                timeout=self._timeout,
            )
            response.raise_for_status()
        except requests.RequestException as exc:
            raise EndpointUnreachable(str(exc)) from exc
        payload = response.json()
        scores = payload.get("scores")
        if not isinstance(scores, list) or len(scores) != len(texts):
            raise EndpointUnreachable(
                f"embedding service returned {len(scores) if isinstance(scores, list) else 'no'}"
                f" scores for {len(texts)} passages"
            )
        return [float(s) for s in scores]


def retrieve(
    config: RetrieverConfig,
    store: PassageStore,
    query: str,
) -> list[RetrievedPassage]:
    """Top-k passages from the store for a query.

    Raises:
        EmptyStore: the store holds no passages.
        EndpointUnreachable: the embedding service failed or answered
            with a malformed score list.
    """
    passages = store.passages
    if not passages:
        raise EmptyStore("cannot retrieve from a store with no passages")
    if config.backend == "lexical":
        return Bm25Index(passages).rank(query, config.k)
    client = _EmbeddingServiceClient(config.endpoint)
    scores = client.scores(query, [p.text for p in passages])
    order = sorted(
        ((-scores[i], p.page_id, p.passage_index, i) for i, p in enumerate(passages)),
    )
    return [
        RetrievedPassage(passage=passages[i], score=-neg, rank=rank)
        for rank, (neg, _, _, i) in enumerate(order[: config.k], start=1)
    ]


def candidate_entities(passages: Sequence[RetrievedPassage]) -> list[EntityRef]:
    """Unique entities among retrieved passages, in first-appearance
    order, parenthetical disambiguators retained."""
    seen: set[str] = set()
    out: list[EntityRef] = []
    for rp in passages:
        if rp.passage.page_id in seen:
            continue
        seen.add(rp.passage.page_id)
        out.append(EntityRef(title=rp.passage.title, page_id=rp.passage.page_id))
    return out
