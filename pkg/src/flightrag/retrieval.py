"""Keyword, latent, vector, and hybrid search over the article corpus.

All methods return a RankedList with scores sorted descending (distance
based methods are converted to similarity first) and doc_id tie-breaking,
so rankings are deterministic and permutation-invariant to corpus order.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .flight_store import Article

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_SUBTOKEN_RE = re.compile(r"[a-z]+|[0-9]+")


class BasisUnavailable(Exception):
    pass


class EmptyCandidates(Exception):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens plus letter/digit sub-tokens.

    A code like "KL1000" yields ["kl1000", "kl", "1000"], so a bare "1000"
    in a question still matches the article containing the full code.
    """
    tokens: list[str] = []
    for tok in _TOKEN_RE.findall(text.lower()):
        tokens.append(tok)
        parts = _SUBTOKEN_RE.findall(tok)
        if len(parts) > 1:
            tokens.extend(parts)
    return tokens


@dataclass(frozen=True)
class IndexConfig:
    k1: float = 1.2
    b: float = 0.75
    rrf_k: int = 60
    w_keyword: float = 0.9
    w_vector: float = 0.1
    lsi_rank: int = 100
    embedder: str = "hashing"
    embedding_dim: int = 256


@dataclass(frozen=True)
class RankedList:
    entries: list[tuple[str, float]]
    method: str

    @property
    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]


class HashingEmbedder:
    """Deterministic feature-hashing bag-of-words embedder.

    Stands in for a trained word-embedding model so the test path never
    downloads weights; any embedder exposing embed(text) -> ndarray plugs in.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim

    def _slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        idx = int.from_bytes(digest[:4], "big") % self.dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        return idx, sign

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for token in tokenize(text):
            idx, sign = self._slot(token)
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec = vec / norm
        return vec


@dataclass
class IndexBundle:
    doc_ids: list[str]
    texts: dict[str, str]
    vocabulary: dict[str, int]
    doc_term_freqs: list[Counter]
    doc_lengths: list[int]
    df: dict[str, int]
    idf_bm25: dict[str, float]
    idf_tfidf: dict[str, float]
    avgdl: float
    tfidf_matrix: np.ndarray  # docs x vocab
    lsi_doc_vecs: np.ndarray | None  # docs x rank
    lsi_term_map: np.ndarray | None  # vocab x rank (V * S^-1)
    embeddings: np.ndarray  # docs x dim
    config: IndexConfig
    embedder: HashingEmbedder = field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)


def build_index(articles: list[Article], config: IndexConfig | None = None) -> IndexBundle:
    """Tokenize the corpus and build every sub-index."""
    config = config or IndexConfig()
    # Sort by doc_id so the index is invariant to input order.
    articles = sorted(articles, key=lambda a: a.doc_id)
    doc_ids = [a.doc_id for a in articles]
    texts = {a.doc_id: a.text for a in articles}
    doc_tokens = [tokenize(a.text) for a in articles]
    doc_term_freqs = [Counter(toks) for toks in doc_tokens]
    doc_lengths = [len(toks) for toks in doc_tokens]
    n = len(articles)

    df: Counter = Counter()
    for tf in doc_term_freqs:
        for term in tf:
            df[term] += 1
    vocabulary = {term: i for i, term in enumerate(sorted(df))}

    idf_bm25 = {t: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for t, d in df.items()}
    idf_tfidf = {t: math.log((1.0 + n) / (1.0 + d)) + 1.0 for t, d in df.items()}

    tfidf_matrix = np.zeros((n, len(vocabulary)))
    for i, tf in enumerate(doc_term_freqs):
        for term, count in tf.items():
            tfidf_matrix[i, vocabulary[term]] = count * idf_tfidf[term]

    lsi_doc_vecs = None
    lsi_term_map = None
    if n >= 2 and len(vocabulary) > 0:
        rank = min(config.lsi_rank, min(tfidf_matrix.shape))
        if rank < min(tfidf_matrix.shape):
            from scipy.sparse import csr_matrix
            from scipy.sparse.linalg import svds

            u, s, vt = svds(csr_matrix(tfidf_matrix), k=rank)
            order = np.argsort(-s)
            u, s, vt = u[:, order], s[order], vt[order]
        else:
            u, s, vt = np.linalg.svd(tfidf_matrix, full_matrices=False)
        rank = min(rank, int(np.sum(s > 1e-12)))
        if rank > 0:
            lsi_doc_vecs = u[:, :rank] * s[:rank]
            lsi_term_map = vt[:rank].T  # project query: q @ term_map

    embedder = HashingEmbedder(config.embedding_dim)
    if n:
        embeddings = np.stack([embedder.embed(a.text) for a in articles])
    else:
        embeddings = np.zeros((0, config.embedding_dim))

    avgdl = (sum(doc_lengths) / n) if n else 0.0
    return IndexBundle(
        doc_ids=doc_ids,
        texts=texts,
        vocabulary=vocabulary,
        doc_term_freqs=doc_term_freqs,
        doc_lengths=doc_lengths,
        df=dict(df),
        idf_bm25=idf_bm25,
        idf_tfidf=idf_tfidf,
        avgdl=avgdl,
        tfidf_matrix=tfidf_matrix,
        lsi_doc_vecs=lsi_doc_vecs,
        lsi_term_map=lsi_term_map,
        embeddings=embeddings,
        config=config,
        embedder=embedder,
    )


def _top_k(scored: list[tuple[str, float]], k: int) -> list[tuple[str, float]]:
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:k]


def search_bm25(index: IndexBundle, query: str, k: int) -> RankedList:
    """BM25 with configured k1/b; only docs with positive score are returned."""
    q_terms = tokenize(query)
    k1, b = index.config.k1, index.config.b
    scored = []
    for i, doc_id in enumerate(index.doc_ids):
        tf = index.doc_term_freqs[i]
        dl = index.doc_lengths[i]
        score = 0.0
        for term in q_terms:
            f = tf.get(term)
            if not f:
                continue
            idf = index.idf_bm25[term]
            score += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * dl / index.avgdl))
        if score > 0:
            scored.append((doc_id, score))
    return RankedList(entries=_top_k(scored, k), method="bm25")


def _query_tfidf(index: IndexBundle, query: str) -> np.ndarray:
    vec = np.zeros(len(index.vocabulary))
    for term, count in Counter(tokenize(query)).items():
        idx = index.vocabulary.get(term)
        if idx is not None:
            vec[idx] = count * index.idf_tfidf[term]
    return vec


def search_tfidf(index: IndexBundle, query: str, k: int, metric: str = "cosine") -> RankedList:
    q = _query_tfidf(index, query)
    if not np.any(q):
        return RankedList(entries=[], method=f"tfidf_{'cos' if metric == 'cosine' else 'euc'}")
    if metric == "cosine":
        doc_norms = np.linalg.norm(index.tfidf_matrix, axis=1)
        sims = index.tfidf_matrix @ q
        with np.errstate(invalid="ignore", divide="ignore"):
            sims = np.where(doc_norms > 0, sims / (doc_norms * np.linalg.norm(q)), 0.0)
        scored = [(d, float(s)) for d, s in zip(index.doc_ids, sims) if s > 0]
        return RankedList(entries=_top_k(scored, k), method="tfidf_cos")
    if metric == "euclidean":
        dists = np.linalg.norm(index.tfidf_matrix - q, axis=1)
        scored = [(d, 1.0 / (1.0 + float(dist))) for d, dist in zip(index.doc_ids, dists)]
        return RankedList(entries=_top_k(scored, k), method="tfidf_euc")
    raise ValueError(f"unknown metric: {metric}")


def search_lsi(index: IndexBundle, query: str, k: int) -> RankedList:
    """Cosine ranking in the latent space of the tf-idf matrix."""
    if index.lsi_doc_vecs is None:
        raise BasisUnavailable("corpus has fewer than 2 documents")
    q = _query_tfidf(index, query) @ index.lsi_term_map
    q_norm = np.linalg.norm(q)
    if q_norm == 0:
        return RankedList(entries=[], method="lsi")
    doc_norms = np.linalg.norm(index.lsi_doc_vecs, axis=1)
    sims = index.lsi_doc_vecs @ q
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = np.where(doc_norms > 0, sims / (doc_norms * q_norm), 0.0)
    scored = [(d, float(s)) for d, s in zip(index.doc_ids, sims) if s > 0]
    return RankedList(entries=_top_k(scored, k), method="lsi")


def search_vector(index: IndexBundle, query: str, k: int) -> RankedList:
    """Exact cosine nearest-neighbor scan over the embedding matrix."""
    q = index.embedder.embed(query)
    if not np.any(q):
        return RankedList(entries=[], method="vector")
    sims = index.embeddings @ q
    scored = [(d, float(s)) for d, s in zip(index.doc_ids, sims) if s != 0.0]
    return RankedList(entries=_top_k(scored, k), method="vector")


def _doc_sim(index: IndexBundle, i: int, j: int) -> float:
    a = index.tfidf_matrix[i]
    b = index.tfidf_matrix[j]
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def rerank_mmr(
    candidates: RankedList,
    index: IndexBundle,
    query: str,
    lam: float,
    k: int,
) -> RankedList:
    """Greedy maximal-marginal-relevance selection over the candidate list."""
    if not candidates.entries:
        raise EmptyCandidates()
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be within [0, 1]")
    relevance = dict(candidates.entries)
    pos = {doc_id: i for i, doc_id in enumerate(index.doc_ids)}
    remaining = [doc_id for doc_id, _ in candidates.entries]
    selected: list[tuple[str, float]] = []
    while remaining and len(selected) < k:
        best = None
        best_score = -math.inf
        for doc_id in remaining:
            if selected:
                max_sim = max(_doc_sim(index, pos[doc_id], pos[s]) for s, _ in selected)
            else:
                max_sim = 0.0
            score = lam * relevance[doc_id] - (1 - lam) * max_sim
            if score > best_score or (score == best_score and best is not None and doc_id < best):
                best, best_score = doc_id, score
        selected.append((best, best_score))
        remaining.remove(best)
    return RankedList(entries=selected, method=candidates.method)


def rrf_fuse(
    lists: list[tuple[float, RankedList]],
    rrf_k: int,
) -> list[tuple[str, float]]:
    """Weighted reciprocal-rank fusion: score(d) = sum w_i / (rrf_k + rank_i(d)).

    Documents absent from a list contribute nothing from that list;
    ranks are 1-based positions in each list.
    """
    fused: dict[str, float] = {}
    for weight, ranked in lists:
        if weight == 0:
            continue
        for rank, (doc_id, _score) in enumerate(ranked.entries, start=1):
            fused[doc_id] = fused.get(doc_id, 0.0) + weight / (rrf_k + rank)
    return sorted(fused.items(), key=lambda e: (-e[1], e[0]))


def search_hybrid(
    index: IndexBundle,
    query: str,
    k: int,
    w_keyword: float | None = None,
    w_vector: float | None = None,
    rrf_k: int | None = None,
) -> RankedList:
    config = index.config
    w_keyword = config.w_keyword if w_keyword is None else w_keyword
    w_vector = config.w_vector if w_vector is None else w_vector
    rrf_k = config.rrf_k if rrf_k is None else rrf_k
    if w_keyword + w_vector <= 0:
        raise ValueError("at least one fusion weight must be positive")
    bm25 = search_bm25(index, query, index.n_docs or 1)
    vector = search_vector(index, query, index.n_docs or 1)
    fused = rrf_fuse([(w_keyword, bm25), (w_vector, vector)], rrf_k)
    return RankedList(entries=fused[:k], method="hybrid")


SEARCH_METHODS = ("bm25", "tfidf_cos", "tfidf_euc", "lsi", "vector", "hybrid")


def search(index: IndexBundle, method: str, query: str, k: int) -> RankedList:
    """Dispatch by method name; the eval harness iterates over these."""
    if method == "bm25":
        return search_bm25(index, query, k)
    if method == "tfidf_cos":
        return search_tfidf(index, query, k, metric="cosine")
    if method == "tfidf_euc":
        return search_tfidf(index, query, k, metric="euclidean")
    if method == "lsi":
        return search_lsi(index, query, k)
    if method == "vector":
        return search_vector(index, query, k)
    if method == "hybrid":
        return search_hybrid(index, query, k)
    raise ValueError(f"unknown search method: {method}")
