"""Nearest-neighbor token queries and embedding export.

A token index is a flat list of records, one per corpus occurrence, each
carrying the token embedding and enough context to render a readable snippet.
Neighbor search is an exact linear scan (corpora here are small enough that
approximate structures would be overkill) under euclidean or cosine distance.
"""

from dataclasses import dataclass

import numpy as np

METRICS = ("euclidean", "cosine")


@dataclass
class TokenRecord:
    """One token occurrence with its embedding and window context."""

    sentence_id: int
    position: int
    token: str
    embedding: np.ndarray
    left: str = ""
    right: str = ""
    tag: str | None = None

    @property
    def identity(self):
        return (self.sentence_id, self.position)

    def snippet(self):
        """Window text with the target marked: "[ left <token> right ]"."""
        inner = f"<{self.token}>"
        if self.left:
            inner = f"{self.left} {inner}"
        if self.right:
            inner = f"{inner} {self.right}"
        return f"[ {inner} ]"


def index_corpus(model, table, sentences, type_filter=None, tags=None):
    """One TokenRecord per token whose type passes ``type_filter`` (or all).

    ``tags`` optionally supplies a gold tag sequence per sentence, aligned
    with ``sentences``.
    """
    if type_filter is not None:
        type_filter = set(type_filter)
    records = []
    w = model.w_prime
    for si, tokens in enumerate(sentences):
        ids = table.vocab.to_ids(tokens)
        embs = model.encode_sentence(table, ids)
        sent_tags = tags[si] if tags is not None else None
        for j, tok in enumerate(tokens):
            if type_filter is not None and tok not in type_filter:
                continue
            records.append(TokenRecord(
                sentence_id=si,
                position=j,
                token=tok,
                embedding=np.array(embs[j]),
                left=" ".join(tokens[max(0, j - w):j]),
                right=" ".join(tokens[j + 1:j + 1 + w]),
                tag=sent_tags[j] if sent_tags is not None else None,
            ))
    return records


def _normalized(M):
    norms = np.linalg.norm(M, axis=-1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return M / safe


def distances(query_embedding, M, metric="euclidean"):
    """Distances from one embedding to the rows of ``M``.

    Cosine distance is computed as half the squared distance of the
    normalized vectors, which equals 1 - cos and is exactly zero for
    identical inputs; zero vectors keep their zero direction.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    q = np.asarray(query_embedding, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if metric == "euclidean":
        return np.linalg.norm(M - q, axis=1)
    d = _normalized(M) - _normalized(q)
    return 0.5 * (d * d).sum(axis=1)


def nearest_neighbors(query, index, k=4, metric="euclidean"):
    """The ``k`` records closest to ``query``, with distances.

    The query's own (sentence, position) identity is excluded; distance ties
    break by index order.  If fewer than ``k`` records remain, all are
    returned, sorted.
    """
    if not index:
        raise ValueError("empty index")
    M = np.stack([r.embedding for r in index])
    dists = distances(query.embedding, M, metric)
    order = np.argsort(dists, kind="stable")
    out = []
    for idx in order:
        rec = index[idx]
        if rec.identity == query.identity:
            continue
        out.append((rec, float(dists[idx])))
        if len(out) == k:
            break
    return out


def export_embeddings_tsv(index, path):
    """Write the index as a TSV suitable for external projection tools.

    Columns: sentence_id, position, token, left_context, right_context, tag
    (empty when absent), then the embedding coordinates.
    """
    dim = len(index[0].embedding) if index else 0
    header = ["sentence_id", "position", "token", "left_context",
              "right_context", "tag"] + [f"e{k}" for k in range(dim)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for rec in index:
            coords = [f"{x:.8g}" for x in rec.embedding]
            fh.write("\t".join([str(rec.sentence_id), str(rec.position), rec.token,
                                rec.left, rec.right, rec.tag or ""] + coords) + "\n")


def load_embeddings_tsv(path):
    """Reload an exported TSV into TokenRecords (embeddings as float32)."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        dim = len(header) - 6
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(header):
                raise ValueError(f"{path}:{lineno}: wrong column count")
            records.append(TokenRecord(
                sentence_id=int(parts[0]),
                position=int(parts[1]),
                token=parts[2],
                embedding=np.array([float(x) for x in parts[6:]], dtype=np.float32),
                left=parts[3],
                right=parts[4],
                tag=parts[5] or None,
            ))
            if len(records[-1].embedding) != dim:
                raise ValueError(f"{path}:{lineno}: wrong embedding width")
    return records
