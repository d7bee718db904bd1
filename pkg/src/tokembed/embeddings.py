"""Vocabulary management, fixed type-embedding storage, and word2vec-text IO.

Type embeddings are one vector per word type, pretrained elsewhere and kept
fixed here.  Three reserved symbols are appended after the corpus entries:
start-of-sequence, end-of-sequence, and unknown.  Their rows are all-zero and
are never trained anywhere in the package.
"""

import numpy as np

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
RESERVED = (BOS, EOS, UNK)


class Vocabulary:
    """Dense word -> id mapping, reserved symbols at the top of the id range."""

    def __init__(self, corpus_words):
        words = list(corpus_words)
        seen = set()
        for w in words:
            if w in seen:
                raise ValueError(f"duplicate word {w!r}")
            if w in RESERVED:
                raise ValueError(f"word {w!r} collides with a reserved symbol")
            seen.add(w)
        self.words = words + list(RESERVED)
        self.index = {w: i for i, w in enumerate(self.words)}
        self.bos_id = len(words)
        self.eos_id = len(words) + 1
        self.unk_id = len(words) + 2

    def __len__(self):
        return len(self.words)

    @property
    def corpus_words(self):
        return self.words[:-3]

    def id_of(self, word):
        """Exact-match lookup; anything out of vocabulary maps to the unknown id."""
        return self.index.get(word, self.unk_id)

    def to_ids(self, tokens):
        return np.array([self.id_of(t) for t in tokens], dtype=np.int64)


class EmbeddingTable:
    """Vocabulary plus a |V| x d float32 matrix of type vectors.

    Immutable after construction by convention; components that adapt type
    embeddings work on their own copy.  Reserved rows are forced to zero.
    """

    def __init__(self, vocab, vectors):
        vectors = np.array(vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(vocab):
            raise ValueError(
                f"need one row per vocabulary entry: {vectors.shape} vs |V|={len(vocab)}"
            )
        vectors[[vocab.bos_id, vocab.eos_id, vocab.unk_id]] = 0.0
        self.vocab = vocab
        self.vectors = vectors

    @property
    def dim(self):
        return self.vectors.shape[1]

    def lookup(self, word):
        """Type vector for ``word``, or the (all-zero) unknown row."""
        return self.vectors[self.vocab.id_of(word)]


def load_word2vec_text(path):
    """Read a text-format embedding file.

    Expected layout: a header line "<count> <dim>" followed by ``count`` lines
    of "<word> <dim floats>".  Reserved symbols are appended automatically.
    Malformed headers, wrong float counts, duplicate words, and count
    mismatches are rejected with the offending line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}:1: malformed header {lines[0]!r}, expected '<count> <dim>'")
    try:
        count, dim = int(head[0]), int(head[1])
    except ValueError:
        raise ValueError(f"{path}:1: malformed header {lines[0]!r}, expected two integers") from None
    if count < 0 or dim <= 0:
        raise ValueError(f"{path}:1: nonsensical header values {count} {dim}")
    words = []
    first_line = {}
    vectors = np.zeros((count + len(RESERVED), dim), dtype=np.float32)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            raise ValueError(f"{path}:{lineno}: blank line inside the entry block")
        word = parts[0]
        if len(parts) - 1 != dim:
            raise ValueError(
                f"{path}:{lineno}: word {word!r} has {len(parts) - 1} values, expected {dim}"
            )
        if word in first_line:
            raise ValueError(
                f"{path}:{lineno}: duplicate word {word!r} (first at line {first_line[word]})"
            )
        if word in RESERVED:
            raise ValueError(f"{path}:{lineno}: word {word!r} collides with a reserved symbol")
        if len(words) >= count:
            raise ValueError(f"{path}:{lineno}: more entries than the declared count {count}")
        try:
            vectors[len(words)] = [float(t) for t in parts[1:]]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: unparseable float for word {word!r}") from None
        first_line[word] = lineno
        words.append(word)
    if len(words) != count:
        raise ValueError(f"{path}: header declares {count} entries, file has {len(words)}")
    return EmbeddingTable(Vocabulary(words), vectors)


def save_word2vec_text(table, path):
    """Write the corpus entries (reserved rows excluded) with 6 significant digits."""
    words = table.vocab.corpus_words
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {table.dim}\n")
        for i, w in enumerate(words):
            coords = " ".join(f"{x:.6g}" for x in table.vectors[i])
            fh.write(f"{w} {coords}\n")


def load_corpus(path):
    """Read an unlabeled corpus: one sentence per line, space-separated tokens."""
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            toks = line.split()
            if toks:
                sentences.append(toks)
    return sentences


def save_corpus(sentences, path):
    with open(path, "w", encoding="utf-8") as fh:
        for toks in sentences:
            fh.write(" ".join(toks) + "\n")
