"""Desk-scale synthetic data generators.

These corpora are engineered so specific behaviors are provable at tiny
scale: template corpora collapse under reconstruction training, two-sense
pivot corpora separate in embedding space, context-tag corpora are unsolvable
without context, and chain dependency corpora follow a positional rule
learnable from arc pair features alone.  Used by the test suite and the
demo scripts.
"""

import numpy as np

from .embeddings import EmbeddingTable, Vocabulary
from .parser import DepSentence


def toy_embedding_table(words, dim, rng, scale=0.5):
    """Random normal type vectors for ``words`` (reserved rows stay zero)."""
    vocab = Vocabulary(words)
    vectors = np.zeros((len(vocab), dim), dtype=np.float32)
    vectors[: len(words)] = rng.normal(0.0, scale, size=(len(words), dim))
    return EmbeddingTable(vocab, vectors)


def template_corpus(rng, n_sentences=100, vocab_size=20, n_templates=8, length=5):
    """Sentences sampled from a small fixed set of templates.

    Returns (words, sentences).  The number of distinct windows is bounded by
    n_templates * length, so a modest autoencoder can drive reconstruction
    error toward zero.
    """
    words = [f"w{k:02d}" for k in range(vocab_size)]
    templates = [
        [words[rng.integers(vocab_size)] for _ in range(length)]
        for _ in range(n_templates)
    ]
    sentences = [list(templates[rng.integers(n_templates)]) for _ in range(n_sentences)]
    return words, sentences


SENSE_PIVOT = "pv"


def two_sense_corpus(rng, n_per_sense=150, n_context=6, length=5):
    """Pivot tokens in two disjoint context templates.

    Sense-0 sentences surround the pivot only with a-words, sense-1 only with
    b-words; the two context vocabularies never mix.  Returns
    (words, examples) where each example is (tokens, sense, pivot_position).
    """
    a_words = [f"a{k}" for k in range(n_context)]
    b_words = [f"b{k}" for k in range(n_context)]
    words = a_words + b_words + [SENSE_PIVOT]
    center = length // 2
    examples = []
    for sense, pool in ((0, a_words), (1, b_words)):
        for _ in range(n_per_sense):
            toks = [pool[rng.integers(len(pool))] for _ in range(length)]
            toks[center] = SENSE_PIVOT
            examples.append((toks, sense, center))
    order = rng.permutation(len(examples))
    return words, [examples[k] for k in order]


TAG_PIVOT = "pv"
PIVOT_TAGS = ("A", "B")


def pivot_tag_corpus(rng, n_sentences=300, n_fillers=6):
    """Tagged sentences where the pivot's tag is decided by its left neighbor.

    Layout: [filler, filler, trigger, pivot, filler]; the trigger "la" forces
    pivot tag "A", "lb" forces "B".  Triggers alternate sentence by sentence,
    so any contiguous even-length split is exactly balanced.  Every other
    token's tag is a function of its own type, so a center-word-only tagger
    can solve everything except the pivots.  Returns
    (words, tagset, sentences, pivot_position) with sentences as
    (tokens, tags) pairs.
    """
    fillers = [f"f{k}" for k in range(n_fillers)]
    words = fillers + ["la", "lb", TAG_PIVOT]
    tagset = ["F", "T", "A", "B"]
    pivot_pos = 3
    sentences = []
    for k in range(n_sentences):
        trigger, ptag = ("la", "A") if k % 2 == 0 else ("lb", "B")
        toks = [fillers[rng.integers(n_fillers)] for _ in range(5)]
        toks[2] = trigger
        toks[pivot_pos] = TAG_PIVOT
        tags = ["F", "F", "T", ptag, "F"]
        sentences.append((toks, tags))
    return words, tagset, sentences, pivot_pos


def chain_dep_corpus(rng, n_sentences=200, max_len=6, vocab_size=12):
    """Dependency sentences following a positional rule: every token attaches
    to its left neighbor and the first token attaches to the wall.  The rule
    is expressible from the arc pair features alone."""
    words = [f"t{k}" for k in range(vocab_size)]
    sentences = []
    for _ in range(n_sentences):
        n = int(rng.integers(2, max_len + 1))
        toks = [words[rng.integers(vocab_size)] for _ in range(n)]
        heads = [k for k in range(n)]  # token k+1 -> head k; token 1 -> 0 (wall)
        sentences.append(DepSentence(toks, heads, [True] * n))
    return words, sentences
