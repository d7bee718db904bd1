#!/usr/bin/env python3
"""Emit a synthetic dataset directory for exercising the CLI end to end.

Writes a word2vec-text embedding file, unlabeled train/val corpora, tagged
train/val corpora with a tagset, and dependency train/val corpora, all from
the desk-scale generators.  Example:

    python scripts/make_synthetic_data.py --out data/ --seed 0
    tokembed train-encoder --embeddings data/embeddings.txt \
        --train data/unlabeled.train.txt --val data/unlabeled.val.txt \
        --w-prime 1 --token-dim 8 --hidden 32 --lr 0.02 --out data/encoder.bin
"""

import argparse
import pathlib

from tokembed import rng as rng_mod
from tokembed.embeddings import save_corpus, save_word2vec_text
from tokembed.parser import save_dep_corpus
from tokembed.synthetic import (chain_dep_corpus, pivot_tag_corpus,
                                toy_embedding_table)
from tokembed.tagger import save_tagged_corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--n-tagged", type=int, default=400)
    ap.add_argument("--n-dep", type=int, default=250)
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = rng_mod.stream(args.seed, "data")

    words, tagset, sentences, _ = pivot_tag_corpus(rng, n_sentences=args.n_tagged)
    dep_words, dep_sents = chain_dep_corpus(rng, n_sentences=args.n_dep)
    table = toy_embedding_table(words + dep_words, args.dim, rng)

    n_tr = int(0.75 * len(sentences))
    n_dtr = int(0.8 * len(dep_sents))

    save_word2vec_text(table, out / "embeddings.txt")
    save_corpus([t for t, _ in sentences[:n_tr]], out / "unlabeled.train.txt")
    save_corpus([t for t, _ in sentences[n_tr:]], out / "unlabeled.val.txt")
    save_tagged_corpus(sentences[:n_tr], out / "tagged.train.tsv")
    save_tagged_corpus(sentences[n_tr:], out / "tagged.val.tsv")
    (out / "tagset.txt").write_text("\n".join(tagset) + "\n", encoding="utf-8")
    save_dep_corpus(dep_sents[:n_dtr], out / "dep.train.tsv")
    save_dep_corpus(dep_sents[n_dtr:], out / "dep.val.tsv")
    print(f"wrote synthetic dataset under {out}/")


if __name__ == "__main__":
    main()
