"""Parent-prediction dependency parsing.

A single network scores candidate arcs: two relu hidden layers and a linear
scalar output.  For a child at position i (1-based) and a parent candidate j
(0 denotes the wall/root symbol), the input concatenates

  1. the 2w+1 type embeddings around the child and around the parent
     (omitted entirely when ``window == -1``),
  2. one token embedding for the child and one for the parent per encoder,
  3. the 10-bit word-shape vectors of child and parent,
  4. the 10 arc pair features (relative positions, distance, direction, wall).

Wall candidates zero every parent-side block, and the pair features reduce to
(i/n, 0, ..., 0, 1).  The per-child loss is a softmax log loss over all
candidate parents; unselected tokens never appear as children or candidates.
Head prediction picks the argmax candidate independently per token, ties
going to the wall and then to lower positions; no tree constraint is applied.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng as rng_mod
from .features import PAIR_FEATURE_COUNT, pair_features, word_features
from .nn import MLP, SgdMomentum, TrainingDiverged, anchored_l2, softmax_logloss
from .serialize import load_model, save_model


@dataclass
class DepSentence:
    """Tokens with 1-based heads (0 = wall, -1 = unknown) and selection flags.

    Unselected tokens take no part in the structure: they carry no head and
    are never parent candidates.
    """

    tokens: list
    heads: list
    selected: list

    def __post_init__(self):
        n = len(self.tokens)
        if len(self.heads) != n or len(self.selected) != n:
            raise ValueError("tokens, heads, and selected must have equal length")
        for k in range(n):
            head = self.heads[k]
            if not self.selected[k]:
                if head != -1:
                    raise ValueError(f"unselected token {k + 1} carries head {head}")
                continue
            if head == -1:
                continue
            if not 0 <= head <= n or head == k + 1:
                raise ValueError(f"token {k + 1} has invalid head {head}")
            if head > 0 and not self.selected[head - 1]:
                raise ValueError(f"token {k + 1} attaches to unselected token {head}")

    def __len__(self):
        return len(self.tokens)

    def selected_positions(self):
        return [k + 1 for k in range(len(self.tokens)) if self.selected[k]]


def candidate_heads(sentence, i):
    """Parent candidates for child ``i``: the wall, then selected positions."""
    return [0] + [j for j in sentence.selected_positions() if j != i]


def load_dep_corpus(path):
    """CoNLL-like file: "index<TAB>token<TAB>head<TAB>selected" lines, blank
    line between sentences; head is -1 (and selected 0) for unselected tokens."""
    sentences = []
    rows = []

    def finish(lineno):
        if not rows:
            return
        if [r[0] for r in rows] != list(range(1, len(rows) + 1)):
            raise ValueError(f"{path}:{lineno}: token indices are not 1..n")
        sentences.append(DepSentence(
            tokens=[r[1] for r in rows],
            heads=[r[2] for r in rows],
            selected=[bool(r[3]) for r in rows],
        ))
        rows.clear()

    with open(path, "r", encoding="utf-8") as fh:
        lineno = 0
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                finish(lineno)
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
            try:
                rows.append((int(parts[0]), parts[1], int(parts[2]), int(parts[3])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unparseable integer field") from None
        finish(lineno + 1)
    return sentences


def save_dep_corpus(sentences, path):
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            for k in range(len(sent)):
                fh.write(f"{k + 1}\t{sent.tokens[k]}\t{sent.heads[k]}"
                         f"\t{int(sent.selected[k])}\n")
            fh.write("\n")


@dataclass
class ParserConfig:
    window: int = 0              # type-embedding radius; -1 disables type inputs
    hidden: int = 1024
    word_features: bool = True
    update_embeddings: bool = False
    anchor_weight: float = 0.01

    def __post_init__(self):
        if self.window < -1:
            raise ValueError("parser window must be >= -1")


@dataclass
class _SentenceCache:
    """Precomputed per-arc rows for one sentence.

    ``child_wins``/``parent_wins`` are id matrices indexing the embedding
    table (wall parents use the zero unknown row); ``const`` holds the blocks
    that never change during training; ``arcs`` lists (start, end, child,
    candidates, gold offset) spans into the row matrices.
    """

    child_wins: np.ndarray
    parent_wins: np.ndarray
    const: np.ndarray
    arcs: list = field(default_factory=list)

    @property
    def n_rows(self):
        return len(self.const)


class Parser:
    """Arc scorer and local head predictor."""

    kind = "parser"

    def __init__(self, config, table, encoders=(), rng=None, dtype=np.float32):
        if config.window == -1 and not encoders:
            raise ValueError("window=-1 with no encoders leaves no lexical input")
        for enc in encoders:
            if enc.dim != table.dim:
                raise ValueError(
                    f"encoder dim {enc.dim} does not match table dim {table.dim}")
        self.config = config
        self.table = table
        self.encoders = tuple(encoders)

        self.win_len = 0 if config.window == -1 else 2 * config.window + 1
        self.type_width = 2 * self.win_len * table.dim
        self.token_width = 2 * sum(e.token_dim for e in self.encoders)
        self.feat_width = (20 if config.word_features else 0) + PAIR_FEATURE_COUNT
        self.input_dim = self.type_width + self.token_width + self.feat_width

        self.net = MLP([self.input_dim, config.hidden, config.hidden, 1],
                       ["relu", "relu", "linear"], rng, dtype)
        if config.update_embeddings:
            self.embeddings = table.vectors.astype(dtype).copy()
            self.anchor = table.vectors.astype(dtype).copy()
        else:
            self.embeddings = table.vectors
            self.anchor = None

    # -- input composition ---------------------------------------------------

    def _position_windows(self, ids):
        """(n+1, win_len) window ids for positions 0..n; row 0 (the wall) uses
        the all-zero unknown row so wall parents contribute zero vectors."""
        vocab = self.table.vocab
        n = len(ids)
        if self.win_len == 0:
            return np.zeros((n + 1, 0), dtype=np.int64)
        w = self.config.window
        pos = np.arange(n)[:, None] + np.arange(-w, w + 1)[None, :]
        wins = ids[np.clip(pos, 0, max(n - 1, 0))]
        wins = np.where(pos < 0, vocab.bos_id, wins)
        wins = np.where(pos >= n, vocab.eos_id, wins)
        wall = np.full((1, self.win_len), vocab.unk_id, dtype=np.int64)
        return np.concatenate([wall, wins], axis=0)

    def _cache_sentence(self, sent):
        """Build all candidate rows for every selected child of a sentence."""
        ids = self.table.vocab.to_ids(sent.tokens)
        n = len(sent)
        pos_wins = self._position_windows(ids)

        tok_parts = [np.zeros((n + 1, 0), dtype=np.float32)]
        for enc in self.encoders:
            embs = enc.encode_sentence(self.table, ids).astype(np.float32)
            zero = np.zeros((1, enc.token_dim), dtype=np.float32)
            tok_parts.append(np.concatenate([zero, embs], axis=0))
        tok = np.concatenate(tok_parts, axis=1)  # (n+1, sum d'), row 0 = wall

        if self.config.word_features:
            shape = np.concatenate(
                [np.zeros((1, 10), dtype=np.float32),
                 np.stack([word_features(t) for t in sent.tokens])], axis=0)
        else:
            shape = np.zeros((n + 1, 0), dtype=np.float32)

        child_wins, parent_wins, const_rows, arcs = [], [], [], []
        row = 0
        for i in sent.selected_positions():
            cands = candidate_heads(sent, i)
            gold = sent.heads[i - 1]
            gold_off = cands.index(gold) if gold in cands else -1
            for j in cands:
                child_wins.append(pos_wins[i])
                parent_wins.append(pos_wins[j])
                const_rows.append(np.concatenate([
                    tok[i], tok[j], shape[i], shape[j],
                    pair_features(i, j, n).astype(np.float32)]))
            arcs.append((row, row + len(cands), i, cands, gold_off))
            row += len(cands)
        if const_rows:
            const = np.stack(const_rows)
            cw = np.stack(child_wins)
            pw = np.stack(parent_wins)
        else:
            const = np.zeros((0, self.token_width + self.feat_width), dtype=np.float32)
            cw = np.zeros((0, self.win_len), dtype=np.int64)
            pw = np.zeros((0, self.win_len), dtype=np.int64)
        return _SentenceCache(cw, pw, const, arcs)

    def _rows(self, cache, lo=None, hi=None):
        sl = slice(lo, hi)
        const = cache.const[sl]
        if self.win_len == 0:
            return const
        child = self.embeddings[cache.child_wins[sl]].reshape(len(const), -1)
        parent = self.embeddings[cache.parent_wins[sl]].reshape(len(const), -1)
        return np.concatenate([child, parent, const], axis=1)

    # -- scoring and prediction ----------------------------------------------

    def arc_score(self, sent, i, j):
        """Score of the arc attaching child ``i`` to parent candidate ``j``."""
        n = len(sent)
        if i == j:
            raise ValueError("a token cannot be its own parent")
        if not (1 <= i <= n) or not sent.selected[i - 1]:
            raise ValueError(f"child {i} is not a selected token")
        if j != 0 and (not 1 <= j <= n or not sent.selected[j - 1]):
            raise ValueError(f"parent candidate {j} is not selected")
        cache = self._cache_sentence(sent)
        for lo, hi, child, cands, _ in cache.arcs:
            if child == i:
                scores, _ = self.net.forward(self._rows(cache, lo, hi))
                return float(scores[cands.index(j), 0])
        raise ValueError(f"child {i} not found")  # unreachable after the checks

    def arc_input(self, sent, i, j):
        """Composed network input for one (child, parent) pair."""
        cache = self._cache_sentence(sent)
        for lo, hi, child, cands, _ in cache.arcs:
            if child == i:
                return self._rows(cache, lo, hi)[cands.index(j)]
        raise ValueError(f"child {i} is not a selected token")

    def score_sentence(self, sent):
        """Scores for every (child, candidate) pair: list of (i, cands, scores)."""
        cache = self._cache_sentence(sent)
        if cache.n_rows == 0:
            return []
        scores, _ = self.net.forward(self._rows(cache))
        scores = scores[:, 0]
        return [(i, cands, scores[lo:hi]) for lo, hi, i, cands, _ in cache.arcs]

    def predict_heads(self, sent):
        """Independent argmax head per selected token; -1 for unselected.

        Candidates are ordered wall-first then ascending, so ties resolve to
        the wall and then to the lowest position.
        """
        heads = [-1] * len(sent)
        for i, cands, scores in self.score_sentence(sent):
            heads[i - 1] = cands[int(np.argmax(scores))]
        return heads

    # -- persistence -----------------------------------------------------------

    def params(self):
        out = {f"net.{k}": v for k, v in self.net.params().items()}
        if self.config.update_embeddings:
            out["embeddings"] = self.embeddings
        return out

    def save(self, path):
        cfg = {
            "parser": asdict(self.config),
            "dim": self.table.dim,
            "vocab_size": len(self.table.vocab),
            "encoders": [{"arch": e.arch, "token_dim": e.token_dim, "w_prime": e.w_prime}
                         for e in self.encoders],
        }
        save_model(path, self.kind, cfg, self.params())

    @classmethod
    def load(cls, path, table, encoders=()):
        kind, cfg, tensors = load_model(path)
        if kind != cls.kind:
            raise ValueError(f"{path}: not a parser model (kind={kind!r})")
        config = ParserConfig(**cfg["parser"])
        if cfg["dim"] != table.dim or cfg["vocab_size"] != len(table.vocab):
            raise ValueError(f"{path}: embedding table does not match the model")
        given = [{"arch": e.arch, "token_dim": e.token_dim, "w_prime": e.w_prime}
                 for e in encoders]
        if cfg["encoders"] != given:
            raise ValueError(
                f"{path}: encoder set {given} does not match stored {cfg['encoders']}")
        model = cls(config, table, encoders)
        params = model.params()
        for name, arr in tensors.items():
            params[name][...] = arr
        return model


def arc_loss(scores, gold_offset):
    """Softmax log loss of the gold candidate against all candidates."""
    return softmax_logloss(scores, gold_offset)


def sentence_loss(model, sent):
    """Sum of per-child arc losses over the selected tokens."""
    total = 0.0
    for i, cands, scores in model.score_sentence(sent):
        gold = sent.heads[i - 1]
        if gold == -1:
            raise ValueError(f"selected token {i} has no gold head")
        loss, _ = arc_loss(scores, cands.index(gold))
        total += loss
    return total


def attachment_f1(predicted, gold):
    """Precision/recall/F1 in percent over (sentence, child, head) arc sets.

    Each side contributes the arcs of its own selected tokens, so the two
    corpora may disagree on token selection.  Empty sides score 0.
    """
    if len(predicted) != len(gold):
        raise ValueError("corpora have different sentence counts")

    def arcs(sents):
        out = set()
        for si, sent in enumerate(sents):
            for k in range(len(sent)):
                if sent.selected[k] and sent.heads[k] >= 0:
                    out.add((si, k + 1, sent.heads[k]))
        return out

    for p, g in zip(predicted, gold):
        if len(p) != len(g):
            raise ValueError("token counts differ between aligned sentences")
    pred_arcs = arcs(predicted)
    gold_arcs = arcs(gold)
    common = len(pred_arcs & gold_arcs)
    precision = 100.0 * common / len(pred_arcs) if pred_arcs else 0.0
    recall = 100.0 * common / len(gold_arcs) if gold_arcs else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return precision, recall, f1


def export_arc_scores(model, sentences, path):
    """Write "sentence_id<TAB>child<TAB>candidate<TAB>score" lines for every
    candidate arc, scores in 6-decimal fixed point.  Returns the line count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for si, sent in enumerate(sentences):
            for i, cands, scores in model.score_sentence(sent):
                for j, s in zip(cands, scores):
                    fh.write(f"{si}\t{i}\t{j}\t{s:.6f}\n")
                    count += 1
    return count


def batch_loss_and_grads(model, caches):
    """Mean per-arc loss over a minibatch of sentence caches plus, when
    embedding updates are on, the anchored penalty; gradients cover the
    network and the embedding table (reserved rows zeroed)."""
    n_arcs = sum(len(c.arcs) for c in caches)
    grads = {f"net.{k}": np.zeros_like(v) for k, v in model.net.params().items()}
    updating = model.config.update_embeddings
    if updating:
        grads["embeddings"] = np.zeros_like(model.embeddings)
    total = 0.0
    for cache in caches:
        X = model._rows(cache)
        scores, net_cache = model.net.forward(X)
        flat = scores[:, 0]
        dflat = np.zeros_like(flat)
        for lo, hi, _, _, gold_off in cache.arcs:
            loss, dsc = arc_loss(flat[lo:hi], gold_off)
            total += loss
            dflat[lo:hi] = dsc.astype(flat.dtype)
        dX, net_grads = model.net.backward((dflat / n_arcs)[:, None], net_cache)
        for k, g in net_grads.items():
            grads[f"net.{k}"] += g
        if updating and model.win_len > 0:
            half = model.win_len * model.table.dim
            dTyp = dX[:, :half].reshape(len(X), -1, model.table.dim)
            dPar = dX[:, half:2 * half].reshape(len(X), -1, model.table.dim)
            np.add.at(grads["embeddings"], cache.child_wins, dTyp)
            np.add.at(grads["embeddings"], cache.parent_wins, dPar)
    total /= n_arcs
    if updating:
        penalty, anchor_grad = anchored_l2(model.embeddings, model.anchor,
                                           model.config.anchor_weight)
        total += penalty
        grads["embeddings"] += anchor_grad
        vocab = model.table.vocab
        grads["embeddings"][[vocab.bos_id, vocab.eos_id, vocab.unk_id]] = 0.0
    return total, grads


@dataclass
class ParserTrainConfig:
    epochs: int = 30
    batch_size: int = 8          # sentences per minibatch
    learning_rate: float = 0.1
    momentum: float = 0.9
    patience: int = 10
    seed: int = 0


@dataclass
class ParserTrainResult:
    best_val_f1: float
    epochs_run: int
    history: list  # (epoch, validation F1)


def train_parser(model, train_sents, val_sents, cfg):
    """Minibatch training of the mean per-arc loss with early stopping on
    validation attachment F1.  Gold heads and gold selection drive both."""
    if not train_sents or not val_sents:
        raise ValueError("empty corpus")
    caches = [model._cache_sentence(s) for s in train_sents]
    for sent, cache in zip(train_sents, caches):
        for _, _, i, _, gold_off in cache.arcs:
            if gold_off < 0:
                raise ValueError(f"selected token {i} has no usable gold head")
    usable = [k for k, c in enumerate(caches) if c.arcs]
    if not usable:
        raise ValueError("no selected tokens in the training corpus")

    params = model.params()
    opt = SgdMomentum(params, cfg.learning_rate, cfg.momentum)
    shuffle_rng = rng_mod.stream(cfg.seed, "shuffle")

    def validation_f1():
        pred = [DepSentence(s.tokens, model.predict_heads(s), list(s.selected))
                for s in val_sents]
        return attachment_f1(pred, val_sents)[2]

    best = {k: v.copy() for k, v in params.items()}
    best_f1 = -1.0
    history = []
    stale = 0
    epochs_run = 0

    for epoch in range(1, cfg.epochs + 1):
        epochs_run = epoch
        order = shuffle_rng.permutation(len(usable))
        for k in range(0, len(order), cfg.batch_size):
            batch = [caches[usable[q]] for q in order[k:k + cfg.batch_size]]
            loss, grads = batch_loss_and_grads(model, batch)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite arc loss in epoch {epoch}")
            opt.step(grads)
        f1 = validation_f1()
        history.append((epoch, f1))
        if f1 > best_f1:
            best_f1 = f1
            for k2, v in params.items():
                best[k2][...] = v
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    for k2, v in params.items():
        v[...] = best[k2]
    return ParserTrainResult(best_f1, epochs_run, history)
