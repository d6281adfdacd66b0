"""A minimal trainable scorer: hashed sparse features with a linear layer.

This stands in for a neural sentence encoder so that the structured losses can
be exercised end to end on CPU.  Scores are produced per position from a
handful of lexical indicator features hashed into a fixed-size table; training
is plain SGD on the exact loss gradients from :mod:`disctag.inference`.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .automata import Automaton, Lattice, build_lattice, grammar_automaton
from .errors import ConfigError
from .inference import PartialLabelSet, hard_em_step, nll, partial_nll, viterbi
from .scheme import (
    NUM_TAGS,
    TAGS,
    MentionSet,
    SentenceAnnotation,
    TagSequence,
    decode,
    encode,
)

__all__ = [
    "LinearScorer",
    "TrainConfig",
    "train",
    "predict",
    "predict_tags",
    "position_features",
    "sentence_features",
    "make_lattice_cache",
]

logger = logging.getLogger(__name__)

LOSSES = ("nll", "partial", "hard-em")
MODES = ("semantic", "structural")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


@lru_cache(maxsize=1 << 16)
def _fnv1a(text: str) -> int:
    """64-bit FNV-1a over UTF-8 bytes; fixed and seed-free for reproducibility."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def sentence_features(tokens: Sequence[str]) -> list[list[str]]:
    """Indicator features per position: word, neighbours, affixes."""
    low = [t.lower() for t in tokens]
    out = []
    for i, word in enumerate(low):
        out.append(
            [
                f"w={word}",
                f"w-1={low[i - 1] if i > 0 else '<bos>'}",
                f"w+1={low[i + 1] if i + 1 < len(low) else '<eos>'}",
                f"pre={word[:3]}",
                f"suf={word[-3:]}",
            ]
        )
    return out


def position_features(tokens: Sequence[str], i: int) -> list[str]:
    return sentence_features(tokens)[i]


class LinearScorer:
    """Linear model mapping token sequences to ``(n, 10)`` weight matrices."""

    FORMAT_VERSION = 1

    def __init__(self, dim: int = 2**18, params: np.ndarray | None = None):
        if dim < 1:
            raise ConfigError("feature dimension must be positive")
        self.dim = dim
        if params is None:
            params = np.zeros((dim, NUM_TAGS))
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (dim, NUM_TAGS):
            raise ConfigError(f"params must have shape ({dim}, {NUM_TAGS})")
        self.params = params

    def feature_indices(self, tokens: Sequence[str]) -> list[np.ndarray]:
        """Hashed feature rows per position."""
        return [
            np.fromiter((_fnv1a(f) % self.dim for f in feats), dtype=np.int64)
            for feats in sentence_features(tokens)
        ]

    def score(self, tokens: Sequence[str]) -> np.ndarray:
        """Deterministic ``(n, 10)`` score matrix for a non-empty sentence."""
        if not tokens:
            raise ValueError("cannot score an empty sentence")
        rows = self.feature_indices(tokens)
        flat = np.concatenate(rows)
        bounds = np.cumsum([0] + [len(r) for r in rows])[:-1]
        return np.add.reduceat(self.params[flat], bounds, axis=0)

    def apply_gradient(self, tokens: Sequence[str], grad: np.ndarray, lr: float, l2: float) -> None:
        """SGD update; the L2 penalty decays only the rows touched here."""
        rows = self.feature_indices(tokens)
        flat = np.concatenate(rows)
        if l2 > 0.0:
            touched = np.unique(flat)
            self.params[touched] *= 1.0 - lr * l2
        np.subtract.at(self.params, flat, lr * np.repeat(grad, [len(r) for r in rows], axis=0))

    def save(self, path) -> None:
        np.savez(
            path,
            format_version=np.int64(self.FORMAT_VERSION),
            dim=np.int64(self.dim),
            tagset=np.array([t.symbol for t in TAGS]),
            params=self.params,
        )

    @classmethod
    def load(cls, path) -> "LinearScorer":
        with np.load(path, allow_pickle=False) as data:
            version = int(data["format_version"])
            if version != cls.FORMAT_VERSION:
                raise ConfigError(f"unsupported model format version {version}")
            tagset = [str(s) for s in data["tagset"]]
            if tagset != [t.symbol for t in TAGS]:
                raise ConfigError("model tagset does not match this build")
            return cls(dim=int(data["dim"]), params=data["params"])


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "nll"
    epochs: int = 20
    learning_rate: float = 0.5
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.l2 < 0:
            raise ConfigError("l2 must be non-negative")


class _LatticeCache:
    """One lattice per sentence length; the grammar part is shared."""

    def __init__(self, grammar: Automaton):
        self.grammar = grammar
        self._by_length: dict[int, Lattice] = {}

    def __call__(self, n: int) -> Lattice:
        if n not in self._by_length:
            self._by_length[n] = build_lattice(self.grammar, n)
        return self._by_length[n]


def train(
    data: Iterable[tuple[Sequence[str], SentenceAnnotation]],
    config: TrainConfig,
    mode: str = "semantic",
    dim: int = 2**18,
) -> LinearScorer:
    """SGD over (tokens, annotation) pairs; returns the trained scorer.

    In structural mode every annotation is canonicalised so that the leftmost
    component of each set is typed x and the restricted grammar applies; the
    partially-supervised losses then see a single admissible sequence per
    sentence.  Incompatible sentences must have been filtered out beforehand.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    examples = []
    for tokens, ann in data:
        if len(tokens) != ann.n:
            raise ConfigError(f"annotation length {ann.n} != sentence length {len(tokens)}")
        if mode == "structural":
            ann = ann.structural()
        if config.loss == "nll":
            supervision = encode(ann)
        else:
            supervision = PartialLabelSet.from_annotation(ann)
        examples.append((tuple(tokens), supervision))
    if not examples:
        raise ConfigError("empty training corpus")

    scorer = LinearScorer(dim=dim)
    lattices = _LatticeCache(grammar_automaton(mode))
    rng = np.random.default_rng(config.seed)
    for epoch in range(config.epochs):
        total = 0.0
        for j in rng.permutation(len(examples)):
            tokens, supervision = examples[j]
            w = scorer.score(tokens)
            lattice = lattices(len(tokens))
            if config.loss == "nll":
                loss, grad = nll(lattice, w, supervision)
            elif config.loss == "partial":
                loss, grad = partial_nll(lattice, w, supervision)
            else:
                loss, grad, _ = hard_em_step(lattice, w, supervision)
            scorer.apply_gradient(tokens, grad, config.learning_rate, config.l2)
            total += loss
        logger.info("epoch %d: mean %s loss %.6f", epoch + 1, config.loss, total / len(examples))
    return scorer


def predict_tags(
    scorer: LinearScorer,
    tokens: Sequence[str],
    mode: str = "semantic",
    lattices: _LatticeCache | None = None,
) -> TagSequence:
    """MAP tag sequence; well-formed by construction."""
    if lattices is None:
        lattices = _LatticeCache(grammar_automaton(mode))
    _, ts = viterbi(lattices(len(tokens)), scorer.score(tokens))
    return ts


def predict(scorer: LinearScorer, tokens: Sequence[str], mode: str = "semantic") -> MentionSet:
    """Predicted mention set: decode of the MAP tag sequence.

    Decoding cannot fail: the lattice only admits well-formed sequences.
    """
    return decode(predict_tags(scorer, tokens, mode))


def make_lattice_cache(mode: str = "semantic") -> _LatticeCache:
    """Shared grammar/lattice cache for batch prediction loops."""
    return _LatticeCache(grammar_automaton(mode))
