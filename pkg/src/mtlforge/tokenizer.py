"""Word-level vocabulary and fixed-length encoding with BERT-style specials."""

from __future__ import annotations

import re
from collections import Counter
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ContractError

PAD, UNK, CLS, SEP, MASK = 0, 1, 2, 3, 4
SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")

# bracketed mask tokens such as [user] survive as one token
_TOKEN = re.compile(r"\[\w+\]|\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class Vocab:
    def __init__(self, tokens: Iterable[str], min_freq: int = 1):
        self.token_of: list[str] = list(SPECIALS)
        for tok in tokens:
            if tok not in SPECIALS:
                self.token_of.append(tok)
        self.id_of = {tok: i for i, tok in enumerate(self.token_of)}
        if len(self.id_of) != len(self.token_of):
            raise ContractError("vocabulary tokens are not unique")
        self.min_freq = min_freq

    def __len__(self) -> int:
        return len(self.token_of)

    def __contains__(self, token: str) -> bool:
        return token in self.id_of

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.token_of == other.token_of

    def save(self, path) -> None:
        Path(path).write_text("".join(f"{t}\t{i}\n" for i, t in enumerate(self.token_of)), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocab":
        rows = [line.split("\t") for line in Path(path).read_text(encoding="utf-8").splitlines() if line]
        tokens = [t for t, _ in rows]
        ids = [int(i) for _, i in rows]
        if ids != list(range(len(ids))) or tuple(tokens[:len(SPECIALS)]) != SPECIALS:
            raise ContractError(f"{path}: ids must be 0..n-1 with specials first")
        if len(set(tokens)) != len(tokens):
            raise ContractError(f"{path}: duplicate tokens break the id bijection")
        return cls(tokens[len(SPECIALS):])


def build_vocab(texts: Iterable[str], min_freq: int = 1) -> Vocab:
    """Ids assigned after the specials by descending frequency, ties alphabetical."""
    counts = Counter()
    n = 0
    for text in texts:
        n += 1
        counts.update(tokenize(text))
    if n == 0:
        raise ContractError("cannot build a vocabulary from an empty corpus")
    kept = sorted((t for t, c in counts.items() if c >= min_freq), key=lambda t: (-counts[t], t))
    return Vocab(kept, min_freq=min_freq)


def encode(text: str, vocab: Vocab, max_len: int) -> tuple[list[int], list[int]]:
    """``[CLS] tokens [SEP]`` truncated to ``max_len`` (keeping ``[SEP]``) and right-padded."""
    if max_len < 2:
        raise ContractError(f"max_len must be at least 2, got {max_len}")
    body = [vocab.id_of.get(t, UNK) for t in tokenize(text)][:max_len - 2]
    ids = [CLS] + body + [SEP]
    mask = [1] * len(ids)
    pad = max_len - len(ids)
    return ids + [PAD] * pad, mask + [0] * pad


def encode_batch(texts: Iterable[str], vocab: Vocab, max_len: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = [encode(t, vocab, max_len) for t in texts]
    if not pairs:
        return np.zeros((0, max_len), np.int64), np.zeros((0, max_len), np.int64)
    ids, masks = zip(*pairs)
    return np.array(ids, dtype=np.int64), np.array(masks, dtype=np.int64)


def decode(ids: Iterable[int], vocab: Vocab) -> str:
    out = []
    for i in ids:
        i = int(i)
        if not 0 <= i < len(vocab):
            raise ContractError(f"id {i} outside vocabulary of size {len(vocab)}")
        if i in (PAD, CLS, SEP):
            continue
        out.append(vocab.token_of[i])
    return " ".join(out)
