"""Vocabulary construction and deterministic comment encoding.

A deliberately small substitute for subword tokenizers: either whole
whitespace-split words (surrounding punctuation stripped) or single Unicode
scalar values. Char mode is the default because the corpora mix Latin and
Dravidian scripts inside one comment.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import ContractError, DataError

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
VOCAB_FORMAT_VERSION = "1"
MODES = ("word", "char")


@dataclass(frozen=True)
class Vocab:
    mode: str
    id_to_token: tuple[str, ...]
    token_to_id: dict[str, int] = field(compare=False)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)


@dataclass(frozen=True)
class TokenSeq:
    """One encoded comment: fixed-length ids with a 0/1 validity mask."""

    ids: tuple[int, ...]
    mask: tuple[int, ...]
    raw_length: int

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def content_length(self) -> int:
        return sum(self.mask) - 2  # minus [CLS] and [SEP]


def _strip_punct(word: str) -> str:
    start, stop = 0, len(word)
    while start < stop and unicodedata.category(word[start]).startswith("P"):
        start += 1
    while stop > start and unicodedata.category(word[stop - 1]).startswith("P"):
        stop -= 1
    return word[start:stop]


def tokenize(text: str, mode: str) -> list[str]:
    if mode == "word":
        return [w for w in (_strip_punct(raw) for raw in text.split()) if w]
    if mode == "char":
        return list(text)
    raise ContractError(f"unknown tokenizer mode {mode!r}, expected one of {MODES}")


def build_vocab(
    corpus: Iterable[str],
    mode: str = "char",
    min_freq: int = 1,
    max_size: Optional[int] = None,
) -> Vocab:
    """Frequency-ranked vocabulary over `corpus`.

    Tokens seen at least `min_freq` times are kept, ordered by descending
    frequency then token text, capped at `max_size` entries after the four
    special tokens.
    """
    if min_freq < 1:
        raise ContractError(f"min_freq must be >= 1, got {min_freq}")
    freq: dict[str, int] = {}
    texts = 0
    for text in corpus:
        texts += 1
        for token in tokenize(text, mode):
            freq[token] = freq.get(token, 0) + 1
    if texts == 0:
        raise ContractError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(
        (tok for tok, n in freq.items() if n >= min_freq),
        key=lambda tok: (-freq[tok], tok),
    )
    if max_size is not None:
        ranked = ranked[:max_size]
    id_to_token = SPECIAL_TOKENS + tuple(ranked)
    return Vocab(
        mode=mode,
        id_to_token=id_to_token,
        token_to_id={tok: i for i, tok in enumerate(id_to_token)},
    )


def encode(text: str, vocab: Vocab, max_len: int) -> TokenSeq:
    """[CLS] + token ids truncated to max_len-2 + [SEP], padded to max_len."""
    if max_len < 3:
        raise ContractError(f"max_len must be >= 3, got {max_len}")
    tokens = tokenize(text, vocab.mode)
    kept = tokens[: max_len - 2]
    ids = [CLS] + [vocab.lookup(tok) for tok in kept] + [SEP]
    mask = [1] * len(ids)
    pad = max_len - len(ids)
    ids.extend([PAD] * pad)
    mask.extend([0] * pad)
    return TokenSeq(ids=tuple(ids), mask=tuple(mask), raw_length=len(tokens))


def decode(ids: Sequence[int], vocab: Vocab) -> list[str]:
    """Tokens for `ids` with the special ids stripped (round-trip helper)."""
    return [vocab.id_to_token[i] for i in ids if i > SEP]


def save_vocab(vocab: Vocab, path: str) -> None:
    lines = [VOCAB_FORMAT_VERSION, vocab.mode]
    for token in vocab.id_to_token[len(SPECIAL_TOKENS) :]:
        if "\n" in token or "\r" in token:
            raise ContractError(f"token {token!r} contains a line break")
        lines.append(token)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_vocab(path: str) -> Vocab:
    with open(path, encoding="utf-8", newline="\n") as fh:
        raw = fh.read()
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise DataError(f"{path}: vocabulary file is missing its 2-line header")
    version, mode = lines[0], lines[1]
    if version != VOCAB_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported vocabulary format version {version!r}")
    if mode not in MODES:
        raise DataError(f"{path}: unknown tokenizer mode {mode!r}")
    id_to_token = SPECIAL_TOKENS + tuple(lines[2:])
    if len(set(id_to_token)) != len(id_to_token):
        raise DataError(f"{path}: duplicate tokens in vocabulary file")
    return Vocab(
        mode=mode,
        id_to_token=id_to_token,
        token_to_id={tok: i for i, tok in enumerate(id_to_token)},
    )
