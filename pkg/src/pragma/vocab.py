"""Word vocabulary with unk handling."""

from __future__ import annotations

from collections import Counter

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"


class Vocab:
    """Token <-> index map. Index 0 is the unk class; BOS/EOS get dedicated
    slots so the speaker can condition on and predict them."""

    def __init__(self, words: list[str]):
        self.tokens = [UNK, BOS, EOS] + [w for w in words if w not in (UNK, BOS, EOS)]
        self.index = {t: i for i, t in enumerate(self.tokens)}

    @classmethod
    def from_sentences(cls, sentences, min_count: int = 2) -> "Vocab":
        counts = Counter(tok for sent in sentences for tok in sent)
        kept = sorted(w for w, c in counts.items() if c >= min_count)
        return cls(kept)

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def unk_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    def encode(self, token: str) -> int:
        return self.index.get(token, 0)

    def word(self, idx: int) -> str:
        return self.tokens[idx]

    def to_list(self) -> list[str]:
        return list(self.tokens)

    @classmethod
    def from_list(cls, tokens: list[str]) -> "Vocab":
        v = cls.__new__(cls)
        v.tokens = list(tokens)
        v.index = {t: i for i, t in enumerate(v.tokens)}
        return v
