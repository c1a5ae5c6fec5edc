"""Corpus BLEU (multi-sentence outputs joined by end-of-sentence tokens) and
the paired sign test."""

from __future__ import annotations

import math
from collections import Counter

from scipy import stats

from ..vocab import EOS


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(candidates: list[list[str]], references: list[list[str]],
                max_n: int = 4) -> float:
    """Corpus-level BLEU in [0, 100]: clipped modified n-gram precision with
    the standard brevity penalty, one reference per candidate, no smoothing
    (any empty n-gram order gives 0)."""
    if len(candidates) != len(references):
        raise ValueError("candidate/reference count mismatch")
    if not candidates:
        return 0.0
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand = list(cand)
        ref = list(ref)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            cgrams = _ngrams(cand, n)
            rgrams = _ngrams(ref, n)
            totals[n - 1] += max(len(cand) - n + 1, 0)
            matches[n - 1] += sum(min(c, rgrams[g]) for g, c in cgrams.items())
    if cand_len == 0:
        return 0.0
    log_p = 0.0
    for m, t in zip(matches, totals):
        if m == 0 or t == 0:
            return 0.0
        log_p += math.log(m / t) / max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * bp * math.exp(log_p)


def join_sentences(sentences: list[tuple[str, ...]], separator: str = EOS) -> list[str]:
    """One token sequence per episode: sentences separated by end-of-sentence
    tokens (descriptions may have different sentence counts than references)."""
    out: list[str] = []
    for k, sent in enumerate(sentences):
        if k:
            out.append(separator)
        out.extend(sent)
    return out


def speaker_corpus_bleu(predicted: list[list[tuple[str, ...]]],
                        reference: list[list[tuple[str, ...]]]) -> float:
    return corpus_bleu([join_sentences(p) for p in predicted],
                       [join_sentences(r) for r in reference])


def paired_sign_test(wins: int, losses: int) -> float:
    """Two-sided sign test p-value over paired per-instance outcomes (ties
    dropped)."""
    n = wins + losses
    if n == 0:
        return 1.0
    return float(stats.binomtest(wins, n, 0.5).pvalue)
