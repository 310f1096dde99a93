"""Word-level post-processing: Levenshtein distance and dictionary-based
correction of recognized character strings."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

UNCORRECTED = -1  # sentinel distance when no dictionary word is close enough


def edit_distance(a: str, b: str) -> int:
    """Minimal number of single-character inserts, deletes and substitutions
    turning a into b. Standard two-row dynamic program."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,        # delete from a
                cur[j - 1] + 1,     # insert into a
                prev[j - 1] + (ca != cb),
            )
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class Dictionary:
    words: frozenset[str]
    max_edit: int = 2

    def __post_init__(self):
        if not self.words:
            raise ValueError("dictionary is empty")
        if any(not w for w in self.words):
            raise ValueError("dictionary words must be nonempty")
        if self.max_edit < 0:
            raise ValueError("max_edit must be non-negative")

    @classmethod
    def from_words(cls, words, max_edit: int = 2) -> "Dictionary":
        return cls(words=frozenset(words), max_edit=max_edit)

    @classmethod
    def load(cls, path, max_edit: int = 2) -> "Dictionary":
        """One lowercase word per line, UTF-8."""
        words = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            w = line.strip()
            if w:
                words.append(w)
        return cls.from_words(words, max_edit=max_edit)


def correct_word(chars: str, dictionary: Dictionary) -> tuple[str, int]:
    """Closest dictionary word within max_edit (ties: lexicographically
    smallest); otherwise the input unchanged with the -1 sentinel."""
    best_word, best_dist = None, None
    for w in sorted(dictionary.words):
        d = edit_distance(chars, w)
        if d <= dictionary.max_edit and (best_dist is None or d < best_dist):
            best_word, best_dist = w, d
            if d == 0:
                break
    if best_word is None:
        return chars, UNCORRECTED
    return best_word, best_dist


def word_accuracy(pred_words, true_words) -> float:
    """Exact-match fraction over aligned word lists."""
    pred, true = list(pred_words), list(true_words)
    if len(pred) != len(true):
        raise ValueError(f"length mismatch: {len(pred)} predictions, {len(true)} references")
    if not pred:
        raise ValueError("empty word lists")
    return sum(p == t for p, t in zip(pred, true)) / len(pred)
