"""Optional term-overlap retrieval over a local snippet directory.

Off by default. When enabled, the corpus is a directory of UTF-8 text
files; a snippet's score for a query is the number of distinct case-folded
query terms that occur in it. No embeddings, no external services.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Snippet:
    source_id: str
    text: str
    score: float = 0.0

    def __post_init__(self):
        if self.score < 0:
            raise ValueError("score must be nonnegative")


class SnippetCorpus:
    """Snippets read from the text files of one directory, sorted by name."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def entries(self) -> list[tuple[str, str]]:
        if not self.root.is_dir():
            return []
        out = []
        for path in sorted(self.root.iterdir()):
            if path.is_file():
                try:
                    out.append((path.name, path.read_text(encoding="utf-8")))
                except (OSError, UnicodeDecodeError):
                    logger.warning("skipping unreadable snippet file %s", path)
        return out


def _terms(text: str) -> set[str]:
    return {token.casefold() for token in text.split()}


def retrieve_context(query: str, corpus: SnippetCorpus | None, k: int) -> list[Snippet]:
    """Top-k snippets by descending term overlap; ties break on source_id.

    A missing corpus is not an error: it logs a warning and yields nothing.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if corpus is None or not corpus.root.is_dir():
        logger.warning("snippet corpus missing (%s); retrieval returned nothing",
                       getattr(corpus, "root", None))
        return []

    query_terms = _terms(query)
    scored = []
    for source_id, text in corpus.entries():
        score = len(query_terms & _terms(text))
        if score > 0:
            scored.append(Snippet(source_id=source_id, text=text, score=float(score)))
    scored.sort(key=lambda s: (-s.score, s.source_id))
    return scored[:k]
