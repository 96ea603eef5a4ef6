"""Turn raw policy documents into filtered, classifier-ready sentences."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path

DEFAULT_CONTACT_PHRASES = ("contact us", "call us", "email us", "reach us", "write to us")
DEFAULT_NEGATION_PHRASES = (
    "does not", "doesn't", "do not", "don't", "will not", "won't", "never collect",
)

# Tokens that end in a period without ending a sentence.
ABBREVIATIONS = frozenset({
    "inc.", "ltd.", "llc.", "co.", "corp.", "e.g.", "i.e.", "u.s.", "u.k.",
    "mr.", "mrs.", "ms.", "dr.", "st.", "no.", "vs.", "approx.", "dept.", "jr.", "sr.",
})
MIN_SENTENCE_TOKENS = 3

_PUNCT_MAP = str.maketrans({
    "‘": "'", "’": "'", "‚": "'", "‛": "'", "′": "'",
    "“": '"', "”": '"', "„": '"', "‟": '"', "″": '"',
    "«": '"', "»": '"',
    "‐": "-", "‑": "-", "‒": "-", "–": "-", "—": "-",
    "―": "-", "−": "-", "﹘": "-", "﹣": "-", "－": "-",
    "…": "...",
    # Left behind by entity decoding; removed so a second pass finds no markup.
    "<": " ", ">": " ", "&": " and ",
})

_SKIP_TAGS = {"script", "style", "noscript", "template", "head", "title", "svg"}


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip += 1
        self.parts.append(" ")

    def handle_startendtag(self, tag, attrs):
        self.parts.append(" ")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS and self._skip:
            self._skip -= 1
        self.parts.append(" ")

    def handle_data(self, data):
        if not self._skip:
            self.parts.append(data)


def clean_html(raw: str) -> str:
    if not raw:
        return ""
    parser = _TextExtractor()
    parser.feed(raw)
    parser.close()
    text = "".join(parser.parts).translate(_PUNCT_MAP)
    # Unicode whitespace (including no-break spaces) must become spaces before
    # non-ASCII characters are discarded.
    text = " ".join(text.split())
    text = text.encode("ascii", "ignore").decode("ascii")
    text = "".join(ch for ch in text if ch.isprintable())
    return " ".join(text.split()).lower()


_BOUNDARY = re.compile(r"[.!?]+(?=\s)")


def split_sentences(text: str, abbreviations=ABBREVIATIONS) -> list[str]:
    text = " ".join(text.split())
    if not text:
        return []
    pieces = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        end = m.end()
        last_token = text[start:end].rsplit(" ", 1)[-1]
        if m.group() == "." and last_token in abbreviations:
            continue
        pieces.append(text[start:end].strip())
        start = end
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)

    sentences = []
    carry = ""
    for piece in pieces:
        piece = f"{carry} {piece}".strip() if carry else piece
        if len(piece.split()) < MIN_SENTENCE_TOKENS:
            carry = piece
        else:
            sentences.append(piece)
            carry = ""
    if carry:
        if sentences:
            sentences[-1] = f"{sentences[-1]} {carry}"
        else:
            sentences.append(carry)
    return sentences


@dataclass(frozen=True)
class FilterList:
    contact_phrases: tuple[str, ...] = DEFAULT_CONTACT_PHRASES
    negation_phrases: tuple[str, ...] = DEFAULT_NEGATION_PHRASES

    def __post_init__(self):
        object.__setattr__(self, "contact_phrases",
                           tuple(p.strip().lower() for p in self.contact_phrases if p.strip()))
        object.__setattr__(self, "negation_phrases",
                           tuple(p.strip().lower() for p in self.negation_phrases if p.strip()))
        phrases = self.contact_phrases + self.negation_phrases
        if phrases:
            alternation = "|".join(re.escape(p) for p in sorted(phrases, key=len, reverse=True))
            pattern = re.compile(rf"(?<![a-z0-9])(?:{alternation})(?![a-z0-9])")
        else:
            pattern = None
        object.__setattr__(self, "_pattern", pattern)

    def matches(self, sentence: str) -> bool:
        return self._pattern is not None and self._pattern.search(sentence) is not None

    @classmethod
    def load(cls, path) -> "FilterList":
        """Read ``[contact]`` and ``[negation]`` sections, one phrase per line."""
        sections = {"contact": [], "negation": []}
        current = None
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            header = re.fullmatch(r"\[(\w+)\]", line)
            if header:
                current = header.group(1).lower()
                if current not in sections:
                    raise ValueError(f"{path}: unknown section [{current}]")
                continue
            if current is None:
                raise ValueError(f"{path}: phrase {line!r} outside a section")
            sections[current].append(line)
        return cls(tuple(sections["contact"]), tuple(sections["negation"]))

    @classmethod
    def default(cls) -> "FilterList":
        ref = resources.files("skilltrace") / "data" / "filters.txt"
        with resources.as_file(ref) as p:
            return cls.load(p)


def filter_sentences(sentences, filters: FilterList) -> tuple[list[str], int]:
    kept = [s for s in sentences if not filters.matches(s)]
    return kept, len(sentences) - len(kept)


@dataclass(frozen=True)
class PreprocessedPolicy:
    policy_id: str
    sentences: tuple[str, ...]
    dropped_count: int
    # Position of each kept sentence in the unfiltered sentence list.
    positions: tuple[int, ...] = field(default=(), compare=False)

    @property
    def is_empty(self) -> bool:
        return not self.sentences


def preprocess_policy(policy_id: str, raw: str | None, filters: FilterList | None = None
                      ) -> PreprocessedPolicy:
    filters = filters or FilterList()
    split = split_sentences(clean_html(raw or ""))
    kept, positions = [], []
    for i, s in enumerate(split):
        if not filters.matches(s):
            kept.append(s)
            positions.append(i)
    return PreprocessedPolicy(policy_id, tuple(kept), len(split) - len(kept), tuple(positions))
