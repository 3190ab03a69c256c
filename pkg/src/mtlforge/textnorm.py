"""Social-media text normalisation: mask unification, emoji verbalisation and
hashtag word segmentation, composable through :func:`preprocess`.

Stages always run in the order masks -> emoji -> hashtags so URL fragments
are never segmented and emoji phrases never look like hashtags.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

DATA = resources.files("mtlforge") / "data"


@dataclass(frozen=True)
class NormConfig:
    masks: bool = True
    emoji: bool = True
    hashtags: bool = False
    user_token: str = "[USER]"
    url_token: str = "[URL]"

    def __post_init__(self):
        for tok in (self.user_token, self.url_token):
            if not tok or any(c.isspace() for c in tok):
                raise ConfigError(f"mask token must be non-empty without whitespace, got {tok!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "NormConfig":
        return cls(**d)


# -- masks -----------------------------------------------------------------

_URL_LEGACY = [r"https?://\S+", r"www\.\S+", r"<url>", r"<URL>", r"\{URL\}", r"\{url\}",
               r"\bHTTPURL\b", r"\[link\]", r"\bURL\b"]
_USER_LEGACY = [r"@\w+", r"<user>", r"<USER>", r"\{USER\}", r"\{user\}", r"\[user\]", r"\bMENTION\b"]


@functools.lru_cache(maxsize=16)
def _mask_pattern(user_token: str, url_token: str) -> re.Pattern:
    # canonical tokens come first so they are consumed whole and re-emitted unchanged
    url = "|".join([re.escape(url_token)] + _URL_LEGACY)
    user = "|".join([re.escape(user_token)] + _USER_LEGACY)
    if len(url_token) >= len(user_token):
        return re.compile(f"(?P<url>{url})|(?P<user>{user})")
    return re.compile(f"(?P<user>{user})|(?P<url>{url})")


def normalize_masks(text: str, config: NormConfig = NormConfig()) -> str:
    """Rewrite handles, URLs and legacy mask spellings to the configured tokens."""
    pattern = _mask_pattern(config.user_token, config.url_token)
    repl = lambda m: config.url_token if m.lastgroup == "url" else config.user_token
    # a rewrite can create a word boundary ("URLhttp://x" -> "URL[URL]"), so repeat until stable
    while True:
        out = pattern.sub(repl, text)
        if out == text:
            return out
        text = out


# -- emoji -----------------------------------------------------------------

class EmojiTable:
    """Mapping from emoji sequences to plain-word phrases."""

    def __init__(self, entries: dict[str, str]):
        self.entries = {k: " ".join(v.split()) for k, v in entries.items() if k and v.strip()}
        alternatives = sorted(self.entries, key=len, reverse=True)
        # a trailing variation selector belongs to the emoji it follows
        self.pattern = re.compile("(?:" + "|".join(map(re.escape, alternatives)) + ")\ufe0f?") \
            if alternatives else None

    @classmethod
    def from_file(cls, path) -> "EmojiTable":
        entries = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            emoji, _, phrase = line.partition("\t")
            entries[emoji] = phrase
        return cls(entries)

    @classmethod
    @functools.lru_cache(maxsize=1)
    def default(cls) -> "EmojiTable":
        return cls.from_file(DATA / "emoji.tsv")

    def lookup(self, match: str) -> str:
        return self.entries.get(match) or self.entries[match.rstrip("\ufe0f")]


def emojis_to_text(text: str, table: EmojiTable | None = None) -> str:
    """Replace every known emoji by its phrase, separated by single spaces."""
    table = table or EmojiTable.default()
    if table.pattern is None:
        return text
    matches = list(table.pattern.finditer(text))
    if not matches:
        return text
    pieces = [text[:matches[0].start()].rstrip(" ")]
    for i, m in enumerate(matches):
        pieces.append(table.lookup(m.group()))
        stop = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        chunk = text[m.end():stop]
        pieces.append(chunk.strip(" ") if i + 1 < len(matches) else chunk.lstrip(" "))
    return " ".join(p for p in pieces if p)


# -- hashtags --------------------------------------------------------------

class Lexicon:
    """Unigram counts backing hashtag segmentation."""

    def __init__(self, counts: dict[str, int]):
        if not counts:
            raise ConfigError("lexicon is empty")
        for word, c in counts.items():
            if not word or word != word.lower() or c <= 0:
                raise ConfigError(f"bad lexicon entry {word!r}: {c}")
        self.counts = dict(counts)
        self.total = sum(self.counts.values())
        self._log_total = math.log10(self.total)
        self.max_word_len = max(map(len, self.counts))

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        counts = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                word, count = line.split("\t")
                counts[word] = counts.get(word, 0) + int(count)
        return cls(counts)

    @classmethod
    @functools.lru_cache(maxsize=1)
    def default(cls) -> "Lexicon":
        return cls.from_file(DATA / "lexicon.tsv")

    def log_prob(self, word: str) -> float:
        """log10 unigram probability; unseen words get 10**(-3*len) / total."""
        c = self.counts.get(word)
        if c is not None:
            return math.log10(c) - self._log_total
        return -3.0 * len(word) - self._log_total

    def __contains__(self, word: str) -> bool:
        return word in self.counts


def segment(body: str, lexicon: Lexicon) -> list[str]:
    """Most probable split of a lowercase letter string under the unigram model."""
    n = len(body)
    best = [0.0] + [-math.inf] * n
    back = [0] * (n + 1)
    for end in range(1, n + 1):
        for start in range(end):
            score = best[start] + lexicon.log_prob(body[start:end])
            if score > best[end]:
                best[end] = score
                back[end] = start
    words = []
    end = n
    while end > 0:
        words.append(body[back[end]:end])
        end = back[end]
    return words[::-1]


_HASHTAG = re.compile(r"(?<![\w@&#])#(\w+)")
_LETTERS = re.compile(r"[a-z]+|[0-9]+")


def _segment_hashtag(body: str, lexicon: Lexicon) -> str:
    lowered = body.lower()
    parts = _LETTERS.findall(lowered)
    if not parts or "".join(parts) != lowered.replace("_", ""):
        return body
    words: list[str] = []
    for part in parts:
        words.extend([part] if part.isdigit() else segment(part, lexicon))
    if not any(w in lexicon for w in words):
        return body
    return " ".join(words)


def segment_hashtags(text: str, lexicon: Lexicon | None = None) -> str:
    """Replace each ``#tag`` by its word segmentation; other text is untouched."""
    lexicon = lexicon or Lexicon.default()
    return _HASHTAG.sub(lambda m: _segment_hashtag(m.group(1), lexicon), text)


def preprocess(text: str, config: NormConfig = NormConfig(), lexicon: Lexicon | None = None,
               table: EmojiTable | None = None) -> str:
    if config.masks:
        text = normalize_masks(text, config)
    if config.emoji:
        text = emojis_to_text(text, table)
    if config.hashtags:
        text = segment_hashtags(text, lexicon)
    return text
