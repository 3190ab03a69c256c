import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlforge.errors import ConfigError
from mtlforge.textnorm import (
    EmojiTable,
    Lexicon,
    NormConfig,
    emojis_to_text,
    normalize_masks,
    preprocess,
    segment,
    segment_hashtags,
)

MASKS_ONLY = NormConfig(masks=True, emoji=False, hashtags=False)
SUBMITTED = NormConfig(masks=True, emoji=True, hashtags=False)
ALL_ON = NormConfig(masks=True, emoji=True, hashtags=True)


def exhaustive_segment(body, lexicon):
    """Score every one of the 2**(n-1) splits; return (best score, best split)."""
    best = (float("-inf"), None)
    n = len(body)
    for cuts in itertools.product((False, True), repeat=n - 1):
        words, start = [], 0
        for i, cut in enumerate(cuts, 1):
            if cut:
                words.append(body[start:i])
                start = i
        words.append(body[start:])
        score = sum(lexicon.log_prob(w) for w in words)
        if score > best[0]:
            best = (score, words)
    return best


@pytest.mark.parametrize("text, expected", [
    ("@john check https://x.com/a", "[USER] check [URL]"),
    ("<user> hi URL", "[USER] hi [URL]"),
    ("no handles here", "no handles here"),
    ("@USER said www.example.org/x", "[USER] said [URL]"),
    ("[USER] and [URL] stay", "[USER] and [URL] stay"),
    ("URLhttp://x.io", "[URL][URL]"),  # the rewrite exposes a word boundary after "URL"
])
def test_normalize_masks(text, expected):
    assert normalize_masks(text) == expected


def test_custom_tokens():
    cfg = NormConfig(user_token="<u>", url_token="<link>")
    assert normalize_masks("@a http://b", cfg) == "<u> <link>"


def test_tokens_with_whitespace_rejected():
    with pytest.raises(ConfigError):
        NormConfig(user_token="a b")


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("@#:/.wh tpsUuRrLlE<>[]{}_ab1😂")), max_size=40))
def test_masks_idempotent(text):
    once = normalize_masks(text)
    assert normalize_masks(once) == once


def test_hashtag_examples():
    assert segment_hashtags("#hello") == "hello"
    assert segment_hashtags("#metoo") == "me too"
    assert segment_hashtags("love #catsofinstagram") == "love cats of instagram"
    assert segment_hashtags("issue #42 and a#b") == "issue 42 and a#b"


def test_unsegmentable_hashtag_loses_only_hash():
    assert segment_hashtags("#ñandú") == "ñandú"
    assert segment_hashtags("#qzxv") == "qzxv"


@pytest.mark.parametrize("tag", ["metoo", "catsofinstagram", "womensupportingwomen", "loveislove",
                                 "stophate", "girlpower", "throwbackthursday"])
def test_segment_matches_exhaustive_oracle(tag):
    lex = Lexicon.default()
    score, words = exhaustive_segment(tag, lex)
    got = segment(tag, lex)
    assert sum(lex.log_prob(w) for w in got) == pytest.approx(score, abs=1e-9)
    assert got == words


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(sorted(Lexicon.default().counts)), min_size=1, max_size=3))
def test_segmentation_is_a_partition(words):
    body = "".join(words)
    out = segment_hashtags("#" + body)
    assert out.replace(" ", "") == body.lower()


def test_emoji_examples():
    assert emojis_to_text("😂") == "face with tears of joy"
    assert emojis_to_text("good 😂😂") == "good face with tears of joy face with tears of joy"
    assert emojis_to_text("plain text  stays") == "plain text  stays"


def test_emoji_variation_selector_and_custom_table():
    table = EmojiTable({"❤": "red heart"})
    assert emojis_to_text("I ❤️ it", table) == "I red heart it"
    assert emojis_to_text("x😂", table) == "x😂"


@pytest.mark.parametrize("config, expected", [
    (MASKS_ONLY, "[USER] #metoo 😂"),
    (SUBMITTED, "[USER] #metoo face with tears of joy"),
    (ALL_ON, "[USER] me too face with tears of joy"),
])
def test_preprocess_toggles(config, expected):
    assert preprocess("@a #metoo 😂", config) == expected


def test_emoji_phrases_never_segmented():
    # the hashtag stage only sees '#' tokens, so emoji words stay intact
    table = EmojiTable({"🔥": "fire"})
    assert preprocess("🔥#hello", ALL_ON, table=table) == "fire hello"


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("@#:/.wh tpsab1😂_")), max_size=40))
def test_preprocess_introduces_no_handles_or_links(text):
    import re
    out = preprocess(text, ALL_ON)
    assert not re.search(r"@\w", out)
    if "http" not in text:
        assert "http" not in out
