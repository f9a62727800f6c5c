"""Deterministic phrase normalization: tokenize, lemmatize, drop stopwords.

The lemmatizer is rule-based and self-contained (exception table plus
ordered suffix rules, both shipped as package data) so that every consumer
— alignment keys, match tests, table lookups — sees exactly the same
tokens on every run. Rules are applied to a fixed point and stopwords are
tested against the lemma, which makes ``normalize_phrase`` idempotent:
normalizing the rendered form of a normalized phrase is a no-op.
"""

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Consonants that drop their doubling when -ing/-ed is stripped
# (swimming -> swim) without hitting -ll/-ss roots (falling -> fall).
_UNDOUBLE = set("bdgmnprt")
# Stem endings that take back their silent e (danced -> dance).
_RESTORE_E = set("csuvz")


def _load_stopwords() -> frozenset[str]:
    text = resources.files("kbmap.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def _load_exceptions() -> dict[str, str]:
    text = resources.files("kbmap.data").joinpath("lemma_exceptions.tsv").read_text("utf-8")
    table = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        form, lemma = line.split("\t")
        table[form] = lemma
    # Every lemma the table produces must itself be a fixed point, or
    # repeated normalization would drift (gases -> gas -> "ga").
    for lemma in list(table.values()):
        table.setdefault(lemma, lemma)
    return table


STOPWORDS = _load_stopwords()
LEMMA_EXCEPTIONS = _load_exceptions()


def _strip_suffix(token: str) -> str:
    """One pass of the ordered suffix rules; returns the token unchanged
    when no rule fires."""
    n = len(token)
    if n >= 5 and token.endswith("ies"):
        return token[:-3] + "y"
    if n >= 5 and token.endswith("sses"):
        return token[:-2]
    if n >= 4 and token.endswith("ses"):
        return token[:-1]
    if n >= 4 and token.endswith("es") and token[-4:-2] in ("ch", "sh"):
        return token[:-2]
    if n >= 4 and token.endswith("xes"):
        return token[:-2]
    if n >= 4 and token.endswith("ss"):
        return token
    if n >= 3 and token.endswith("s") and not token.endswith(("us", "is")):
        return token[:-1]
    if n >= 6 and token.endswith("eed"):
        return token[:-1]
    if n >= 6 and token.endswith("ing"):
        stem = token[:-3]
        stem = _post_strip(stem)
        return stem if len(stem) >= 3 else token
    if n >= 5 and token.endswith("ed"):
        stem = token[:-2]
        stem = _post_strip(stem)
        return stem if len(stem) >= 3 else token
    return token


def _post_strip(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] in _UNDOUBLE:
        return stem[:-1]
    if stem and stem[-1] in _RESTORE_E and not stem.endswith("ss"):
        return stem + "e"
    return stem


@lru_cache(maxsize=65536)
def lemmatize_token(token: str) -> str:
    """Lemma of a single lowercase token (exceptions first, then suffix
    rules, iterated to a fixed point)."""
    while True:
        hit = LEMMA_EXCEPTIONS.get(token)
        if hit is not None:
            if hit == token:
                return token
            token = hit
            continue
        stripped = _strip_suffix(token)
        if stripped == token:
            return token
        token = stripped


def tokenize(phrase: str) -> list[str]:
    """Lowercase word tokens; punctuation and whitespace separate, anything
    non-alphanumeric is dropped."""
    return _TOKEN_RE.findall(phrase.casefold())


@dataclass(frozen=True)
class NormalizedPhrase:
    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __bool__(self) -> bool:
        return bool(self.tokens)


def normalize_phrase(phrase: str) -> NormalizedPhrase:
    """Lowercase, tokenize, lemmatize, and remove stopword lemmas.

    Empty input (or input consisting only of stopwords/punctuation) yields
    an empty token list, which renders as "" and never matches a nonempty
    key.
    """
    lemmas = (lemmatize_token(tok) for tok in tokenize(phrase))
    return NormalizedPhrase(tuple(lem for lem in lemmas if lem not in STOPWORDS))


def lemma_tokens(phrase: str) -> tuple[str, ...]:
    """Lemmatized tokens with stopwords kept (used for predicate-token
    statistics where words like "in" or "be" carry signal)."""
    return tuple(lemmatize_token(tok) for tok in tokenize(phrase))
