"""Text normalization and tokenization policy for all string comparison.

Every metric and every cross-run answer match goes through one
:class:`NormConfig`, so two results computed with equal configs over equal
inputs are equal. Transforms run in a fixed order:

    unicode form -> tatweel -> diacritics -> alef/ya folding
    -> punctuation -> whitespace -> latin case

The configured unicode form is re-applied at the very end: deleting
characters can expose base+mark sequences that the form would compose, and
re-asserting the form keeps ``normalize`` idempotent.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import asdict, dataclass

_TATWEEL = "ـ"

# Harakat, tanwin, the dagger alef and the Qur'anic annotation marks.
_DIACRITICS = re.compile(
    "[ؐ-ًؚ-ٰٟۖ-ۜ۟-۪ۨ-ۭ]"
)

_ALEF_YA_FOLD = str.maketrans({
    "آ": "ا",  # alef madda
    "أ": "ا",  # alef hamza above
    "إ": "ا",  # alef hamza below
    "ٱ": "ا",  # alef wasla
    "ى": "ي",  # alef maqsura -> ya
})

_ASCII_LOWER = str.maketrans(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz"
)

UNICODE_FORMS = (None, "NFC", "NFD", "NFKC", "NFKD")


@dataclass(frozen=True)
class NormConfig:
    """Normalization policy, value-comparable and hashable.

    The default is the evaluation policy: canonical composition, diacritic
    and tatweel stripping, punctuation stripping, whitespace collapsing and
    ASCII lowercasing, with alef/ya folding off. ``identity()`` disables
    everything, which makes string comparison raw equality and tokenization
    plain whitespace splitting.
    """

    unicode_form: str | None = "NFC"
    strip_diacritics: bool = True
    strip_tatweel: bool = True
    normalize_alef_ya: bool = False
    strip_punctuation: bool = True
    collapse_whitespace: bool = True
    lowercase_latin: bool = True

    def __post_init__(self) -> None:
        if self.unicode_form not in UNICODE_FORMS:
            raise ValueError(
                f"unicode_form must be one of {UNICODE_FORMS}, got {self.unicode_form!r}"
            )

    @classmethod
    def identity(cls) -> "NormConfig":
        """Config under which normalize(text) == text."""
        return cls(
            unicode_form=None,
            strip_diacritics=False,
            strip_tatweel=False,
            normalize_alef_ya=False,
            strip_punctuation=False,
            collapse_whitespace=False,
            lowercase_latin=False,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NormConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown NormConfig keys: {sorted(unknown)}")
        return cls(**d)


DEFAULT_CONFIG = NormConfig()


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize(text: str, cfg: NormConfig = DEFAULT_CONFIG) -> str:
    """Apply the enabled transforms in the documented order."""
    s = text
    if cfg.unicode_form:
        s = unicodedata.normalize(cfg.unicode_form, s)
    if cfg.strip_tatweel:
        s = s.replace(_TATWEEL, "")
    if cfg.strip_diacritics:
        s = _DIACRITICS.sub("", s)
    if cfg.normalize_alef_ya:
        s = s.translate(_ALEF_YA_FOLD)
    if cfg.strip_punctuation:
        s = "".join(ch for ch in s if not _is_punct(ch))
    if cfg.collapse_whitespace:
        s = " ".join(s.split())
    if cfg.lowercase_latin:
        s = s.translate(_ASCII_LOWER)
    if cfg.unicode_form:
        s = unicodedata.normalize(cfg.unicode_form, s)
    return s


def tokenize(text: str, cfg: NormConfig = DEFAULT_CONFIG) -> list[str]:
    """Normalize, then split on whitespace. Never yields empty tokens."""
    return normalize(text, cfg).split()
