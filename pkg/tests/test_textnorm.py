import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrctk.textnorm import DEFAULT_CONFIG, NormConfig, normalize, tokenize

IDENTITY = NormConfig.identity()

# A few representative policies, including the aggressive everything-on one.
CONFIGS = [
    DEFAULT_CONFIG,
    IDENTITY,
    NormConfig(unicode_form="NFKC", normalize_alef_ya=True),
    NormConfig(unicode_form="NFD"),
    NormConfig(unicode_form=None, strip_punctuation=True, collapse_whitespace=False),
]


def test_identity_config_is_identity():
    samples = [
        "",
        "Hello,  World!",
        "كِتَابٌ",  # kitab with harakat
        "  spaced\tout  ",
    ]
    for s in samples:
        assert normalize(s, IDENTITY) == s


def test_tatweel_removed_letters_preserved():
    # kataba with three tatweel stretches between letters
    word = "كـتــب"
    out = normalize(word, NormConfig(unicode_form=None, strip_tatweel=True,
                                     strip_diacritics=False, strip_punctuation=False,
                                     collapse_whitespace=False, lowercase_latin=False))
    assert out == "كتب"
    assert len(word) - len(out) == 3


def test_diacritics_stripped():
    voweled = "كِتَابٌ"
    assert normalize(voweled) == "كتاب"


def test_alef_ya_folding_toggles():
    text = "أحمد موسى"  # hamza-alef + final alef-maqsura
    folded = normalize(text, NormConfig(normalize_alef_ya=True))
    assert folded == "احمد موسي"
    unfolded = normalize(text, NormConfig(normalize_alef_ya=False))
    assert unfolded == text


def test_punctuation_stripped_including_arabic_marks():
    assert normalize("word, ما؟") == "word ما"


def test_whitespace_collapse():
    assert normalize("a   b") == "a b"
    assert tokenize("alpha   beta") == ["alpha", "beta"]


def test_latin_lowercase_inert_on_arabic():
    assert normalize("ABC كتاب") == "abc كتاب"


def test_config_value_comparable():
    assert NormConfig() == NormConfig()
    assert NormConfig() != NormConfig(strip_diacritics=False)
    assert NormConfig.from_dict(NormConfig().to_dict()) == NormConfig()


def test_bad_unicode_form_rejected():
    with pytest.raises(ValueError):
        NormConfig(unicode_form="NFX")
    with pytest.raises(ValueError):
        NormConfig.from_dict({"no_such_key": True})


@pytest.mark.parametrize("cfg", CONFIGS)
@settings(max_examples=200)
@given(text=st.text())
def test_normalize_idempotent(cfg, text):
    once = normalize(text, cfg)
    assert normalize(once, cfg) == once


@pytest.mark.parametrize("cfg", CONFIGS)
@settings(max_examples=100)
@given(text=st.text())
def test_tokenize_no_empty_tokens_and_matches_naive_split(cfg, text):
    tokens = tokenize(text, cfg)
    assert all(tokens)
    assert tokens == normalize(text, cfg).split()


@pytest.mark.parametrize("cfg", CONFIGS)
@settings(max_examples=100)
@given(text=st.text())
def test_tokenize_rejoin_stable(cfg, text):
    tokens = tokenize(text, cfg)
    assert tokenize(" ".join(tokens), cfg) == tokens


def test_identity_tokenize_is_plain_split():
    text = "one  two\tthree\nfour"
    assert tokenize(text, IDENTITY) == text.split()
