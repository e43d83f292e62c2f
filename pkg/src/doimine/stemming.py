"""Suffix-stripping stemmers for English (Porter) and Italian.

Self-contained implementations of the classic Porter algorithm and the
Snowball Italian algorithm.  Outputs are frozen as golden fixtures in the
test suite; any change here must refresh those fixtures.
"""

from __future__ import annotations

from doimine.errors import ConfigError

LANGUAGES = ("english", "italian")


def get_stemmer(language: str):
    """Return the stem(word) callable for a supported language."""
    if language == "english":
        return porter_stem
    if language == "italian":
        return italian_stem
    raise ConfigError(f"unsupported stemmer language {language!r} (choose from {LANGUAGES})")


# ---------------------------------------------------------------------------
# English: Porter (1980)
# ---------------------------------------------------------------------------

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    # number of VC blocks in the [C](VC)^m[V] form
    m = 0
    prev_cons = None
    for i in range(len(stem)):
        cons = _is_cons(stem, i)
        if prev_cons is False and cons:
            m += 1
        prev_cons = cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_cons(word, len(word) - 1)


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (
        _is_cons(word, len(word) - 3)
        and not _is_cons(word, len(word) - 2)
        and _is_cons(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


def _rule_set(word: str, rules: list[tuple[str, str, int]]) -> str:
    """Apply the longest-suffix rule whose measure condition holds."""
    for suffix, repl, min_m in sorted(rules, key=lambda r: -len(r[0])):
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if _measure(stem) > min_m:
                return stem + repl
            return word
    return word


_STEP2 = [
    ("ational", "ate", 0), ("tional", "tion", 0), ("enci", "ence", 0), ("anci", "ance", 0),
    ("izer", "ize", 0), ("abli", "able", 0), ("alli", "al", 0), ("entli", "ent", 0),
    ("eli", "e", 0), ("ousli", "ous", 0), ("ization", "ize", 0), ("ation", "ate", 0),
    ("ator", "ate", 0), ("alism", "al", 0), ("iveness", "ive", 0), ("fulness", "ful", 0),
    ("ousness", "ous", 0), ("aliti", "al", 0), ("iviti", "ive", 0), ("biliti", "ble", 0),
]

_STEP3 = [
    ("icate", "ic", 0), ("ative", "", 0), ("alize", "al", 0), ("iciti", "ic", 0),
    ("ical", "ic", 0), ("ful", "", 0), ("ness", "", 0),
]

_STEP4 = [
    ("al", "", 1), ("ance", "", 1), ("ence", "", 1), ("er", "", 1), ("ic", "", 1),
    ("able", "", 1), ("ible", "", 1), ("ant", "", 1), ("ement", "", 1), ("ment", "", 1),
    ("ent", "", 1), ("ou", "", 1), ("ism", "", 1), ("ate", "", 1), ("iti", "", 1),
    ("ous", "", 1), ("ive", "", 1), ("ize", "", 1),
]


def porter_stem(word: str) -> str:
    """Stem one lowercase word with the Porter algorithm."""
    if len(word) <= 2:
        return word

    # step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif word.endswith("ss"):
        pass
    elif word.endswith("s"):
        word = word[:-1]

    # step 1b
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    else:
        stripped = None
        if word.endswith("ed") and _has_vowel(word[:-2]):
            stripped = word[:-2]
        elif word.endswith("ing") and _has_vowel(word[:-3]):
            stripped = word[:-3]
        if stripped is not None:
            word = stripped
            if word.endswith(("at", "bl", "iz")):
                word += "e"
            elif _ends_double_cons(word) and word[-1] not in "lsz":
                word = word[:-1]
            elif _measure(word) == 1 and _ends_cvc(word):
                word += "e"

    # step 1c
    if word.endswith("y") and _has_vowel(word[:-1]):
        word = word[:-1] + "i"

    word = _rule_set(word, _STEP2)
    word = _rule_set(word, _STEP3)

    # step 4 (with the *S-or-*T side condition on "ion")
    for suffix, _, _ in sorted(_STEP4, key=lambda r: -len(r[0])):
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if _measure(stem) > 1:
                word = stem
            break
    else:
        if word.endswith("ion"):
            stem = word[:-3]
            if _measure(stem) > 1 and stem.endswith(("s", "t")):
                word = stem

    # step 5a
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            word = stem

    # step 5b
    if _measure(word) > 1 and _ends_double_cons(word) and word.endswith("l"):
        word = word[:-1]

    return word


# ---------------------------------------------------------------------------
# Italian: Snowball
# ---------------------------------------------------------------------------

_IT_VOWELS = "aeiouàèìòù"

_IT_ACUTE = str.maketrans({"á": "à", "é": "è", "í": "ì", "ó": "ò", "ú": "ù"})

_IT_PRONOUNS = sorted(
    [
        "ci", "gli", "la", "le", "li", "lo", "mi", "ne", "si", "ti", "vi",
        "sene", "gliela", "gliele", "glieli", "glielo", "gliene",
        "mela", "mele", "meli", "melo", "mene",
        "tela", "tele", "teli", "telo", "tene",
        "cela", "cele", "celi", "celo", "cene",
        "vela", "vele", "veli", "velo", "vene",
    ],
    key=len,
    reverse=True,
)

_IT_STEP1 = sorted(
    [
        "anza", "anze", "ico", "ici", "ica", "ice", "iche", "ichi", "ismo", "ismi",
        "abile", "abili", "ibile", "ibili", "ista", "iste", "isti", "istà", "istè",
        "istì", "oso", "osi", "osa", "ose", "mente", "atrice", "atrici", "ante", "anti",
        "azione", "azioni", "atore", "atori", "logia", "logie",
        "uzione", "uzioni", "usione", "usioni", "enza", "enze",
        "amento", "amenti", "imento", "imenti", "amente", "ità",
        "ivo", "ivi", "iva", "ive",
    ],
    key=len,
    reverse=True,
)

_IT_STEP2 = sorted(
    [
        "ammo", "ando", "ano", "are", "arono", "asse", "assero", "assi", "assimo",
        "ata", "ate", "ati", "ato", "ava", "avamo", "avano", "avate", "avi", "avo",
        "emmo", "enda", "ende", "endi", "endo", "erà", "erai", "eranno", "ere",
        "erebbe", "erebbero", "erei", "eremmo", "eremo", "ereste", "eresti", "erete",
        "erò", "erono", "essero", "ete", "eva", "evamo", "evano", "evate", "evi",
        "evo", "Iamo", "iamo", "immo", "irà", "irai", "iranno", "ire", "irebbe",
        "irebbero", "irei", "iremmo", "iremo", "ireste", "iresti", "irete", "irò",
        "irono", "isca", "iscano", "isce", "isci", "isco", "iscono", "issero",
        "ita", "ite", "iti", "ito", "iva", "ivamo", "ivano", "ivate", "ivi", "ivo",
        "ono", "uta", "ute", "uti", "uto", "ar", "ir",
    ],
    key=len,
    reverse=True,
)


def _it_mark(word: str) -> str:
    chars = list(word)
    for i, ch in enumerate(chars):
        if ch == "u" and i > 0 and chars[i - 1] == "q":
            chars[i] = "U"
        elif ch in "ui" and 0 < i < len(chars) - 1:
            if chars[i - 1].lower() in _IT_VOWELS and chars[i + 1].lower() in _IT_VOWELS:
                chars[i] = ch.upper()
    return "".join(chars)


def _it_regions(word: str) -> tuple[int, int, int]:
    """Start offsets of RV, R1, R2 (len(word) when a region is empty)."""
    n = len(word)

    def is_v(i: int) -> bool:
        return word[i] in _IT_VOWELS

    rv = n
    if n >= 2:
        if not is_v(1):
            rv = next((i + 1 for i in range(2, n) if is_v(i)), n)
        elif is_v(0):
            rv = next((i + 1 for i in range(2, n) if not is_v(i)), n)
        else:
            rv = 3 if n > 3 else n

    def after_vowel_nonvowel(start: int) -> int:
        for i in range(start, n - 1):
            if is_v(i) and not is_v(i + 1):
                return i + 2
        return n

    r1 = after_vowel_nonvowel(0)
    r2 = after_vowel_nonvowel(r1)
    return rv, r1, r2


def italian_stem(word: str) -> str:
    """Stem one lowercase Italian word."""
    word = word.translate(_IT_ACUTE)
    word = _it_mark(word)
    # region offsets are fixed positions in the marked word; suffix removal
    # only shortens the tail, so they stay valid across steps
    rv, r1, r2 = _it_regions(word)

    def ends_in(w: str, suffix: str, region_start: int) -> bool:
        return w.endswith(suffix) and len(w) - len(suffix) >= region_start

    # step 0: attached pronoun after a gerund or infinitive, all within RV
    for pron in _IT_PRONOUNS:
        if word.endswith(pron):
            rest = word[: len(word) - len(pron)]
            for lead, repl in (("ando", ""), ("endo", ""), ("ar", "e"), ("er", "e"), ("ir", "e")):
                if ends_in(rest, lead, rv):
                    word = rest + repl
                    break
            break

    step1_removed = False
    for suf in _IT_STEP1:
        if not word.endswith(suf):
            continue
        if suf in ("amento", "amenti", "imento", "imenti"):
            if ends_in(word, suf, rv):
                word = word[: -len(suf)]
                step1_removed = True
        elif suf == "amente":
            if ends_in(word, suf, r1):
                word = word[: -len(suf)]
                step1_removed = True
                if ends_in(word, "iv", r2):
                    word = word[:-2]
                    if ends_in(word, "at", r2):
                        word = word[:-2]
                elif ends_in(word, "os", r2) or ends_in(word, "ic", r2):
                    word = word[:-2]
                elif ends_in(word, "abil", r2):
                    word = word[:-4]
        elif suf in ("azione", "azioni", "atore", "atori"):
            if ends_in(word, suf, r2):
                word = word[: -len(suf)]
                step1_removed = True
                if ends_in(word, "ic", r2):
                    word = word[:-2]
        elif suf in ("logia", "logie"):
            if ends_in(word, suf, r2):
                word = word[: -len(suf)] + "log"
                step1_removed = True
        elif suf in ("uzione", "uzioni", "usione", "usioni"):
            if ends_in(word, suf, r2):
                word = word[: -len(suf)] + "u"
                step1_removed = True
        elif suf in ("enza", "enze"):
            if ends_in(word, suf, r2):
                word = word[: -len(suf)] + "ente"
                step1_removed = True
        elif suf == "ità":
            if ends_in(word, suf, r2):
                word = word[: -len(suf)]
                step1_removed = True
                for lead in ("abil", "ic", "iv"):
                    if ends_in(word, lead, r2):
                        word = word[: -len(lead)]
                        break
        elif suf in ("ivo", "ivi", "iva", "ive"):
            if ends_in(word, suf, r2):
                word = word[: -len(suf)]
                step1_removed = True
                if ends_in(word, "at", r2):
                    word = word[:-2]
                    if ends_in(word, "ic", r2):
                        word = word[:-2]
        else:
            if ends_in(word, suf, r2):
                word = word[: -len(suf)]
                step1_removed = True
        break

    if not step1_removed:
        for suf in _IT_STEP2:
            if ends_in(word, suf, rv):
                word = word[: -len(suf)]
                break

    # step 3a: final vowel (and a preceding i) in RV
    if word and word[-1] in "aeioàèìò" and len(word) - 1 >= rv:
        word = word[:-1]
        if word.endswith("i") and len(word) - 1 >= rv:
            word = word[:-1]

    # step 3b: ch/gh -> c/g in RV
    if word.endswith(("ch", "gh")) and len(word) - 1 >= rv:
        word = word[:-1]

    return word.lower()
