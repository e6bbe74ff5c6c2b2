"""Candidate prefilter, bare-plural syntactic filter, and quantifier labeling.

The prefilter is a cheap gate over the first four tokens.  The syntactic
filter applies three conditions to a dependency parse:

  1. a plural (proper) noun bearing nsubj / nsubj:pass attached to the root
     (leftmost wins if several);
  2. a main verb: the copula or passive-auxiliary child of the root when one
     exists, otherwise the root itself if it is VERB or AUX;
  3. that verb inflected Tense=Pres, Mood=Ind, Number=Plur, Person=3.

Labeling distinguishes plain generics from sentences quantified by one of
the 11 inventory words, either sentence-initially or by an adverbial
quantifier attached to the main clause.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .conllu import ParsedSentence, Token, is_plural_noun

DETERMINER_QUANTIFIERS = ("all", "most", "many", "some", "few", "no")
ADVERBIAL_QUANTIFIERS = ("often", "generally", "typically", "usually", "normally")
QUANTIFIERS = DETERMINER_QUANTIFIERS + ADVERBIAL_QUANTIFIERS

GENERIC_LABEL = "GEN"

PREFILTER_WINDOW = 4

_SUBJECT_RELS = ("nsubj", "nsubj:pass")
_VERB_CHILD_RELS = ("cop", "aux:pass")


@dataclass(frozen=True, slots=True)
class PrefilterOutcome:
    kind: str                    # "quantifier-initial" | "plural-early" | "reject"
    quantifier: str | None = None
    position: int | None = None  # 1-based, within the 4-token window

    @property
    def rejected(self) -> bool:
        return self.kind == "reject"


REJECT = PrefilterOutcome(kind="reject")


@dataclass(frozen=True, slots=True)
class BarePluralCheck:
    passed: bool
    subject_index: int | None = None
    verb_index: int | None = None
    fail_reason: str | None = None  # no-plural-subject | bad-root | bad-verb-feats


@dataclass(frozen=True, slots=True)
class GenLabel:
    label: str                   # "GEN" or one of the 11 quantifiers
    position: str | None = None  # initial | pre-verbal | post-verbal

    @property
    def is_generic(self) -> bool:
        return self.label == GENERIC_LABEL


def _clean_word(form: str) -> str:
    """Surrounding punctuation removed, lowercased."""
    start, end = 0, len(form)
    while start < end and not form[start].isalnum():
        start += 1
    while end > start and not form[end - 1].isalnum():
        end -= 1
    return form[start:end].lower()


def prefilter(tokens: Sequence[Token], quantifiers: Sequence[str] = QUANTIFIERS) -> PrefilterOutcome:
    """Gate a sentence on its first four tokens.

    Quantifier-initial beats plural-early.  A sentence-initial "no"
    followed by a comma is a discourse marker, not a quantifier, and is
    rejected outright.  Never inspects beyond the first four tokens.
    """
    if not tokens:
        return REJECT
    first = _clean_word(tokens[0].form)
    if first in quantifiers:
        if first == "no" and (
            tokens[0].form.rstrip().endswith(",")
            or (len(tokens) > 1 and tokens[1].form == ",")
        ):
            return REJECT
        return PrefilterOutcome(kind="quantifier-initial", quantifier=first)
    for pos, tok in enumerate(tokens[:PREFILTER_WINDOW], start=1):
        if is_plural_noun(tok):
            return PrefilterOutcome(kind="plural-early", position=pos)
    return REJECT


def main_verb(sent: ParsedSentence) -> Token | None:
    """Condition-2 verb routing.

    The copula / passive-auxiliary child of the root outranks the root:
    in copular and passive clauses the inflection lives on that child,
    while the root (a nominal, adjective or participle) carries none.
    """
    root = sent.root
    for tok in sent.tokens:
        if tok.head == root.index and tok.deprel in _VERB_CHILD_RELS:
            return tok
    if root.upos in ("VERB", "AUX"):
        return root
    return None


_REQUIRED_VERB_FEATS = (("Tense", "Pres"), ("Mood", "Ind"), ("Number", "Plur"), ("Person", "3"))


def _has_required_feats(tok: Token) -> bool:
    feats = tok.feats
    for key, value in _REQUIRED_VERB_FEATS:
        if feats.get(key) != value:
            return False
    return True


def is_bare_plural(sent: ParsedSentence) -> BarePluralCheck:
    """Apply the three bare-plural conditions to a parsed sentence."""
    root_index = sent.root_index
    subject = None
    for tok in sent.tokens:
        if tok.head == root_index and tok.deprel in _SUBJECT_RELS and is_plural_noun(tok):
            subject = tok
            break
    if subject is None:
        return BarePluralCheck(passed=False, fail_reason="no-plural-subject")
    verb = main_verb(sent)
    if verb is None:
        return BarePluralCheck(passed=False, fail_reason="bad-root")
    if not _has_required_feats(verb):
        return BarePluralCheck(passed=False, fail_reason="bad-verb-feats")
    return BarePluralCheck(passed=True, subject_index=subject.index, verb_index=verb.index)


def detect_label(
    sent: ParsedSentence,
    pre: PrefilterOutcome,
    check: BarePluralCheck,
    quantifiers: Sequence[str] = QUANTIFIERS,
) -> GenLabel:
    """Label a sentence that passed the bare-plural filter.

    Quantifier-initial sentences keep their prefilter quantifier.  Otherwise
    an adverbial quantifier counts only when its head is the root or the
    selected main verb; a quantifier confined to an embedded clause leaves
    the sentence generic.
    """
    if pre.kind == "quantifier-initial":
        return GenLabel(label=pre.quantifier, position="initial")
    assert check.passed and check.verb_index is not None
    main_heads = (sent.root_index, check.verb_index)
    for tok in sent.tokens:
        word = tok.form.lower()
        if word in ADVERBIAL_QUANTIFIERS and word in quantifiers and tok.head in main_heads:
            # Linear position relative to the clause predicate (the root):
            # in "are normally striped" the adverb follows the copula but
            # still precedes the predicate, which makes it pre-verbal.
            position = "pre-verbal" if tok.index < sent.root_index else "post-verbal"
            return GenLabel(label=word, position=position)
    return GenLabel(label=GENERIC_LABEL)
