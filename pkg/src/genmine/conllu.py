"""Universal-Dependencies-style sentence annotations and CoNLL-U I/O.

Tokens carry the UD fields the filters need: form, lemma, UPOS, the
morphological feature map, head index and dependency relation.  Parsed
sentences are validated on construction: exactly one root, in-range heads,
and no head cycles.  Invalid blocks in a CoNLL-U file are skipped and
tallied, never silently accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .tally import RunTally

UPOS_TAGS = frozenset(
    "ADJ ADP ADV AUX CCONJ DET INTJ NOUN NUM PART PRON PROPN PUNCT SCONJ SYM VERB X".split()
)


class ParseValidationError(Exception):
    """A token block violates the ParsedSentence invariants."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True, slots=True)
class Token:
    index: int          # 1-based position in the sentence
    form: str
    lemma: str
    upos: str
    feats: dict
    head: int           # 0 = root
    deprel: str


@dataclass(frozen=True)
class ParsedSentence:
    doc_id: str
    sent_index: int
    tokens: tuple[Token, ...]
    root_index: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "root_index", _validate(self.tokens))

    @property
    def root(self) -> Token:
        return self.tokens[self.root_index - 1]

    def token(self, index: int) -> Token:
        return self.tokens[index - 1]

    def text(self) -> str:
        return " ".join(t.form for t in self.tokens)


def _validate(tokens: Sequence[Token]) -> int:
    """Check the sentence invariants; return the root token index."""
    if not tokens:
        raise ParseValidationError("empty-sentence")
    n = len(tokens)
    root_index = 0
    for pos, tok in enumerate(tokens, start=1):
        if tok.index != pos:
            raise ParseValidationError("bad-index", f"token {pos} has index {tok.index}")
        if tok.head < 0 or tok.head > n:
            raise ParseValidationError("bad-head", f"token {pos} head {tok.head} out of range")
        if tok.head == tok.index:
            raise ParseValidationError("bad-head", f"token {pos} is its own head")
        if (tok.head == 0) != (tok.deprel == "root"):
            raise ParseValidationError("bad-root", f"token {pos}: head-0 and deprel-root must coincide")
        if tok.head == 0:
            if root_index:
                raise ParseValidationError("bad-root", "multiple roots")
            root_index = tok.index
    if not root_index:
        raise ParseValidationError("bad-root", "no root token")
    # Every token must reach the root by following heads (no cycles).
    for tok in tokens:
        seen = 0
        cur = tok.head
        while cur != 0:
            seen += 1
            if seen > n:
                raise ParseValidationError("cyclic-heads", f"cycle through token {tok.index}")
            cur = tokens[cur - 1].head
    return root_index


def parse_feats(raw: str) -> dict:
    """FEATS column "A=B|C=D" into a dict; "_" means no features."""
    if raw == "_" or not raw:
        return {}
    feats = {}
    for item in raw.split("|"):
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseValidationError("bad-feats", f"no '=' in {item!r}")
        feats[key] = value
    return feats


def format_feats(feats: dict) -> str:
    if not feats:
        return "_"
    return "|".join(f"{k}={v}" for k, v in sorted(feats.items()))


def parse_token_lines(lines: Sequence[str]) -> tuple[Token, ...]:
    """Turn 10-column CoNLL-U token lines into Tokens.

    Multiword-token ranges ("3-4") and empty nodes ("8.1") are skipped.
    Raises ParseValidationError on malformed columns or heads.
    """
    tokens: list[Token] = []
    for line in lines:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseValidationError("bad-columns", f"{len(cols)} columns in {line!r}")
        tok_id = cols[0]
        if not tok_id.isdigit():
            continue  # range or empty node
        try:
            head = int(cols[6])
        except ValueError:
            raise ParseValidationError("bad-head", f"HEAD {cols[6]!r}") from None
        tokens.append(
            Token(
                index=int(tok_id),
                form=cols[1],
                lemma=cols[2],
                upos=cols[3],
                feats=parse_feats(cols[5]),
                head=head,
                deprel=cols[7],
            )
        )
    return tuple(tokens)


def read_parses(path: str, tally: RunTally | None = None) -> Iterator[ParsedSentence]:
    """Stream ParsedSentences from a CoNLL-U file.

    Each block must carry "# doc_id = ..." and "# sent_index = ..."
    comments.  Invalid blocks (bad head, cycles, missing metadata) are
    tallied and skipped; the stream continues with the next block.
    """
    tally = tally if tally is not None else RunTally()
    with open(path, "r", encoding="utf-8") as fh:
        meta: dict[str, str] = {}
        lines: list[str] = []
        blockno = 0

        def finish():
            nonlocal meta, lines, blockno
            if not lines and not meta:
                return None
            blockno += 1
            try:
                if "doc_id" not in meta or "sent_index" not in meta:
                    raise ParseValidationError("missing-metadata")
                sent = ParsedSentence(
                    doc_id=meta["doc_id"],
                    sent_index=int(meta["sent_index"]),
                    tokens=parse_token_lines(lines),
                )
            except (ParseValidationError, ValueError) as exc:
                reason = exc.reason if isinstance(exc, ParseValidationError) else "bad-metadata"
                tally.record(reason, path=path, block=blockno)
                sent = None
            meta, lines = {}, []
            return sent

        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip():
                sent = finish()
                if sent is not None:
                    yield sent
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            lines.append(line)
        sent = finish()
        if sent is not None:
            yield sent


def to_conllu(sent: ParsedSentence) -> str:
    """Serialize a ParsedSentence to a CoNLL-U block (metadata included)."""
    out = [f"# doc_id = {sent.doc_id}", f"# sent_index = {sent.sent_index}"]
    for t in sent.tokens:
        out.append(
            "\t".join(
                (
                    str(t.index), t.form, t.lemma, t.upos, "_",
                    format_feats(t.feats), str(t.head), t.deprel, "_", "_",
                )
            )
        )
    return "\n".join(out) + "\n"


def is_plural_noun(tok: Token) -> bool:
    """True iff the token is a plural (proper) noun."""
    return tok.upos in ("NOUN", "PROPN") and tok.feats.get("Number") == "Plur"
