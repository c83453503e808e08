import re
from typing import Dict, List, Sequence

from deig.config.constants import (
    GARMENTS,
    MATERIALS,
    OBJECT_NOUNS,
    PAD_TOKEN,
    PALETTE,
    TEMPLATE_WORDS,
    TEXTURES,
    UNK_TOKEN,
)
from deig.core.commons.errors import CheckpointError, ContractViolation

_TOKEN_PATTERN = re.compile(r",|[^\s,]+")


def tokenize(text: str) -> List[str]:
    """Lower-case, split on whitespace, commas become their own token."""
    return _TOKEN_PATTERN.findall(text.lower())


def default_tokens() -> List[str]:
    words = [PAD_TOKEN, UNK_TOKEN, *TEMPLATE_WORDS, *PALETTE, *TEXTURES, *MATERIALS, *OBJECT_NOUNS]
    for garments in GARMENTS.values():
        words.extend(garments)
    ordered: List[str] = []
    for word in words:
        if word not in ordered:
            ordered.append(word)
    return ordered


class TokenVocab:
    """Ordered word list; ids are list positions."""

    def __init__(self, tokens: Sequence[str] = None):
        self.tokens: List[str] = list(tokens) if tokens is not None else default_tokens()
        if len(set(self.tokens)) != len(self.tokens):
            raise ContractViolation("Vocabulary tokens must be unique")
        if self.tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ContractViolation("Vocabulary must start with the pad and unknown tokens")
        self._ids: Dict[str, int] = {token: i for i, token in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, word: str) -> bool:
        return word in self._ids

    @property
    def unk_id(self) -> int:
        return 1

    def id(self, word: str) -> int:
        return self._ids.get(word, self.unk_id)

    def encode(self, text: str) -> List[int]:
        return [self.id(word) for word in tokenize(text)]

    def to_json(self) -> Dict[str, List[str]]:
        return {"tokens": self.tokens}

    @classmethod
    def from_json(cls, document: Dict[str, List[str]]) -> "TokenVocab":
        try:
            return cls(document["tokens"])
        except (KeyError, TypeError) as e:
            raise CheckpointError(f"Malformed vocabulary entry: {e}") from e
