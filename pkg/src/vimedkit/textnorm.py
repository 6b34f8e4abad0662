"""Text normalization shared by every pipeline stage.

Counting, splitting, and keying on tokens all go through this module so the
tokenization rule (NFC normalization + Unicode whitespace splitting) can be
swapped in one place.
"""

import unicodedata


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def tokens(text: str) -> list[str]:
    """Whitespace tokens of the NFC-normalized text."""
    return nfc(text).split()


def token_count(text: str) -> int:
    return len(tokens(text))


def collapse_whitespace(text: str) -> str:
    """NFC-normalize and collapse whitespace runs to single spaces."""
    return " ".join(nfc(text).split())
