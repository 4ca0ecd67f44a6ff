from nndialog.corpus.dialogs import SILENCE, Dialog, Turn, dialog_to_obj, parse_corpus, serialize_corpus
from nndialog.corpus.delex import Lexicon, delexicalise, fill_template, lexicalise, normalize, tokenize
from nndialog.corpus.labels import (
    UNKNOWN_RESPONSE,
    TurnLabels,
    build_candidates,
    build_vocab,
    derive_labels,
    encode_tokens,
)
from nndialog.corpus.synthetic import generate_kb, generate_synthetic_corpus

__all__ = [
    "SILENCE",
    "Dialog",
    "Turn",
    "dialog_to_obj",
    "parse_corpus",
    "serialize_corpus",
    "Lexicon",
    "delexicalise",
    "fill_template",
    "lexicalise",
    "normalize",
    "tokenize",
    "TurnLabels",
    "UNKNOWN_RESPONSE",
    "build_candidates",
    "build_vocab",
    "derive_labels",
    "encode_tokens",
    "generate_kb",
    "generate_synthetic_corpus",
]
