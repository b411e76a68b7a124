"""Target-information extraction: BIO span tagging and sentence labeling."""
from .bio import (
    BioError,
    SpanAnnotation,
    decode_bio,
    encode_bio,
    read_conll,
    write_conll,
)
from .crf import (
    CrfError,
    CrfModel,
    crf_objective_and_gradient,
    crf_train,
    extract_spans,
    load_crf,
    save_crf,
)
from .features import featurize, word_shape
from .schema import LABELS, OUTSIDE, PRIORITY_LABELS, TAG_INDEX, TAGS, tag_alphabet
from .sentences import (
    LabeledSentence,
    SentenceClassifier,
    SentenceModelError,
    load_sentence_model,
    predict_sentence_labels,
    read_sentence_corpus,
    save_sentence_model,
    sentence_features,
    train_sentence_classifier,
    write_sentence_corpus,
)

__all__ = [
    "BioError",
    "SpanAnnotation",
    "decode_bio",
    "encode_bio",
    "read_conll",
    "write_conll",
    "CrfError",
    "CrfModel",
    "crf_objective_and_gradient",
    "crf_train",
    "extract_spans",
    "load_crf",
    "save_crf",
    "featurize",
    "word_shape",
    "LABELS",
    "OUTSIDE",
    "PRIORITY_LABELS",
    "TAG_INDEX",
    "TAGS",
    "tag_alphabet",
    "LabeledSentence",
    "SentenceClassifier",
    "SentenceModelError",
    "load_sentence_model",
    "predict_sentence_labels",
    "read_sentence_corpus",
    "save_sentence_model",
    "sentence_features",
    "train_sentence_classifier",
    "write_sentence_corpus",
]
