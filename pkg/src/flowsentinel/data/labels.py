"""Classification regimes and the raw-label -> class-index vocabulary."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import EmptyInputError, UnknownLabelError
from . import schema


class ClassificationMode(str, Enum):
    BINARY = "binary"
    GROUPED = "grouped"
    MULTI = "multi"

    @property
    def class_count(self) -> int:
        return {"binary": 2, "grouped": 8, "multi": 34}[self.value]


@dataclass(frozen=True)
class LabelVocabulary:
    mode: ClassificationMode
    classes: tuple  # class names, index order
    raw_to_class: dict  # raw label string -> class index

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def index_of(self, raw_label: str, strict: bool = True):
        """Class index for a raw label; None (lenient) or raise (strict) if unknown."""
        idx = self.raw_to_class.get(raw_label)
        if idx is None and strict:
            raise UnknownLabelError(f"raw label {raw_label!r} has no class in {self.mode.value} mode")
        return idx


def build_vocabulary(records, mode: ClassificationMode) -> LabelVocabulary:
    """Vocabulary for one regime, from the shipped canonical label table.

    Binary is the fixed pair (Benign=0, Attack=1); grouped and multi classes
    are sorted lexicographically so indices are stable across runs and
    platforms. ``records`` (FlowRecords, or raw label strings) must be
    non-empty; labels outside the canonical table are the caller's problem
    at mapping time, not at vocabulary construction.
    """
    if records is not None and len(records) == 0:
        raise EmptyInputError("cannot build a vocabulary from zero records")
    fam = schema.family_map()
    if mode is ClassificationMode.BINARY:
        classes = schema.BINARY_CLASSES
        raw_to_class = {raw: (0 if raw == schema.BENIGN_LABEL else 1) for raw in fam}
    elif mode is ClassificationMode.GROUPED:
        classes = tuple(schema.attack_families())
        index = {name: i for i, name in enumerate(classes)}
        raw_to_class = {raw: index[family] for raw, family in fam.items()}
    else:
        classes = tuple(schema.raw_labels())
        index = {name: i for i, name in enumerate(classes)}
        raw_to_class = {raw: index[raw] for raw in fam}
    vocab = LabelVocabulary(mode=mode, classes=classes, raw_to_class=raw_to_class)
    assert vocab.n_classes == mode.class_count, "regime cardinality violated"
    return vocab


def map_labels(records, vocab: LabelVocabulary, strict: bool = False):
    """Map records to class indices.

    Returns (kept_record_indices, class_indices, dropped_unknown_count).
    In strict mode an unknown raw label raises instead of dropping.
    """
    kept = []
    classes = []
    dropped = 0
    for i, record in enumerate(records):
        label = record.label if hasattr(record, "label") else record
        idx = vocab.index_of(label, strict=strict)
        if idx is None:
            dropped += 1
            continue
        kept.append(i)
        classes.append(idx)
    return kept, classes, dropped
