"""Score top-1 retrieval results as if they were ASR/MT/ST outputs.

Sentences arrive pre-tokenized (whitespace-split, casing preserved) and
aligned line-by-line with the dataset rows. WER is token edit distance
over reference length; BLEU is the corpus-level geometric mean of clipped
n-gram precisions with a brevity penalty, scaled to 0..100.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from corrspace import editdist
from corrspace.data import MultiviewDataset
from corrspace.errors import DataError
from corrspace.retrieval import top1_indices

REFERENCE_SETS = ("test", "train", "train+test")


@dataclass(frozen=True)
class SentenceCorpus:
    """Tokenized sentences row-aligned with a view matrix."""

    sentences: tuple[tuple[str, ...], ...]
    language: str = ""

    def __post_init__(self):
        sents = tuple(tuple(s) for s in self.sentences)
        for i, sent in enumerate(sents):
            for tok in sent:
                if not isinstance(tok, str) or not tok:
                    raise DataError(f"sentence {i}: tokens must be nonempty strings")
        object.__setattr__(self, "sentences", sents)

    def __len__(self) -> int:
        return len(self.sentences)

    def __getitem__(self, i) -> tuple[str, ...]:
        return self.sentences[i]


def load_corpus(path, language: str = "") -> SentenceCorpus:
    """One pre-tokenized sentence per line; no re-tokenization happens here."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    return SentenceCorpus(tuple(tuple(line.split()) for line in lines), language)


def save_corpus(corpus: SentenceCorpus, path) -> None:
    Path(path).write_text(
        "\n".join(" ".join(s) for s in corpus.sentences) + "\n", encoding="utf-8"
    )


def _sentences(corpus) -> list:
    if isinstance(corpus, SentenceCorpus):
        return list(corpus.sentences)
    return [tuple(s) for s in corpus]


def wer(hyp, ref) -> float:
    """Word error rate in percent; may exceed 100 for long hypotheses."""
    hyp = tuple(hyp)
    ref = tuple(ref)
    if not ref:
        raise DataError("empty reference")
    return 100.0 * editdist.token_distance(hyp, ref) / len(ref)


def corpus_wer(hyps, refs) -> float:
    """Aggregate WER: total edits over total reference tokens."""
    hyps = _sentences(hyps)
    refs = _sentences(refs)
    if len(hyps) != len(refs):
        raise DataError(f"corpus lengths disagree: {len(hyps)} vs {len(refs)}")
    if not refs:
        raise DataError("empty corpora")
    edits = 0
    ref_tokens = 0
    for h, r in zip(hyps, refs):
        if not r:
            raise DataError("empty reference sentence")
        edits += editdist.token_distance(h, r)
        ref_tokens += len(r)
    return 100.0 * edits / ref_tokens


def _ngrams(sent, order: int) -> Counter:
    return Counter(tuple(sent[i : i + order]) for i in range(len(sent) - order + 1))


def bleu(hyps, refs) -> float:
    """Corpus BLEU with one reference per hypothesis, in [0, 100].

    Pooled clipped n-gram counts up to order 4; the order is capped at the
    longest hypothesis. Zero pooled matches at orders above 1 are smoothed
    as (count+1)/(total+1); zero unigram matches give 0. Brevity penalty
    exp(1 - |ref|/|hyp|) applies when the hypothesis corpus is shorter.
    """
    hyps = _sentences(hyps)
    refs = _sentences(refs)
    if not hyps or not refs:
        raise DataError("empty corpora")
    if len(hyps) != len(refs):
        raise DataError(f"corpus lengths disagree: {len(hyps)} vs {len(refs)}")
    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)
    if ref_len == 0:
        raise DataError("reference corpus has no tokens")
    if hyp_len == 0:
        return 0.0

    cap = min(4, max(len(h) for h in hyps))
    log_precision_sum = 0.0
    for order in range(1, cap + 1):
        total = sum(max(len(h) - order + 1, 0) for h in hyps)
        matched = 0
        for h, r in zip(hyps, refs):
            if len(h) < order:
                continue
            counts = _ngrams(h, order)
            ref_counts = _ngrams(r, order)
            matched += sum(min(c, ref_counts[g]) for g, c in counts.items())
        if matched == 0:
            if order == 1:
                return 0.0
            precision = 1.0 / (total + 1.0)
        else:
            precision = matched / total
        log_precision_sum += math.log(precision)

    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision_sum / cap)


def nearest_by_edit_distance(
    test_corpus: SentenceCorpus, train_corpus: SentenceCorpus, workers: int | None = None
) -> SentenceCorpus:
    """Closest train sentence (token edit distance, ties to lowest index)
    for every test sentence; estimates the ceiling of retrieval scoring."""
    if len(test_corpus) == 0 or len(train_corpus) == 0:
        raise DataError("empty corpora")
    idx, _ = editdist.nearest(test_corpus.sentences, train_corpus.sentences, workers)
    return SentenceCorpus(
        tuple(train_corpus.sentences[i] for i in idx), train_corpus.language
    )


def reference_indices(dataset: MultiviewDataset, reference_set: str) -> np.ndarray:
    """Global row indices of a reference-set composition, in storage order."""
    if reference_set not in REFERENCE_SETS:
        raise DataError(f"reference_set must be one of {REFERENCE_SETS}")
    if reference_set == "train+test":
        return np.concatenate(
            [dataset.require_split("train"), dataset.require_split("test")]
        )
    return dataset.require_split(reference_set)


def score_retrieval_as_task(
    model,
    dataset: MultiviewDataset,
    source_view: str,
    reference_view: str,
    source_split: str,
    reference_set: str,
    corpus: SentenceCorpus,
    metric: str,
    distance_metric: str = "cosine",
) -> float:
    """Retrieve the single nearest reference per source item and score the
    retrieved sentences against the sources' own sentences.

    The corpus is aligned with all dataset rows, so it provides both the
    hypothesis sentence of any retrieved row and the gold sentence of any
    source row. Reference sets compose whole splits (test, train, or train
    followed by test, in storage order).
    """
    if metric not in ("wer", "bleu"):
        raise DataError(f"metric must be 'wer' or 'bleu', got {metric!r}")
    if len(corpus) != dataset.n:
        raise DataError(
            f"corpus has {len(corpus)} sentences but the dataset has {dataset.n} rows"
        )
    src_idx = dataset.require_split(source_split)
    ref_idx = reference_indices(dataset, reference_set)

    src_emb = model.embed(dataset.view(source_view).data[src_idx], source_view)
    ref_emb = model.embed(dataset.view(reference_view).data[ref_idx], reference_view)
    picked = ref_idx[top1_indices(src_emb, ref_emb, distance_metric)]

    hyps = [corpus[i] for i in picked]
    golds = [corpus[i] for i in src_idx]
    if metric == "wer":
        return corpus_wer(hyps, golds)
    return bleu(hyps, golds)
