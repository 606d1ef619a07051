"""Embedding extraction into the zsaudio corpus file formats.

The training toolkit never imports this package; the embedding-table
file format is the only boundary between the two.
"""

__version__ = "0.1.0"

from zsaudio import ClassCatalog, ClassRecord, ValidationError

from .jobs import (
    ExtractionJob, JOB_KINDS, PRETRAINED_CAVEAT, read_job_manifest,
)
from .audio import (
    AUDIO_DIM, BUILTIN_AUDIO_MODEL, extract_audio_embeddings, log_mel,
    read_wav, resample_to_target, split_segments,
)
from .text import (
    BUILTIN_SENTENCE_MODEL, BUILTIN_WORD_MODEL, SENTENCE_DIM, WORD_DIM,
    extract_sentence_table, extract_word_table,
)


def run_job(job: ExtractionJob):
    """Dispatch a job to the extractor matching its kind."""
    if job.kind == "audio-clip":
        return extract_audio_embeddings(job)
    if job.kind == "word-table-subset":
        return extract_word_table([i for i, _ in job.manifest], job.model,
                                  job.out)
    # sentence-table: manifest sources are the descriptions
    catalog = ClassCatalog([ClassRecord(i, i, s) for i, s in job.manifest])
    return extract_sentence_table(catalog, job.model, job.out)


__all__ = [
    "__version__",
    "ExtractionJob", "JOB_KINDS", "PRETRAINED_CAVEAT", "read_job_manifest",
    "AUDIO_DIM", "BUILTIN_AUDIO_MODEL", "extract_audio_embeddings", "log_mel",
    "read_wav", "resample_to_target", "split_segments",
    "BUILTIN_SENTENCE_MODEL", "BUILTIN_WORD_MODEL", "SENTENCE_DIM", "WORD_DIM",
    "extract_sentence_table", "extract_word_table",
    "run_job", "ValidationError",
]
