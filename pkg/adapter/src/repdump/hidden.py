"""Per-token hidden-state and log-prob dumps for causal language models.

Each sentence is tokenized without padding and run through the model once;
the chosen layer's activations are written as one (n_tokens, hidden) float32
tensor per sentence, and optionally the teacher-forced conditional log-probs
as one float64 vector per sentence. The manifest is written last, atomically,
so a visible manifest always points at complete tensors.

Log-prob convention: position i of the dumped sequence is scored given
positions < i, so the vector has n_tokens - 1 entries. When the tokenizer
prepends BOS, those entries cover every real token (BOS-conditioned); when it
does not, scoring starts at the second real token. The convention is recorded
in an ``extraction_meta.json`` sidecar next to the manifest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from ._errors import AdapterError
from ._io import manifest_doc, write_array, write_json
from .datasets import load_sentences, sample_dataset

log = logging.getLogger("repdump")

LAYER_NAMES = ("first", "middle", "last")


@dataclass
class ExtractionJob:
    model_ref: str
    dataset_path: str
    output_dir: str
    text_field: str | None = None
    layer: int | str = -1
    subset_size: int | None = None
    seed: int = 0
    include_logprobs: bool = False
    device: str = "cpu"
    model_id: str | None = None
    dataset_id: str | None = None


def resolve_layer(layer: int | str, num_layers: int) -> int:
    """Map a layer spec onto a hidden-states index.

    Index k is the output of block k (0 is the embedding output); -1 is the
    final pre-head layer. Named specs: first = 1, middle = floor(L/2),
    last = -1.
    """
    if isinstance(layer, str):
        if layer not in LAYER_NAMES:
            raise AdapterError(f"unknown layer name {layer!r}; expected {LAYER_NAMES}")
        return {"first": 1, "middle": num_layers // 2, "last": -1}[layer]
    if layer == -1:
        return -1
    if 0 <= layer <= num_layers:
        return int(layer)
    raise AdapterError(f"layer {layer} out of range for a {num_layers}-layer model")


def _bos_conditioned(tokenizer) -> bool:
    with_special = tokenizer("probe")["input_ids"]
    without = tokenizer("probe", add_special_tokens=False)["input_ids"]
    return len(with_special) == len(without) + 1 and with_special[1:] == without


def _load(job: ExtractionJob):
    tokenizer = AutoTokenizer.from_pretrained(job.model_ref)
    model = AutoModelForCausalLM.from_pretrained(job.model_ref)
    model.to(job.device)
    model.eval()
    return model, tokenizer


def extract_hidden_states(job: ExtractionJob) -> Path:
    """Dump hidden states (and log-probs if requested); returns the manifest path."""
    return _run_extraction(job, include_logprobs=job.include_logprobs)


def extract_logprobs(job: ExtractionJob) -> Path:
    """Dump hidden states plus one 1-D log-prob tensor per sentence.

    The manifest schema indexes log-probs alongside representations, so this
    always produces both; it is ``extract_hidden_states`` with log-probs on.
    """
    return _run_extraction(job, include_logprobs=True)


def _run_extraction(job: ExtractionJob, *, include_logprobs: bool) -> Path:
    out = Path(job.output_dir)
    sentences = load_sentences(job.dataset_path, text_field=job.text_field)
    total = len(sentences)
    sentences = sample_dataset(sentences, job.subset_size, job.seed)

    model, tokenizer = _load(job)
    num_layers = model.config.num_hidden_layers
    layer_index = resolve_layer(job.layer, num_layers)
    hidden_dim = model.config.hidden_size
    bos = _bos_conditioned(tokenizer)

    entries: list[dict] = []
    skipped: list[dict] = []
    with torch.no_grad():
        for sid, text in sentences:
            ids = tokenizer(text, return_tensors="pt")["input_ids"].to(job.device)
            n_tokens = int(ids.shape[1])
            if n_tokens == 0:
                skipped.append({"sentence_id": sid, "reason": "empty after tokenization"})
                continue
            output = model(ids, output_hidden_states=True)
            reps = output.hidden_states[layer_index][0].cpu().numpy().astype(np.float32)
            reps_rel = f"reps/{sid}.npy"
            write_array(reps, out / reps_rel)
            entry = {"sentence_id": sid, "reps_path": reps_rel, "token_count": n_tokens}
            if include_logprobs and n_tokens >= 2:
                logp = torch.log_softmax(output.logits[0, :-1].double(), dim=-1)
                scored = logp.gather(1, ids[0, 1:, None]).squeeze(1)
                lp_rel = f"logprobs/{sid}.npy"
                write_array(scored.cpu().numpy().astype(np.float64), out / lp_rel)
                entry["logprobs_path"] = lp_rel
            entries.append(entry)

    if not entries:
        raise AdapterError("every sentence tokenized to zero tokens; nothing to dump")

    sampling = None
    if job.subset_size is not None and job.subset_size != total:
        sampling = {"seed": job.seed, "subset_size": job.subset_size}

    write_json({
        "bos_conditioned": bos,
        "logprobs_cover_all_real_tokens": bos,
        "scored_from_dumped_position": 2,
        "model_ref": str(job.model_ref),
        "resolved_layer_index": layer_index,
        "num_hidden_layers": num_layers,
    }, out / "extraction_meta.json")
    if skipped:
        write_json(skipped, out / "skipped.json")

    manifest = manifest_doc(
        model_id=job.model_id or Path(str(job.model_ref)).name,
        dataset_id=job.dataset_id or Path(str(job.dataset_path)).name,
        layer=layer_index,
        hidden_dim=hidden_dim,
        entries=entries,
        sampling=sampling,
    )
    manifest_path = out / "manifest.json"
    write_json(manifest, manifest_path)
    log.info("dumped %d sentences (%d skipped) to %s", len(entries), len(skipped), out)
    return manifest_path
