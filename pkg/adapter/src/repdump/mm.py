"""Five-stage representation dumps for vision-language pipelines.

Works with encoder -> connector -> LLM models (LLaVA-style layouts): the
vision tower, the multimodal projector, and the language model are located by
attribute on the model (or its inner ``.model``), and each dataset triplet
(image, instruction, response) produces rows at five measurement points:

1. image tokens after the vision encoder (the features the connector sees);
2. the same tokens after the connector;
3. LLM final-layer rows when fed only the projected image tokens;
4. LLM final-layer rows for the instruction+response text alone;
5. LLM final-layer rows for the concatenated image+text input.

One dump directory and manifest per stage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import torch
from PIL import Image

from ._errors import AdapterError, UnsupportedArchitecture
from ._io import manifest_doc, write_array, write_json
from .datasets import load_triplets, sample_dataset

log = logging.getLogger("repdump")

STAGES = (1, 2, 3, 4, 5)


@dataclass
class MmExtractionJob:
    model_ref: Any
    dataset_path: str
    output_dir: str
    processor_ref: Any = None
    subset_size: int | None = None
    seed: int = 0
    device: str = "cpu"
    model_id: str | None = None
    dataset_id: str | None = None


def _load_model(job: MmExtractionJob):
    if isinstance(job.model_ref, (str, Path)):
        from transformers import AutoModelForImageTextToText, AutoProcessor

        model = AutoModelForImageTextToText.from_pretrained(job.model_ref)
        processor = AutoProcessor.from_pretrained(job.processor_ref or job.model_ref)
    else:
        model = job.model_ref
        processor = job.processor_ref
        if processor is None:
            raise AdapterError("a processor is required when passing a live model")
    model.to(job.device)
    model.eval()
    return model, processor


def _split_processor(processor):
    image_processor = getattr(processor, "image_processor", None)
    tokenizer = getattr(processor, "tokenizer", None)
    if image_processor is None or tokenizer is None:
        raise AdapterError(
            "processor must expose both image_processor and tokenizer attributes")
    return image_processor, tokenizer


def _components(model):
    for holder in (model, getattr(model, "model", None)):
        if holder is None:
            continue
        vision_tower = getattr(holder, "vision_tower", None)
        projector = getattr(holder, "multi_modal_projector", None)
        language_model = getattr(holder, "language_model", None)
        if vision_tower is not None and projector is not None and language_model is not None:
            return vision_tower, projector, language_model
    raise UnsupportedArchitecture(
        "model does not expose vision_tower / multi_modal_projector / language_model")


def _vision_features(config, vision_tower, pixel_values):
    layer = getattr(config, "vision_feature_layer", -1)
    strategy = getattr(config, "vision_feature_select_strategy", "default")
    output = vision_tower(pixel_values, output_hidden_states=True)
    if isinstance(layer, (list, tuple)):
        features = torch.cat([output.hidden_states[i] for i in layer], dim=-1)
    else:
        features = output.hidden_states[layer]
    if strategy == "default":
        features = features[:, 1:]
    return features


def _last_hidden(language_model, embeds):
    output = language_model(inputs_embeds=embeds, output_hidden_states=True)
    return output.hidden_states[-1]


def extract_mm_stages(job: MmExtractionJob) -> tuple[Path, Path, Path, Path, Path]:
    """Dump all five stages; returns the five manifest paths in stage order."""
    out = Path(job.output_dir)
    dataset_dir = Path(job.dataset_path).parent
    triplets = load_triplets(job.dataset_path)
    total = len(triplets)
    triplets = sample_dataset(triplets, job.subset_size, job.seed)

    model, processor = _load_model(job)
    image_processor, tokenizer = _split_processor(processor)
    vision_tower, projector, language_model = _components(model)
    embeddings = model.get_input_embeddings()
    model_id = job.model_id or (
        Path(str(job.model_ref)).name if isinstance(job.model_ref, (str, Path))
        else type(model).__name__)

    stage_rows: dict[int, list[tuple[str, np.ndarray]]] = {i: [] for i in STAGES}
    skipped: list[dict] = []
    with torch.no_grad():
        for sid, row in triplets:
            image_path = Path(row["image"])
            if not image_path.is_absolute():
                image_path = dataset_dir / image_path
            image = Image.open(image_path).convert("RGB")
            pixel_values = image_processor(images=image, return_tensors="pt")[
                "pixel_values"].to(job.device)
            text = f"{row['instruction']} {row['response']}".strip()
            ids = tokenizer(text, return_tensors="pt")["input_ids"].to(job.device)
            if ids.shape[1] == 0:
                skipped.append({"sentence_id": sid, "reason": "empty after tokenization"})
                continue

            image_feats = _vision_features(model.config, vision_tower, pixel_values)
            projected = projector(image_feats)
            text_embeds = embeddings(ids)
            pair_embeds = torch.cat([projected, text_embeds], dim=1)

            stage_rows[1].append((sid, image_feats[0].cpu().numpy().astype(np.float32)))
            stage_rows[2].append((sid, projected[0].cpu().numpy().astype(np.float32)))
            stage_rows[3].append((sid, _last_hidden(language_model, projected)[0]
                                  .cpu().numpy().astype(np.float32)))
            stage_rows[4].append((sid, _last_hidden(language_model, text_embeds)[0]
                                  .cpu().numpy().astype(np.float32)))
            stage_rows[5].append((sid, _last_hidden(language_model, pair_embeds)[0]
                                  .cpu().numpy().astype(np.float32)))

    if not stage_rows[1]:
        raise AdapterError("every triplet was skipped; nothing to dump")

    sampling = None
    if job.subset_size is not None and job.subset_size != total:
        sampling = {"seed": job.seed, "subset_size": job.subset_size}

    manifest_paths = []
    for stage in STAGES:
        stage_dir = out / f"stage{stage}"
        entries = []
        hidden_dim = int(stage_rows[stage][0][1].shape[1])
        for sid, reps in stage_rows[stage]:
            rel = f"reps/{sid}.npy"
            write_array(reps, stage_dir / rel)
            entries.append({"sentence_id": sid, "reps_path": rel,
                            "token_count": int(reps.shape[0])})
        manifest = manifest_doc(
            model_id=f"{model_id}/stage{stage}",
            dataset_id=job.dataset_id or Path(str(job.dataset_path)).name,
            layer=-1,
            hidden_dim=hidden_dim,
            entries=entries,
            sampling=sampling,
        )
        path = stage_dir / "manifest.json"
        write_json(manifest, path)
        manifest_paths.append(path)

    write_json({
        "stages": {
            "1": "vision encoder output (connector input)",
            "2": "connector output",
            "3": "LLM final layer, image tokens only",
            "4": "LLM final layer, instruction+response text only",
            "5": "LLM final layer, image tokens followed by text",
        },
        "vision_feature_layer": getattr(model.config, "vision_feature_layer", -1),
        "vision_feature_select_strategy": getattr(
            model.config, "vision_feature_select_strategy", "default"),
    }, out / "extraction_meta.json")
    if skipped:
        write_json(skipped, out / "skipped.json")
    log.info("dumped %d samples (%d skipped) across 5 stages to %s",
             len(stage_rows[1]), len(skipped), out)
    return tuple(manifest_paths)
