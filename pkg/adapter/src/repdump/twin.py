"""Untrained-twin construction: same architecture, fresh seeded init."""

from __future__ import annotations

import logging
from pathlib import Path

import torch
from transformers import AutoConfig, AutoModelForCausalLM, AutoTokenizer

log = logging.getLogger("repdump")


def make_untrained_twin(model_ref, seed: int, output_dir) -> Path:
    """Materialize a randomly initialized copy of a checkpoint's architecture.

    The twin shares the source's config and tokenizer but none of its
    weights: parameters come from the framework's default initializer under
    ``torch.manual_seed(seed)``, so two twins built with the same seed are
    parameter-identical. The twin is saved to ``output_dir`` and can be
    reused across datasets like any local checkpoint.
    """
    output_dir = Path(output_dir)
    config = AutoConfig.from_pretrained(model_ref)
    torch.manual_seed(seed)
    model = AutoModelForCausalLM.from_config(config)
    model.eval()
    output_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(output_dir)
    AutoTokenizer.from_pretrained(model_ref).save_pretrained(output_dir)
    log.info("wrote untrained twin of %s (seed %d) to %s", model_ref, seed, output_dir)
    return output_dir
