from __future__ import annotations

import json

import numpy as np
import pytest
import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

WORDS = (
    "the a an and or but if then while for of in on at by with from to into over "
    "under between through during before after above below again once here there "
    "all any both each few more most other some such only own same so than too "
    "very can will just should now one two three four five six seven eight nine "
    "ten cat dog bird fish horse house tree river mountain city road bridge door "
    "window table chair book paper letter word line page story music sound light "
    "dark color red blue green yellow small large long short high low old new "
    "good bad fast slow warm cold day night morning evening summer winter spring "
    "rain snow wind cloud sun moon star water fire earth air stone sand glass "
    "iron gold silver run walk jump swim fly read write speak listen watch"
).split()


def build_tokenizer(with_bos: bool) -> PreTrainedTokenizerFast:
    vocab = {"<unk>": 0, "<s>": 1}
    vocab.update({word: i + 2 for i, word in enumerate(WORDS)})
    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    # "zzz" normalizes away entirely, giving tests a real empty-after-
    # tokenization sentence.
    tok.normalizer = normalizers.Replace("zzz", "")
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    if with_bos:
        tok.post_processor = processors.TemplateProcessing(
            single="<s> $A", pair="<s> $A $B", special_tokens=[("<s>", 1)])
    return PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="<unk>", bos_token="<s>", eos_token="<s>")


def build_lm_dir(directory, *, with_bos: bool, seed: int = 4242,
                 n_layer: int = 2, n_embd: int = 32) -> str:
    tokenizer = build_tokenizer(with_bos)
    config = GPT2Config(
        vocab_size=len(tokenizer), n_layer=n_layer, n_head=2, n_embd=n_embd,
        n_positions=256, bos_token_id=1, eos_token_id=1,
    )
    torch.manual_seed(seed)
    model = GPT2LMHeadModel(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)


def random_sentences(n: int, seed: int = 11, lo: int = 5, hi: int = 16) -> list[str]:
    rng = np.random.default_rng(seed)
    sentences = []
    for _ in range(n):
        length = int(rng.integers(lo, hi))
        sentences.append(" ".join(rng.choice(WORDS, size=length).tolist()))
    return sentences


@pytest.fixture(scope="session")
def tiny_lm(tmp_path_factory):
    return build_lm_dir(tmp_path_factory.mktemp("tiny-lm"), with_bos=False)


@pytest.fixture(scope="session")
def tiny_lm_bos(tmp_path_factory):
    return build_lm_dir(tmp_path_factory.mktemp("tiny-lm-bos"), with_bos=True)


@pytest.fixture(scope="session")
def text_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sentences.txt"
    path.write_text("\n".join(random_sentences(40)) + "\n")
    return path


@pytest.fixture(scope="session")
def jsonl_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "rows.jsonl"
    rows = [{"context": text, "category": "x"} for text in random_sentences(25, seed=23)]
    path.write_text("\n".join(json.dumps(row) for row in rows) + "\n")
    return path


def build_llava_dir(directory, *, seed: int = 99) -> str:
    from transformers import (
        CLIPImageProcessor,
        CLIPVisionConfig,
        LlamaConfig,
        LlavaConfig,
        LlavaForConditionalGeneration,
        LlavaProcessor,
    )

    tokenizer = build_tokenizer(with_bos=True)
    vision = CLIPVisionConfig(hidden_size=24, intermediate_size=48, num_attention_heads=2,
                              num_hidden_layers=2, image_size=32, patch_size=8)
    text = LlamaConfig(hidden_size=40, intermediate_size=64, num_attention_heads=2,
                       num_hidden_layers=2, vocab_size=len(tokenizer))
    config = LlavaConfig(vision_config=vision, text_config=text)
    torch.manual_seed(seed)
    model = LlavaForConditionalGeneration(config)
    model.save_pretrained(directory)
    image_processor = CLIPImageProcessor(size={"shortest_edge": 32},
                                         crop_size={"height": 32, "width": 32})
    LlavaProcessor(image_processor=image_processor, tokenizer=tokenizer,
                   patch_size=8).save_pretrained(directory)
    return str(directory)


@pytest.fixture(scope="session")
def tiny_llava(tmp_path_factory):
    return build_llava_dir(tmp_path_factory.mktemp("tiny-llava"))


def _write_mm_dataset(root, *, rotate: bool = False, n_samples: int = 6):
    from PIL import Image

    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(314)
    texts = random_sentences(2 * n_samples, seed=271, lo=4, hi=9)
    rows = []
    for i in range(n_samples):
        pixels = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        image = Image.fromarray(pixels, mode="RGB")
        if rotate:
            image = image.transpose(Image.Transpose.ROTATE_90)
        name = f"img{i}.png"
        image.save(root / name)
        rows.append({"image": name, "instruction": texts[2 * i],
                     "response": texts[2 * i + 1]})
    path = root / "triplets.jsonl"
    path.write_text("\n".join(json.dumps(row) for row in rows) + "\n")
    return path


@pytest.fixture(scope="session")
def mm_dataset(tmp_path_factory):
    return _write_mm_dataset(tmp_path_factory.mktemp("mm-data"))


@pytest.fixture(scope="session")
def mm_dataset_rotated(tmp_path_factory):
    return _write_mm_dataset(tmp_path_factory.mktemp("mm-data-rot"), rotate=True)
