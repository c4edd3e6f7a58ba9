"""Command-line front end mirroring the extraction job fields."""

from __future__ import annotations

import argparse
import logging
import sys

from ._errors import AdapterError
from .datasets import load_sentences, sample_dataset
from .hidden import ExtractionJob, extract_hidden_states
from .mm import MmExtractionJob, extract_mm_stages
from .twin import make_untrained_twin

log = logging.getLogger("repdump")


def _layer(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repdump", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub = commands.add_parser("dump", help="dump per-token hidden states (and log-probs)")
    sub.add_argument("--model", required=True, help="checkpoint path or hub id")
    sub.add_argument("--dataset", required=True, help=".txt (line per sentence) or .jsonl")
    sub.add_argument("--text-field", default=None, help="field selector for .jsonl datasets")
    sub.add_argument("--layer", type=_layer, default=-1,
                     help="hidden-states index, or first|middle|last (default: last)")
    sub.add_argument("--subset-size", type=int, default=None)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--logprobs", action="store_true",
                     help="also dump teacher-forced token log-probs")
    sub.add_argument("--device", default="cpu")
    sub.add_argument("--model-id", default=None, help="manifest label (default: ref name)")
    sub.add_argument("--dataset-id", default=None)
    sub.add_argument("--output", required=True, metavar="DIR")
    sub.set_defaults(handler=_cmd_dump)

    sub = commands.add_parser("twin", help="build a seeded untrained twin of a checkpoint")
    sub.add_argument("--model", required=True)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--output", required=True, metavar="DIR")
    sub.set_defaults(handler=_cmd_twin)

    sub = commands.add_parser("dump-mm", help="dump the five multimodal stage dirs")
    sub.add_argument("--model", required=True)
    sub.add_argument("--processor", default=None, help="processor ref (default: --model)")
    sub.add_argument("--dataset", required=True, help=".jsonl of image/instruction/response")
    sub.add_argument("--subset-size", type=int, default=None)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--device", default="cpu")
    sub.add_argument("--model-id", default=None)
    sub.add_argument("--dataset-id", default=None)
    sub.add_argument("--output", required=True, metavar="DIR")
    sub.set_defaults(handler=_cmd_dump_mm)

    sub = commands.add_parser("sample", help="print a seeded sentence subsample")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--text-field", default=None)
    sub.add_argument("--subset-size", type=int, required=True)
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(handler=_cmd_sample)

    return parser


def _cmd_dump(args) -> int:
    job = ExtractionJob(
        model_ref=args.model, dataset_path=args.dataset, output_dir=args.output,
        text_field=args.text_field, layer=args.layer, subset_size=args.subset_size,
        seed=args.seed, include_logprobs=args.logprobs, device=args.device,
        model_id=args.model_id, dataset_id=args.dataset_id,
    )
    manifest = extract_hidden_states(job)
    print(manifest)
    return 0


def _cmd_twin(args) -> int:
    print(make_untrained_twin(args.model, args.seed, args.output))
    return 0


def _cmd_dump_mm(args) -> int:
    job = MmExtractionJob(
        model_ref=args.model, dataset_path=args.dataset, output_dir=args.output,
        processor_ref=args.processor, subset_size=args.subset_size, seed=args.seed,
        device=args.device, model_id=args.model_id, dataset_id=args.dataset_id,
    )
    for path in extract_mm_stages(job):
        print(path)
    return 0


def _cmd_sample(args) -> int:
    sentences = load_sentences(args.dataset, text_field=args.text_field)
    for sid, text in sample_dataset(sentences, args.subset_size, args.seed):
        print(f"{sid}\t{text}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except AdapterError as exc:
        print(f"repdump: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"repdump: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
