"""Command-line entry point: ``vocalremix {synth,train,remix,eval,sweep}``.

Usage errors exit with status 2; any other failure prints one diagnostic
line to stderr and exits with status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import harness, network
from .audio import read_wav, write_wav
from .dataset import load_corpus, make_corpus, write_corpus
from .masking import db_to_gain, scaling_matrix, threshold_mask
from .metrics import sar
from .remix import RemixRequest, apply_remix
from .spectral import magnitude, stft

log = logging.getLogger("vocalremix")


def _config(args) -> harness.ExperimentConfig:
    cfg = harness.load_config(args.config) if args.config else harness.default_config()
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg = replace(cfg, corpus=replace(cfg.corpus, base_seed=seed),
                      train=replace(cfg.train, seed=seed))
    return cfg


def _corpus(args, cfg):
    if getattr(args, "corpus", None):
        return load_corpus(args.corpus)
    c = cfg.corpus
    log.info("synthesising %d+%d songs from seed %d", c.n_train, c.n_test, c.base_seed)
    return make_corpus(c.n_train, c.n_test, c.base_seed, c.template)


def cmd_synth(args) -> None:
    cfg = _config(args)
    path = write_corpus(_corpus(args, cfg), args.out)
    print(f"wrote {path}")


def cmd_train(args) -> None:
    cfg = _config(args)
    model, report = harness.train_model(_corpus(args, cfg), cfg)
    network.save_model(model, args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    losses = report.epoch_losses
    print(f"wrote {args.out}: loss {losses[0]:.6f} -> {losses[-1]:.6f}, "
          f"held-out accuracy {report.heldout_accuracy:.4f} "
          f"(majority {report.heldout_majority_rate:.4f})")


def cmd_remix(args) -> None:
    cfg = _config(args)
    model = network.load_model(args.model)
    mixture = read_wav(args.mixture)
    spec = stft(mixture, cfg.stft)
    field = network.predict_field(model, magnitude(spec), cfg.patch)
    mask = threshold_mask(field, args.alpha)
    req = RemixRequest(mixture, scaling_matrix(mask, db_to_gain(args.gain_db)), cfg.stft)
    write_wav(args.out, apply_remix(req, spec), "float32")
    print(f"wrote {args.out}: {int(mask.sum())} of {mask.size} cells scaled")


def cmd_eval(args) -> None:
    cfg = _config(args)
    res = sar(read_wav(args.estimate), read_wav(args.reference), cfg.projection)
    print(f"sar_db={res.sar_db:.6f} capped={int(res.capped)}")
    if args.out:
        Path(args.out).write_text(json.dumps({"sar_db": res.sar_db, "capped": res.capped}) + "\n")


def cmd_sweep(args) -> None:
    cfg = _config(args)
    corpus = _corpus(args, cfg)
    if args.oracle:
        model = None
    elif args.model:
        model = network.load_model(args.model)
    else:
        log.info("no --model given: training one from the config")
        model, _ = harness.train_model(corpus, cfg)
    records = harness.run_sweep(corpus, model, cfg)
    harness.write_csv(records, args.out, cfg)
    print(f"wrote {args.out}: {len(records)} records")
    if args.summary:
        harness.write_summary_csv(harness.summarize(records), args.summary)
        print(f"wrote {args.summary}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vocalremix", description="Vocal-gain remixing with a learned time-frequency mask.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text, seed=True):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", help="experiment config (JSON); defaults apply otherwise")
        if seed:
            sp.add_argument("--seed", type=int,
                            help="overrides the corpus base seed and the training seed")
        sp.set_defaults(func=func)
        return sp

    sp = add("synth", cmd_synth, "write a synthetic corpus of stems")
    sp.add_argument("--out", required=True, help="corpus directory")

    sp = add("train", cmd_train, "train a mask network on a corpus")
    sp.add_argument("--corpus", help="corpus directory (synthesised from the config if absent)")
    sp.add_argument("--out", required=True, help="model file (JSON)")
    sp.add_argument("--report", help="optional training report (JSON)")

    sp = add("remix", cmd_remix, "change the vocal level of a mixture WAV", seed=False)
    sp.add_argument("mixture", help="mono mixture WAV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--alpha", type=float, required=True, help="confidence threshold in [0, 1]")
    sp.add_argument("--gain-db", type=float, required=True, help="vocal gain, 10*log10(g)")
    sp.add_argument("--out", required=True, help="output WAV (float32)")

    sp = add("eval", cmd_eval, "SAR of an estimate WAV against a reference WAV", seed=False)
    sp.add_argument("estimate")
    sp.add_argument("reference")
    sp.add_argument("--out", help="optional JSON result")

    sp = add("sweep", cmd_sweep, "evaluate the gain/alpha grid over the test songs")
    sp.add_argument("--corpus", help="corpus directory (synthesised from the config if absent)")
    sp.add_argument("--model", help="model file (trained from the config if absent)")
    sp.add_argument("--oracle", action="store_true", help="use ideal binary masks instead of a model")
    sp.add_argument("--out", required=True, help="sweep CSV")
    sp.add_argument("--summary", help="optional per-cell mean/CI CSV")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.command == "sweep" and args.oracle and args.model:
        parser.error("--oracle and --model are mutually exclusive")
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"vocalremix {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
