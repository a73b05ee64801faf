"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import dsp, nn, synth, trainer
from .dataset import DatasetStore, assign_split, parse_label
from .dsp import DEFAULT_SIDE, StftParams
from .errors import PhasicError
from .synth import SynthParams


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here reserves 2 for
    # runtime failures, so usage problems are remapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self._print_message(f"{self.prog}: error: {message}\n", sys.stderr)
        raise SystemExit(1)


def _add_stft_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--frame-len", type=int, default=512)
    p.add_argument("--hop", type=int, default=128)
    p.add_argument("--input-side", type=int, default=DEFAULT_SIDE)


def build_parser() -> _Parser:
    parser = _Parser(prog="phasic",
                     description="Doppler phasicity classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--data-root", required=True)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--noise", type=float, default=0.15,
                   help="upper bound of the per-clip noise jitter")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("spectrogram", help="render one WAV file to a PNG")
    p.add_argument("wav")
    p.add_argument("png")
    _add_stft_flags(p)
    p.set_defaults(func=_cmd_spectrogram)

    p = sub.add_parser("split", help="assign a stratified train/test split")
    p.add_argument("--data-root", required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train a model on the split dataset")
    p.add_argument("--data-root", required=True)
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    _add_stft_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on one split")
    p.add_argument("--data-root", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    _add_stft_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="classify a single WAV file")
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    _add_stft_flags(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data-root")
    p.add_argument("--model")
    p.add_argument("--port", type=int, default=8000)
    _add_stft_flags(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def _stft_from(args) -> StftParams:
    return StftParams(frame_len=args.frame_len, hop=args.hop)


def _cmd_synth(args) -> int:
    params = SynthParams(seed=args.seed)
    manifest = synth.generate_corpus(args.data_root, args.n_per_class, params,
                                     noise_range=(0.0, args.noise))
    print(f"wrote {len(manifest.entries)} clips under {args.data_root}")
    return 0


def _cmd_spectrogram(args) -> int:
    data = Path(args.wav).read_bytes()
    clip = dsp.decode_wav(data)
    spec = dsp.clip_to_input(clip, _stft_from(args), args.input_side)
    Path(args.png).write_bytes(dsp.spectrogram_to_png(spec))
    print(f"wrote {args.png}")
    return 0


def _cmd_split(args) -> int:
    store = DatasetStore(args.data_root)
    manifest = assign_split(store.load_manifest(), args.train_fraction, args.seed)
    store.save_manifest(manifest)
    n_train = len(manifest.by_split("train"))
    n_test = len(manifest.by_split("test"))
    print(f"assigned {n_train} train / {n_test} test")
    return 0


def _cmd_train(args) -> int:
    store = DatasetStore(args.data_root)
    manifest = store.load_manifest()
    cfg = trainer.TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                              lr=args.lr, seed=args.seed,
                              input_side=args.input_side, stft=_stft_from(args))
    model = nn.build_model(input_side=args.input_side, seed=args.seed)
    model, history = trainer.train(model, store, manifest, cfg)
    for r in history.records:
        print(f"epoch {r.epoch}: train_loss={r.train_loss:.4f} "
              f"train_acc={r.train_accuracy:.4f} test_loss={r.test_loss:.4f} "
              f"test_acc={r.test_accuracy:.4f}")
    trainer.save_model(model, args.model)
    print(f"saved model to {args.model}")
    return 0


def _cmd_eval(args) -> int:
    store = DatasetStore(args.data_root)
    manifest = store.load_manifest()
    model = trainer.load_model(args.model)
    cm, metrics = trainer.evaluate(model, store, manifest, args.split,
                                   _stft_from(args))
    print(f"samples: {cm.total}")
    print(f"accuracy: {metrics.accuracy:.4f}")
    print(f"macro_f1: {metrics.macro_f1:.4f}")
    for label, f1 in zip(("Monophasic", "Biphasic", "Triphasic"),
                         metrics.per_class_f1):
        print(f"f1[{label}]: {f1:.4f}")
    return 0


def _cmd_predict(args) -> int:
    model = trainer.load_model(args.model)
    clip = dsp.decode_wav(Path(args.wav).read_bytes())
    spec = dsp.clip_to_input(clip, _stft_from(args), model.input_side)
    probs, _ = nn.forward(model, spec)
    names = ("Monophasic", "Biphasic", "Triphasic")
    print(names[int(probs.argmax())])
    for name, p in zip(names, probs):
        print(f"{name} {float(p):.4f}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    static_dir = os.environ.get("PHASIC_STATIC_DIR")
    app = create_app(data_root=args.data_root, model_path=args.model,
                     stft=_stft_from(args), static_dir=static_dir)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    try:
        return args.func(args)
    except PhasicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
