"""``cafe`` command line: train, eval, spectrum, ablate and gradcheck.

Exit codes: 0 when every check passed, 1 when a check failed, 2 for bad
configuration or unreadable inputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as X
from . import rng
from .config import FIELD_TYPES, format_config, parse_config
from .encodings import explicit_basis
from .errors import BudgetExceeded, ConfigError, FormatError, ShapeError, TrainingDiverged
from .io import ImageGrid, atomic_write_bytes, checkpoint_load, checkpoint_save, \
    csv_bytes, save_ppm, write_csv
from .model import ModelSpec, init_model
from .spectrum import compute_ntk, empirical_spectrum_dft, enumerate_cafe_frequencies, format_freqs

NTK_INPUTS = 128
AUDIT_TOL = 1e-6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cafe", description="Train, evaluate and analyse coordinate networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train": "fit a model and write checkpoint, report and reconstruction",
        "eval": "recompute the task metric from a checkpoint",
        "spectrum": "frequency oracle, DFT containment and NTK checks",
        "ablate": "single-axis sweep written as a CSV report",
        "gradcheck": "compare parameter gradients with finite differences",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        for key in FIELD_TYPES:
            names = [f"--{key}"]
            if "_" in key:
                hyphen = "--" + key.replace("_", "-")
                names += sorted({hyphen, hyphen.lower()})
            p.add_argument(*names, dest=key, metavar=key.upper(), default=None)
    return parser


def resolve(args: argparse.Namespace) -> X.RunConfig:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    overrides = {k: getattr(args, k) for k in FIELD_TYPES if getattr(args, k) is not None}
    return parse_config(text, overrides)


def _out(cfg: X.RunConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_train(cfg: X.RunConfig) -> int:
    out = _out(cfg)
    result = X.fit(cfg, echo=True)
    rep = result.report
    checkpoint_save(result.model, out / "model.ckpt")
    write_csv(out / "report.csv", [X.report_row("train", result)])
    atomic_write_bytes(out / "loss.csv", csv_bytes(rep.losses, ("step", "loss")))
    atomic_write_bytes(out / "config.txt", format_config(cfg).encode("utf-8"))
    pred = result.prediction()
    if cfg.task in ("image", "noiseblock"):
        save_ppm(ImageGrid(pred.reshape(result.task.shape)), out / "recon.ppm")
    elif cfg.task == "func1d":
        rows = np.column_stack([result.task.coords[:, 0], result.task.targets[:, 0], pred[:, 0]])
        atomic_write_bytes(out / "prediction.csv",
                           csv_bytes([[f"{v:.17g}" for v in r] for r in rows], ("x", "target", "pred")))
    print(f"{rep.metric_name} = {rep.metric:.4f}  params = {rep.params}  "
          f"final loss = {rep.final_loss:.6e}  ({rep.seconds:.1f} s)")
    print(f"artifacts in {out}")
    return 0


def cmd_eval(cfg: X.RunConfig) -> int:
    path = Path(cfg.checkpoint) if cfg.checkpoint else Path(cfg.out) / "model.ckpt"
    model = checkpoint_load(path)
    task = X.load_task(cfg)
    if model.D != task.coords.shape[1] or model.spec.out_dim != task.out_dim:
        raise ConfigError(f"checkpoint maps D={model.D} to {model.spec.out_dim} outputs, "
                          f"task {cfg.task} needs D={task.coords.shape[1]} to {task.out_dim}")
    name, value = X.evaluate(model, task)
    print(f"{name} = {value:.6f}")
    return 0


def cmd_spectrum(cfg: X.RunConfig) -> int:
    ok = True
    freqs = cfg.frequency_list()
    if freqs is None:
        print("oracle: skipped (set freqs to an integer frequency list)")
    else:
        N = max(cfg.N, 1)
        spectrum = enumerate_cafe_frequencies(freqs, N)
        print(f"admissible frequencies (N={N}, base {format_freqs(spectrum.base)}):")
        print(format_freqs(spectrum.frequencies))
        print(f"set forms agree: {len(spectrum.signed_form)} frequencies")
        if freqs.shape[1] == 1:
            spec = ModelSpec(encoder="cafe", D=1, M=freqs.shape[0], J=0, N=N, D_h=cfg.D_h,
                             L_mlp=cfg.L_mlp, seed=cfg.seed)
            model = init_model(spec, explicit_basis(freqs))
            top = N * int(np.max(np.abs(freqs)))
            G = max(64, 2 * top + 2)
            dft = empirical_spectrum_dft(model, G)
            ok &= dft.contained
            print(f"DFT bins (G={G}): {format_freqs((k,) for k in dft.union)}")
            print(f"containment: {'PASS' if dft.contained else 'FAIL'}")

    d = cfg.dim if freqs is None else freqs.shape[1]
    model = init_model(cfg.model_spec(D=d), cfg.basis(D=d))
    gen = rng.stream(cfg.seed, "probe")
    inputs = rng.uniform(gen, -1.0, 1.0, (NTK_INPUTS, model.D))
    try:
        ntk = compute_ntk(model, inputs)
    except BudgetExceeded as exc:
        print(f"ntk: skipped ({exc})")
        return 0 if ok else 1
    ev = ntk.eigenvalues()
    sym, psd = ntk.is_symmetric(), ntk.is_psd()
    ok &= sym and psd
    out = _out(cfg)
    atomic_write_bytes(out / "ntk_eigenvalues.csv",
                       csv_bytes([(i, f"{v:.17g}") for i, v in enumerate(ev[::-1])], ("index", "eigenvalue")))
    print(f"ntk ({cfg.encoder}, {NTK_INPUTS} inputs): asymmetry {ntk.asymmetry():.2e} "
          f"symmetric: {'PASS' if sym else 'FAIL'}; min/max eigenvalue {ev.min():.3e}/{ev.max():.3e} "
          f"psd: {'PASS' if psd else 'FAIL'}")
    return 0 if ok else 1


def cmd_ablate(cfg: X.RunConfig) -> int:
    out = _out(cfg)
    rows = X.sweep(cfg)
    path = out / f"ablate_{cfg.axis}.csv"
    write_csv(path, rows)
    for row in rows:
        print(f"{row['run_id']:<24} params {row['params']:>7}  {row['final_psnr_or_iou']}")
    print(f"wrote {path}")
    return 0


def cmd_gradcheck(cfg: X.RunConfig) -> int:
    result = X.audit_config(cfg)
    status = "PASS" if result.passed(AUDIT_TOL) else "FAIL"
    if result.kinks:
        print(f"{result.kinks} ReLU inputs sit within the difference step of a kink; "
              "the loss is not differentiable there (try another seed)")
    print(f"gradcheck ({cfg.encoder}, {result.params} parameters): "
          f"max rel. err = {result.max_rel_error:.3e} (tol {AUDIT_TOL:g}) {status}")
    return 0 if status == "PASS" else 1


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "spectrum": cmd_spectrum,
            "ablate": cmd_ablate, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, FormatError, ShapeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AssertionError, TrainingDiverged, BudgetExceeded) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
