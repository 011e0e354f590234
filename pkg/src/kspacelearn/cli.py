"""Command-line surface reproducing the experiment protocols at desk scale.

Subcommands: gen-data, learn, reconstruct, evaluate, baseline, greedy, kde,
sweep-beta. Common flags: --config, --out, --seed, --threads, --tol.

Exit codes: 0 success, 1 runtime error, 2 usage error, 3 config parse
failure, 4 missing file, 5 malformed data file.
"""

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baselines import baseline_pattern, greedy_lines, kde_pattern
from .config import build_learn_config, load_config
from .core import ParamVector, Rng
from .data_io import (FieldFile, export_pgm, make_dataset, read_field,
                      read_manifest, write_field, write_manifest)
from .errors import ConfigError, FileFormatError, KspaceLearnError
from .lower_level import LowerLevelProblem, solve
from .metrics import aggregate, psnr, ssim
from .upper_level import learn, param_apply, threshold_and_retune

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_FORMAT = 5


def _parser():
    p = argparse.ArgumentParser(prog="kspacelearn")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("gen-data", "learn", "reconstruct", "evaluate", "baseline",
                 "greedy", "kde", "sweep-beta"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "kde")
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)
        if name in ("reconstruct", "evaluate", "kde"):
            sp.add_argument("--pattern", required=True)
        if name == "kde":
            sp.add_argument("--bandwidth", type=float, default=2.0)
    return p


def _apply_overrides(cfg, args):
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.tol is not None:
        cfg.pdhg_tol = args.tol
    return cfg


def _load_dataset(cfg):
    return read_manifest(cfg.manifest)


def _write_pattern(out, name, pv):
    write_field(out / f"{name}.bkf", FieldFile("param-vector", pv))
    export_pgm(out / f"{name}.pgm", np.fft.fftshift(pv.weights))


def _write_history(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "iter", "objective", "sampling_fraction",
                    "proj_grad_norm", "alpha"])
        for rec in history:
            w.writerow([rec["phase"], rec["iter"], repr(rec["objective"]),
                        repr(rec["sampling_fraction"]),
                        repr(rec["proj_grad_norm"]), repr(rec["alpha"])])


def _evaluate_pattern(pv, dataset, lcfg, split="test"):
    rows = []
    for i, pair in enumerate(dataset.split(split)):
        problem = LowerLevelProblem(y=pair.y, params=pv, rho=lcfg.rho,
                                    op=lcfg.op, eps=lcfg.eps)
        state = solve(problem, tol=lcfg.pdhg_tol, maxit=lcfg.pdhg_maxit)
        rows.append((i, ssim(state.u, pair.u_star), psnr(state.u, pair.u_star)))
    return rows


def _write_metrics(path, pattern_id, fraction, rows):
    ssims = [r[1] for r in rows]
    psnrs = [r[2] for r in rows]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pattern_id", "image", "sampling_fraction", "ssim", "psnr"])
        for i, s, p in rows:
            w.writerow([pattern_id, i, repr(fraction), repr(s), repr(p)])
        sm, se = aggregate(ssims)
        pm, pe = aggregate(psnrs)
        w.writerow([pattern_id, "mean+-stderr", repr(fraction),
                    f"{sm!r}+-{se!r}", f"{pm!r}+-{pe!r}"])
    return sm, se, pm, pe


def cmd_gen_data(cfg, args, out):
    dataset = make_dataset(cfg.seed, cfg.shape, cfg.n_train, cfg.n_test,
                           cfg.ellipse_count, cfg.noise_sigma_rel)
    manifest = Path(cfg.manifest)
    manifest.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, dataset)
    export_pgm(out / "phantom0.pgm", dataset.pairs[0].u_star.real)
    print(f"wrote {len(dataset.pairs)} pairs to {manifest}")
    return EXIT_OK


def cmd_learn(cfg, args, out):
    dataset = _load_dataset(cfg)
    train = dataset.split("train")
    lcfg = build_learn_config(cfg, train)
    lam, history = learn(train, lcfg)
    pv = param_apply(lcfg.parametrization, lam)
    _write_pattern(out, "lambda_star", pv)
    _write_history(out / "history.csv", history)
    if lcfg.parametrization.kind == "lines":
        binary, alpha = threshold_and_retune(lam, train, lcfg)
        _write_pattern(out, "lambda_star_thresholded", ParamVector(binary, alpha))
    print(f"learned pattern: sampling fraction {pv.sampling_fraction:.4f}, "
          f"alpha {pv.alpha:.6g}")
    return EXIT_OK


def cmd_reconstruct(cfg, args, out):
    dataset = _load_dataset(cfg)
    lcfg = build_learn_config(cfg, dataset.split("train"))
    pv = read_field(args.pattern).data
    rows = []
    for i, pair in enumerate(dataset.split("test")):
        problem = LowerLevelProblem(y=pair.y, params=pv, rho=lcfg.rho,
                                    op=lcfg.op, eps=lcfg.eps)
        state = solve(problem, tol=lcfg.pdhg_tol, maxit=lcfg.pdhg_maxit)
        write_field(out / f"recon{i:04d}.bkf", FieldFile("complex-image", state.u))
        export_pgm(out / f"recon{i:04d}.pgm", np.abs(state.u), normalize=True)
        rows.append((i, ssim(state.u, pair.u_star), psnr(state.u, pair.u_star)))
    _write_metrics(out / "metrics.csv", "reconstruct", pv.sampling_fraction, rows)
    return EXIT_OK


def cmd_evaluate(cfg, args, out):
    dataset = _load_dataset(cfg)
    lcfg = build_learn_config(cfg, dataset.split("train"))
    pv = read_field(args.pattern).data
    rows = _evaluate_pattern(pv, dataset, lcfg)
    sm, se, pm, pe = _write_metrics(out / "evaluate.csv", Path(args.pattern).stem,
                                    pv.sampling_fraction, rows)
    print(f"SSIM {sm:.4f}+-{se:.4f}  PSNR {pm:.2f}+-{pe:.2f}")
    return EXIT_OK


def cmd_baseline(cfg, args, out):
    rng = Rng(cfg.seed).substream(100)
    pv = baseline_pattern(cfg.baseline_kind, cfg.shape, rng, cfg.rate,
                          decay=cfg.decay, axis=cfg.axis)
    _write_pattern(out, f"baseline_{cfg.baseline_kind}", pv)
    return EXIT_OK


def cmd_greedy(cfg, args, out):
    dataset = _load_dataset(cfg)
    train = dataset.split("train")
    lcfg = build_learn_config(cfg, train)
    pv = greedy_lines(train, lcfg, cfg.rate, axis=cfg.axis)
    _write_pattern(out, "greedy_lines", pv)
    return EXIT_OK


def cmd_kde(cfg, args, out):
    pv = read_field(args.pattern).data
    weights = pv.weights if isinstance(pv, ParamVector) else np.asarray(pv)
    density = kde_pattern(weights, args.bandwidth)
    write_field(out / "kde.bkf", FieldFile("real-image", density))
    export_pgm(out / "kde.pgm", np.fft.fftshift(density), normalize=True)
    return EXIT_OK


def cmd_sweep_beta(cfg, args, out):
    dataset = _load_dataset(cfg)
    train = dataset.split("train")
    lcfg_base = build_learn_config(cfg, train)
    rows = []
    for beta in cfg.beta_list:
        lcfg = replace(lcfg_base, beta=beta)
        lam, history = learn(train, lcfg)
        pv = param_apply(lcfg.parametrization, lam)
        tag = f"beta_{beta:g}"
        _write_pattern(out, f"pattern_{tag}", pv)
        _write_history(out / f"history_{tag}.csv", history)
        ev = _evaluate_pattern(pv, dataset, lcfg)
        sm, se = aggregate([r[1] for r in ev])
        pm, pe = aggregate([r[2] for r in ev])
        pg = history[-1]["proj_grad_norm"] if history else float("nan")
        rows.append([beta, pv.sampling_fraction, pv.alpha, sm, se, pm, pe, pg])
        print(f"beta={beta:g}: fraction={pv.sampling_fraction:.4f} "
              f"ssim={sm:.4f}+-{se:.4f}")
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "sampling_fraction", "alpha", "ssim_mean",
                    "ssim_stderr", "psnr_mean", "psnr_stderr", "proj_grad_norm"])
        for r in rows:
            w.writerow([repr(v) for v in r])
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "learn": cmd_learn,
    "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate,
    "baseline": cmd_baseline,
    "greedy": cmd_greedy,
    "kde": cmd_kde,
    "sweep-beta": cmd_sweep_beta,
}


def cli(argv):
    """Run the CLI on an argv list (without the program name); returns the
    process exit code."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code != 0 else EXIT_OK
    try:
        if args.config is not None:
            cfg = _apply_overrides(load_config(args.config), args)
        else:
            cfg = None
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except FileFormatError as exc:
        print(f"malformed file: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except KspaceLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
