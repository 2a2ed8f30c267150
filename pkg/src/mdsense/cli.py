"""Command-line front end.

Subcommands::

    mdsense threshold  --v 1 --pf 0.1
    mdsense analytic   --sweep pf --grid 0.01:0.99:0.01 --v 1 --mod qam16 --snr-db -5
    mdsense gen-noise  --v 1 --sigma2 1 --n 100000 --seed 3 --out noise.iq
    mdsense fit-noise  --in noise.iq
    mdsense roc        --grid 0.05,0.1,0.2 --v 1 --mod qam16 --snr-db -5 --pulse srrc
    mdsense pd-snr     --grid -20:0:2 --detector ed --uncertainty-db 2
    mdsense replay     curve.csv --out again.csv

CSV outputs start with ``#`` metadata lines; the ``# command:`` line holds
the fully resolved invocation, and ``replay`` re-runs it.
"""

from __future__ import annotations

import argparse
import io
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__, detector, simulator
from .mcleish import DegenerateInputError, McLeishParams, fit_params, sample_ccs
from .moments import SignalModel

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_IO = 3

SCENARIO_FLAGS = (
    "v", "sigma2", "snr_db", "mod", "sp", "n", "trials", "pf", "detector",
    "uncertainty_db", "worst_case_ed", "pulse", "seed",
)


class FormatError(Exception):
    """Malformed input file."""


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:step`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] == 0:
            raise argparse.ArgumentTypeError("range grid must be start:stop:step")
        start, stop, step = parts
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid: {text!r}") from None


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- IQ files

def write_iq(path: Path, samples: np.ndarray, text: bool = False) -> None:
    samples = np.asarray(samples, dtype=complex)
    if text:
        with open(path, "w", newline="") as fh:
            fh.write("i,q\n")
            for z in samples:
                fh.write(f"{float(np.float32(z.real))!r},{float(np.float32(z.imag))!r}\n")
        return
    inter = np.empty(2 * samples.size, dtype="<f4")
    inter[0::2] = samples.real
    inter[1::2] = samples.imag
    Path(path).write_bytes(inter.tobytes())


def read_iq(path: Path, text: bool = False) -> np.ndarray:
    if text:
        rows = Path(path).read_text().strip().splitlines()
        if rows and rows[0].replace(" ", "").lower() == "i,q":
            rows = rows[1:]
        try:
            data = np.array([[float(c) for c in r.split(",")] for r in rows], dtype=float)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
        if data.ndim != 2 or data.shape[1] != 2:
            raise FormatError(f"{path}: expected two columns i,q")
        return data[:, 0] + 1j * data[:, 1]
    raw = Path(path).read_bytes()
    if len(raw) == 0 or len(raw) % 8:
        raise FormatError(f"{path}: length {len(raw)} is not a positive multiple of 8 bytes")
    inter = np.frombuffer(raw, dtype="<f4").astype(float)
    return inter[0::2] + 1j * inter[1::2]


# ---------------------------------------------------------------- parsing

def _add_scenario(p: argparse.ArgumentParser) -> None:
    p.add_argument("--v", type=_float, default=1.0, help="non-Gaussianity parameter (inf = Gaussian)")
    p.add_argument("--sigma2", type=_float, default=1.0, help="noise power")
    p.add_argument("--snr-db", type=_float, default=0.0)
    p.add_argument("--mod", choices=["bpsk", "qam16"], default="bpsk")
    p.add_argument("--sp", type=_float, default=None, help="peak amplitude (overrides --snr-db)")
    p.add_argument("--n", type=int, default=1000, help="samples per trial")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--pf", type=_float, default=0.1)
    p.add_argument("--detector", choices=["md", "ed"], default="md")
    p.add_argument("--uncertainty-db", type=_float, default=0.0)
    p.add_argument("--worst-case-ed", action="store_true", help="ED threshold robust to the whole uncertainty range")
    p.add_argument("--pulse", choices=["flat", "srrc"], default="flat")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdsense", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"mdsense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="CFAR threshold of the moment detector")
    p.add_argument("--v", type=_float, required=True)
    p.add_argument("--pf", type=_float, default=0.1)
    p.add_argument("--n", type=int, default=1000)

    p = sub.add_parser("analytic", help="closed-form Pf/Pd over a grid")
    _add_scenario(p)
    p.add_argument("--sweep", choices=["pf", "snr"], default="pf")
    p.add_argument("--grid", type=_grid, default=None)

    p = sub.add_parser("gen-noise", help="write McLeish noise as IQ")
    p.add_argument("--v", type=_float, default=1.0)
    p.add_argument("--sigma2", type=_float, default=1.0)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--text", action="store_true")

    p = sub.add_parser("fit-noise", help="fit McLeish parameters to an IQ file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--text", action="store_true")

    for name, what in (("roc", "Monte-Carlo ROC"), ("pd-snr", "Monte-Carlo Pd vs SNR")):
        p = sub.add_parser(name, help=what)
        _add_scenario(p)
        p.add_argument("--grid", type=_grid, default=None)

    p = sub.add_parser("replay", help="regenerate a CSV from its metadata header")
    p.add_argument("source")

    for sp in sub.choices.values():
        sp.add_argument("--out", default=None)
        sp.add_argument("--config", default=None, help="key = value file mirroring long flags")
    return parser


VALUE_FLAGS = ("--grid", "--snr-db")


def _read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _join_values(argv: list[str]) -> list[str]:
    # "--grid -10,-5" would otherwise read the grid as an option
    out = []
    it = iter(argv)
    for tok in it:
        if tok in VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = _join_values(argv)
    path = _config_path(argv)
    if path is None or not argv:
        return parser.parse_args(argv)
    # file entries go first so that explicit flags, parsed later, win
    tokens = []
    for key, value in _read_config(path).items():
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() not in ("false", "no", "off"):
            tokens += [flag, value]
    return parser.parse_args([argv[0], *_join_values(tokens), *argv[1:]])


# ---------------------------------------------------------------- commands

def _noise(args) -> McLeishParams:
    return McLeishParams(args.sigma2, args.v)


def _amplitude(args) -> float:
    if args.sp is not None:
        return args.sp
    return math.sqrt(args.sigma2 * 10.0 ** (args.snr_db / 10.0))


def _scenario(args) -> simulator.Scenario:
    shaping = simulator.SrrcSpec() if args.pulse == "srrc" else None
    return simulator.Scenario(
        tx=simulator.TxSpec(args.mod, _amplitude(args), shaping),
        noise=_noise(args),
        uncertainty=simulator.UncertaintySpec(args.uncertainty_db, args.worst_case_ed),
        detector=args.detector,
        samples_per_trial=args.n,
        trials=args.trials,
        master_seed=args.seed,
        pf_target=args.pf,
    )


def canonical_command(args) -> str:
    """Fully resolved invocation, independent of any config file."""
    parts = [args.command]
    for key in SCENARIO_FLAGS:
        value = getattr(args, key)
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                parts.append(flag)
        elif value is not None:
            parts += [flag, _fmt(value) if isinstance(value, float) else str(value)]
    if getattr(args, "sweep", None):
        parts += ["--sweep", args.sweep]
    if args.grid is not None:
        parts.append("--grid=" + ",".join(_fmt(g) for g in args.grid))
    return shlex.join(parts)


def _header(args, extra: dict | None = None) -> str:
    lines = [
        f"# mdsense {__version__}",
        f"# command: {canonical_command(args)}",
        f"# seed: {args.seed}",
        f"# n: {args.n}",
        f"# trials: {args.trials}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {v}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_threshold(args) -> int:
    lam = detector.md_threshold(args.pf, args.v)
    lines = [
        f"lambda_star = {_fmt(lam)}",
        f"sigma_h0 = {_fmt(math.sqrt(detector.sigma2_h0(args.v)))}",
        f"t_h0 = {_fmt(detector.t_h0(args.v))}",
        f"pf = {_fmt(detector.pf(lam, args.v))}",
        f"n = {args.n}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _analytic_row(args, pf_target: float, amplitude: float) -> list[float]:
    noise = _noise(args)
    model = SignalModel(2 if args.mod == "bpsk" else 4, amplitude, 1.0)
    cfg = detector.MdConfig(noise, args.n, pf_target)
    lam = cfg.threshold
    pf_at = detector.pf(lam, args.v)
    pd_md = detector.md_pd(cfg, model)
    pd_md_exact = detector.md_pd(cfg, model, independent_quadratures=False)

    base = detector.EdConfig(noise.variance, noise, args.n, pf_target)
    lam_ed = detector.ed_threshold(base)
    if args.worst_case_ed:
        lam_ed *= 10.0 ** (args.uncertainty_db / 10.0)

    def with_beta(beta):
        return detector.EdConfig(beta * noise.variance, noise, args.n, pf_target)

    pf_ed = detector.average_over_uncertainty(lambda b: detector.ed_pf(lam_ed, with_beta(b)), args.uncertainty_db)
    pd_ed = detector.average_over_uncertainty(lambda b: detector.ed_pd(lam_ed, with_beta(b), model),
                                              args.uncertainty_db)
    return [lam, pf_at, pd_md, pd_md_exact, lam_ed, pf_ed, pd_ed]


def cmd_analytic(args) -> int:
    cols = "x,pf_target,threshold_md,pf_md,pd_md,pd_md_exact,threshold_ed,pf_ed,pd_ed"
    if args.grid is None:
        args.grid = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9] if args.sweep == "pf" else _grid("-20:0:2")
    buf = io.StringIO()
    buf.write(_header(args, {"sweep": args.sweep}))
    buf.write(cols + "\n")
    for x in args.grid:
        if args.sweep == "pf":
            pf_target, amp = x, _amplitude(args)
        else:
            pf_target, amp = args.pf, math.sqrt(args.sigma2 * 10.0 ** (x / 10.0))
        row = [x, pf_target] + _analytic_row(args, pf_target, amp)
        buf.write(",".join(_fmt(r) for r in row) + "\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_gen_noise(args) -> int:
    if not args.out:
        raise ValueError("gen-noise needs --out")
    samples = sample_ccs(McLeishParams(args.sigma2, args.v), args.n, args.seed)
    write_iq(Path(args.out), samples, text=args.text)
    return EXIT_OK


def cmd_fit_noise(args) -> int:
    samples = read_iq(Path(args.infile), text=args.text)
    fit = fit_params(samples)
    lines = [f"samples = {samples.size}", f"sigma2 = {_fmt(fit.variance)}"]
    if fit.is_gaussian:
        lines.append("v = inf")
        lines.append("class = gaussian_or_lighter")
    else:
        lines.append(f"v = {_fmt(fit.non_gaussianity)}")
        lines.append("class = mcleish")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _curve_csv(args, points) -> str:
    buf = io.StringIO()
    buf.write(_header(args, {"pulse": args.pulse, "detector": args.detector}))
    buf.write("x,pd,pf_empirical,ci_halfwidth\n")
    for p in points:
        buf.write(f"{_fmt(p.x)},{_fmt(p.pd)},{_fmt(p.pf_empirical)},{_fmt(p.ci_halfwidth)}\n")
    return buf.getvalue()


def cmd_roc(args) -> int:
    if args.grid is None:
        args.grid = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9]
    points = simulator.roc_curve(args.grid, _scenario(args), workers=args.workers)
    _emit(_curve_csv(args, points), args.out)
    return EXIT_OK


def cmd_pd_snr(args) -> int:
    if args.grid is None:
        args.grid = _grid("-20:0:2")
    points = simulator.pd_vs_snr(args.grid, _scenario(args), workers=args.workers)
    _emit(_curve_csv(args, points), args.out)
    return EXIT_OK


def command_from_header(path: str) -> list[str]:
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        if line.startswith("# command:"):
            return shlex.split(line.split(":", 1)[1].strip())
    raise FormatError(f"{path}: no '# command:' header line")


def cmd_replay(args) -> int:
    argv = command_from_header(args.source)
    if args.out:
        argv += ["--out", args.out]
    return main(argv)


COMMANDS = {
    "threshold": cmd_threshold,
    "analytic": cmd_analytic,
    "gen-noise": cmd_gen_noise,
    "fit-noise": cmd_fit_noise,
    "roc": cmd_roc,
    "pd-snr": cmd_pd_snr,
    "replay": cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except (FormatError, OSError) as exc:
        print(f"mdsense: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, DegenerateInputError) as exc:
        print(f"mdsense: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    raise SystemExit(main())
