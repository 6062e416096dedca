"""Command-line front end.

Every verb writes plain text or CSV with a ``#``-prefixed provenance header.
Output goes to ``--out`` (written only after the computation succeeded) or
to stdout.  Exit codes: 0 success, 2 configuration or usage error,
3 numerical failure, 4 model not supported by the requested operation.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from typing import Sequence

import numpy as np

from . import __version__
from .asymptotics import (
    C_IS,
    C_ISDM,
    I3,
    find_symbol_zeros,
    general_gauge_asymptote,
    ising_dm_entropy,
    keating_mezzadri_asymptote,
)
from .config import ConfigError, dump_model, load_model, parse_nn_inline
from .correlations import DEFAULT_TOL, QuadratureError, assemble_block_toeplitz, pi_blocks
from .entropy import EntropyDomainError, EntropySolverError, entropy_scan, gauge_entropy_scan
from .finite import (
    THREADS_ENV,
    DegenerateGroundStateError,
    FiniteChain,
    SaturationError,
    cc_fit,
    entropy_profile,
    max_asymmetry,
    saturation_entropy,
    saturation_sweep,
)
from .model import DegenerateModelError, ModelSpec, asymmetric_range3_model, classify, nn_model, nn_region_label
from .transforms import (
    TransformError,
    decouple_direct,
    from_majorana,
    kw_selfdual_reduce,
    rotate_to_real_pairing,
    to_majorana,
    xy_ising_decouple,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_UNSUPPORTED = 4

NUMERIC_ERRORS = (
    QuadratureError,
    EntropyDomainError,
    EntropySolverError,
    DegenerateGroundStateError,
    DegenerateModelError,
    SaturationError,
    ArithmeticError,
    np.linalg.LinAlgError,
)

RECIPES = ("ising-dm-constants", "delta-s-decay", "cc-fit", "saturation-anomaly")


class UsageError(Exception):
    """Bad flag combination detected after argument parsing."""


def g12(x) -> str:
    return f"{float(x):.12g}"


# ---------------------------------------------------------------- parsing helpers

def parse_int_list(text: str) -> list[int]:
    """``"10,20,40"`` or ``"start:stop:step"`` (stop inclusive)."""
    out: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ":" in part:
            bits = part.split(":")
            if len(bits) != 3:
                raise UsageError(f"range {part!r} must be start:stop:step")
            a, b, s = (int(v) for v in bits)
            if s <= 0:
                raise UsageError("range step must be positive")
            out.extend(range(a, b + 1, s))
        else:
            out.append(int(part))
    if not out:
        raise UsageError("empty list")
    return out


def parse_float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not vals:
        raise UsageError("empty list")
    return vals


def parse_window(text: str) -> tuple[float, float]:
    vals = parse_float_list(text)
    if len(vals) != 2 or not 0.0 <= vals[0] < vals[1] <= 1.0:
        raise UsageError("window must be a,b with 0 <= a < b <= 1")
    return vals[0], vals[1]


def parse_sweep(text: str) -> tuple[str, list[float]]:
    """``"N=256,512"`` or ``"h=0.9:0.99:0.01"``."""
    key, sep, vals = text.partition("=")
    if not sep:
        raise UsageError("sweep spec must look like name=v1,v2,... or name=start:stop:step")
    key = key.strip()
    if ":" in vals:
        a, b, s = (float(v) for v in vals.split(":"))
        n = int(math.floor((b - a) / s + 1e-9)) + 1
        return key, [round(a + i * s, 12) for i in range(n)]
    return key, parse_float_list(vals)


def model_from_args(args) -> ModelSpec:
    if getattr(args, "model", None) and getattr(args, "nn", None):
        raise UsageError("give either --model or --nn, not both")
    if getattr(args, "model", None):
        return load_model(args.model)
    if getattr(args, "nn", None):
        return parse_nn_inline(args.nn)
    raise UsageError("a model is required (--model FILE or --nn gamma=..,h=..,D=..)")


def nn_params(text: str) -> dict[str, float]:
    vals = {"gamma": 0.0, "h": 0.0, "D": 0.0}
    for item in filter(None, (s.strip() for s in text.split(","))):
        k, _, v = item.partition("=")
        vals[k.strip()] = float(v)
    return vals


# ---------------------------------------------------------------- output

class Output:
    """Collects text; the caller flushes it only when the verb succeeded."""

    def __init__(self, args, model: ModelSpec | None = None):
        self.buf = io.StringIO()
        self.header(f"quasifree {__version__}")
        self.header(f"verb {args.verb}" + (f" {args.sub}" if getattr(args, "sub", None) else ""))
        if model is not None:
            self.header(f"model_hash {model.model_hash()}")
            self.header(f"hop {' '.join(g12c(c) for c in model.hop)}")
            if model.pair:
                self.header(f"pair {' '.join(g12c(c) for c in model.pair)}")
        self.header(f"tol {g12(getattr(args, 'tol', DEFAULT_TOL))}")

    def header(self, line: str):
        self.buf.write(f"# {line}\n")

    def kv(self, key: str, value):
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (float, np.floating)):
            value = g12(value)
        self.buf.write(f"{key}={value}\n")

    def table(self, columns: Sequence[str], rows):
        w = csv.writer(self.buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([g12(v) if isinstance(v, (float, np.floating)) else v for v in row])

    def text(self, s: str):
        self.buf.write(s)


def g12c(z: complex) -> str:
    z = complex(z) + 0.0
    return f"{z.real + 0.0:.12g}{z.imag + 0.0:+.12g}j"


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".quasifree-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- verbs

def cmd_classify(args, out_files):
    model = model_from_args(args)
    out = Output(args, model)
    pt = classify(model)
    out.kv("critical", pt.critical)
    out.kv("reflection_breaking", pt.reflection_breaking)
    out.kv("degenerate", pt.degenerate)
    out.kv("dispersion_zeros", " ".join(g12(z) for z in pt.dispersion_zeros))
    out.kv("crossings", " ".join(g12(z) for z in pt.crossings))
    out.kv("negative_region", " ".join(f"[{g12(a)},{g12(b)}]" for a, b in pt.negative_region))
    if args.nn:
        p = nn_params(args.nn)
        out.kv("nn_region", nn_region_label(p["gamma"], p["h"], p["D"]))
    return out


def cmd_scan(args, out_files):
    model = model_from_args(args)
    Ls = parse_int_list(args.L)
    out = Output(args, model)
    if args.method == "gauge":
        if not model.is_gauge_invariant:
            raise TransformError("--method gauge needs a model without pairing")
        curve = gauge_entropy_scan(model, Ls, args.tol)
    else:
        curve = entropy_scan(model, Ls, args.tol)
    out.table(["L", "S_L", "method", "model_hash"], ((int(L), float(S), curve.method, curve.model_hash)
                                                    for L, S in zip(curve.L, curve.S)))
    if args.dump_corr:
        L = int(max(Ls))
        C, defect = assemble_block_toeplitz(pi_blocks(model, L - 1, args.tol), L)
        dump = Output(args, model)
        dump.header(f"majorana correlation matrix C, L = {L}, antisymmetry defect {defect:.3e}")
        dump.header("rows/columns interleave x, y majoranas per site")
        dump.table([f"c{j}" for j in range(2 * L)], (list(map(float, row)) for row in C))
        out_files[args.dump_corr] = dump.buf.getvalue()
    return out


def cmd_asymptote(args, out_files):
    Ls = parse_int_list(args.L)
    if args.ising_dm is not None:
        model = nn_model(1.0, 1.0, args.ising_dm)
        out = Output(args, model)
        res = ising_dm_entropy(args.ising_dm)
    else:
        model = model_from_args(args)
        out = Output(args, model)
        if not model.is_gauge_invariant:
            raise TransformError("asymptote needs a gauge-invariant model; use --ising-dm or transform kw first")
        jumps = find_symbol_zeros(model)
        res = keating_mezzadri_asymptote(jumps) if args.form == "symmetric" else general_gauge_asymptote(jumps)
        out.kv("zeros", " ".join(g12(z) for z in jumps.zeros))
    out.header(f"I3 {I3}")
    out.kv("validity", res.validity)
    out.kv("slope", res.slope)
    out.kv("constant", res.constant)
    out.table(["L", "S_L_predicted"], ((int(L), float(S)) for L, S in zip(Ls, res.predict(Ls))))
    return out


def cmd_transform(args, out_files):
    model = model_from_args(args)
    out = Output(args, model)
    if args.sub == "kw":
        red = kw_selfdual_reduce(model)
        out.header("gauge-invariant chain; S_L(original) = S_2L(reduced) / 2")
        out.text(dump_model(red.reduced))
    elif args.sub == "decouple":
        dec = decouple_direct(model)
        out.header("chains -A+B and -A-B; S_L = (S_L(plus) + S_L(minus)) / 2")
        out.text("[plus]\n" + dump_model(dec.plus) + "[minus]\n" + dump_model(dec.minus))
    elif args.sub == "xy-ising":
        c1, c2 = xy_ising_decouple(to_majorana(model))
        out.header("two chains on doubled cells; S_2L = S_L(chain1) + S_L(chain2)")
        out.text("[chain1]\n" + dump_model(from_majorana(c1)) + "[chain2]\n" + dump_model(from_majorana(c2)))
    else:
        res = rotate_to_real_pairing(model)
        out.kv("reducible", res.reducible)
        if not res.reducible:
            out.kv("reason", res.reason)
            return out
        out.kv("axis", " ".join(g12(v) for v in res.axis))
        out.text(dump_model(res.model))
    return out


def _finite_rows(args, model: ModelSpec, N: int):
    Ls = None
    if args.L_step > 1:
        Ls = sorted(set(range(1, N, args.L_step)) | set(N - v for v in range(1, N, args.L_step)))
    res = entropy_profile(FiniteChain(model, N, args.bc), Ls)
    res.fit = cc_fit(res.L, res.S, N, args.fit_window)
    return res


def cmd_finite(args, out_files):
    model = model_from_args(args)
    out = Output(args, model)
    out.header(f"boundary {args.bc}; fit window {args.fit_window}; asymmetry window {args.asym_window}")
    out.header(f"threads {os.environ.get(THREADS_ENV, '1')}")
    if args.sweep:
        key, vals = parse_sweep(args.sweep)
        if key != "N":
            raise UsageError("finite --sweep varies N, e.g. N=256,512")
        Ns = [int(v) for v in vals]
    else:
        if args.N is None:
            raise UsageError("finite needs --N or --sweep N=...")
        Ns = [args.N]
    summary = []
    for N in Ns:
        res = _finite_rows(args, model, N)
        summary.append((N, max_asymmetry(res), max_asymmetry(res, args.asym_window),
                        res.fit.c, res.fit.const, res.fit.residual))
        if args.profile:
            out.table(["N", "L", "S", "dS"], ((N, int(L), float(S), float(d)) for L, S, d in res.rows()))
    out.table(["N", "max_abs_dS", "max_abs_dS_window", "c_fit", "const_fit", "fit_rms"], summary)
    return out


def cmd_sweep(args, out_files):
    base = nn_params(args.nn or "gamma=1,h=0,D=0")
    key, vals = parse_sweep(args.param)
    if key not in base:
        raise UsageError("sweep parameter must be gamma, h or D")

    def family(v):
        p = dict(base)
        p[key] = v
        return nn_model(p["gamma"], p["h"], p["D"])

    out = Output(args, None)
    out.header(f"nearest-neighbour base {base}; sweeping {key}")
    rows = saturation_sweep(family, vals, tol=args.sat_tol)
    out.table([key, "S_sat", "xi_fit", "xi_symbol", "L_used"],
              ((r.param, r.S_sat, r.xi, r.xi_symbol, r.L_used) for r in rows))
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r.xi for r in rows]), [r.S_sat for r in rows], 1)[0])
        out.kv("slope_S_vs_ln_xi", slope)
        out.kv("c_estimate", 3.0 * slope)
    return out


def cmd_oracle(args, out_files):
    from .oracle import exact_block_entropies, wick_check

    model = model_from_args(args)
    out = Output(args, model)
    exact = exact_block_entropies(model, args.N, args.bc)
    bdg = entropy_profile(FiniteChain(model, args.N, args.bc)).S
    out.table(["L", "S_exact", "S_correlation", "difference"],
              ((L, float(a), float(b), float(a - b)) for L, a, b in zip(range(1, args.N), exact, bdg)))
    if args.N <= 10:
        rng = np.random.default_rng(args.seed)
        tuples = [tuple(rng.integers(0, 2 * args.N, size=4)) for _ in range(args.wick)]
        out.kv("wick_max_deviation", wick_check(model, args.N, tuples, args.bc))
    return out


# ---------------------------------------------------------------- recipes

def repro_ising_dm_constants(args, out):
    Ls = list(range(64, 513, 16))
    rows = []
    for D in (0.0, 0.5, 2.0, 3.0):
        curve = entropy_scan(nn_model(1.0, 1.0, D), Ls, args.tol)
        a, b = np.polyfit(np.log(curve.L), curve.S, 1)
        pred = ising_dm_entropy(D)
        rows.append((D, float(a), float(b), pred.slope, pred.constant, float(b - pred.constant)))
    out.header(f"C_Is {C_IS:.12g}; C_IsDM {C_ISDM:.12g}; fit S_L = a ln L + b on L = 64..512 step 16")
    out.table(["D", "a_fit", "b_fit", "a_pred", "b_pred", "b_fit_minus_pred"], rows)


def repro_delta_s(args, out):
    model = asymmetric_range3_model()
    out.header(f"model {g12c(model.hop[1])} {g12c(model.hop[2])} pair {g12c(model.pair[0])} {g12c(model.pair[1])}")
    out.header("open boundary; window column restricted to 0.04 <= L/N <= 0.96")
    rows = []
    for N in (64, 128, 256, 512):
        res = entropy_profile(FiniteChain(model, N, "open"))
        rows.append((N, max_asymmetry(res), max_asymmetry(res, (0.04, 0.96))))
    out.table(["N", "max_abs_dS", "max_abs_dS_window"], rows)


def repro_cc_fit(args, out):
    model = asymmetric_range3_model()
    rows = []
    for N, step in ((256, 1), (512, 2), (1024, 8)):
        Ls = sorted(set(range(1, N, step)) | set(N - v for v in range(1, N, step)))
        res = entropy_profile(FiniteChain(model, N, "open"), Ls)
        fit = cc_fit(res.L, res.S, N)
        rows.append((N, fit.c, fit.const, fit.residual, fit.n_points))
    out.header("fit S = c/6 ln((2N/pi) sin(pi L/N)) + const on 0.1 <= L/N <= 0.9")
    out.table(["N", "c_fit", "const_fit", "fit_rms", "n_points"], rows)


def repro_saturation(args, out):
    s0, _ = saturation_entropy(nn_model(1.0, 0.9, 0.0))
    s1, _ = saturation_entropy(nn_model(1.0, 0.9, 0.5))
    out.kv("S_sat_D0", s0)
    out.kv("S_sat_D0.5", s1)
    out.kv("difference", s1 - s0)
    rows = saturation_sweep(lambda h: nn_model(1.0, h, 0.0), (0.98, 0.985, 0.99))
    out.table(["h", "S_sat", "xi_fit", "xi_symbol", "L_used"],
              ((r.param, r.S_sat, r.xi, r.xi_symbol, r.L_used) for r in rows))
    slope = float(np.polyfit(np.log([r.xi for r in rows]), [r.S_sat for r in rows], 1)[0])
    out.kv("slope_S_vs_ln_xi", slope)
    out.kv("c_estimate", 3.0 * slope)


def cmd_repro(args, out_files):
    out = Output(args, None)
    out.header(f"recipe {args.recipe}")
    {
        "ising-dm-constants": repro_ising_dm_constants,
        "delta-s-decay": repro_delta_s,
        "cc-fit": repro_cc_fit,
        "saturation-anomaly": repro_saturation,
    }[args.recipe](args, out)
    return out


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasifree", description="Entanglement entropy of quasifree spin chains.")
    p.add_argument("--version", action="version", version=f"quasifree {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", help="TOML model file")
            sp.add_argument("--nn", help="inline nearest-neighbour model, e.g. gamma=1,h=1,D=2")
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL, help="quadrature tolerance")
        sp.add_argument("--out", help="output file (default stdout)")
        return sp

    common(sub.add_parser("classify", help="criticality and reflection breaking"))

    s = common(sub.add_parser("scan", help="infinite-chain entropy S_L"))
    s.add_argument("--L", required=True, help="block lengths: 10,20 or start:stop:step")
    s.add_argument("--method", choices=("majorana", "gauge"), default="majorana")
    s.add_argument("--dump-corr", metavar="FILE", help="write the largest C_L as CSV")

    s = common(sub.add_parser("asymptote", help="large-L entropy formula"))
    s.add_argument("--L", default="100,200,400")
    s.add_argument("--ising-dm", type=float, metavar="D", help="critical Ising chain with DM coupling D")
    s.add_argument("--form", choices=("general", "symmetric"), default="general")

    s = common(sub.add_parser("transform", help="model reductions"))
    s.add_argument("sub", choices=("kw", "decouple", "xy-ising", "rotate"))

    s = common(sub.add_parser("finite", help="finite open or periodic chains"))
    s.add_argument("--N", type=int)
    s.add_argument("--bc", choices=("open", "periodic"), default="open")
    s.add_argument("--profile", action="store_true", help="print S and dS for every L")
    s.add_argument("--fit-window", type=parse_window, default=(0.1, 0.9))
    s.add_argument("--asym-window", type=parse_window, default=(0.04, 0.96))
    s.add_argument("--L-step", type=int, default=1, help="subsample block lengths")
    s.add_argument("--sweep", help="N=256,512,...")

    s = common(sub.add_parser("sweep", help="saturation entropy along a nearest-neighbour path"), model=False)
    s.add_argument("--nn", help="base parameters, e.g. gamma=1,D=0")
    s.add_argument("--param", required=True, help="h=0.9,0.95 or h=0.9:0.99:0.01")
    s.add_argument("--sat-tol", type=float, default=1e-6)

    s = common(sub.add_parser("oracle", help="exact diagonalization cross-check"))
    s.add_argument("--N", type=int, default=8)
    s.add_argument("--bc", choices=("open", "periodic"), default="open")
    s.add_argument("--wick", type=int, default=20, help="number of random 4-point checks")
    s.add_argument("--seed", type=int, default=0)

    s = common(sub.add_parser("repro", help="named reproduction recipes"), model=False)
    s.add_argument("recipe", choices=RECIPES)
    return p


COMMANDS = {
    "classify": cmd_classify,
    "scan": cmd_scan,
    "asymptote": cmd_asymptote,
    "transform": cmd_transform,
    "finite": cmd_finite,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "repro": cmd_repro,
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run the verb and return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    files: dict[str, str] = {}
    try:
        out = COMMANDS[args.verb](args, files)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=stderr)
        return EXIT_NUMERIC
    except (TransformError, ValueError) as exc:
        print(f"unsupported: {exc}", file=stderr)
        return EXIT_UNSUPPORTED
    text = out.buf.getvalue()
    if args.out:
        write_atomic(args.out, text)
    else:
        stdout.write(text)
    for path, body in files.items():
        write_atomic(path, body)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))
