"""Command-line entry point: one subcommand per pipeline, JSON in, CSV/JSON out.

Exit status: 0 when every residual gate passes, 1 on a gate failure,
2 on a configuration error, 3 on a numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import ArtifactError, ComputeError, ConfigError

GATE_FAILURE = 1
CLOSURE_TOL = 1e-6


# ---------------------------------------------------------------- output

def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits, complex as [re, im]."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(obj[k], indent + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_fmt(obj.real)}, {_fmt(obj.imag)}]"
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    return json.dumps(str(obj))


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                cells.append(str(int(v)))
            else:
                cells.append("nan" if not np.isfinite(v) else format(float(v), ".17g"))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def config_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------- parsing helpers

def _complex_list(text: str, field: str) -> list[complex]:
    try:
        return [complex(t.strip().replace(" ", "")) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"field '{field}' must be comma-separated complex numbers") from None


def _complex_entries(seq, field: str) -> list[complex]:
    if not isinstance(seq, (list, tuple)):
        seq = [seq]
    out = []
    for item in seq:
        try:
            if isinstance(item, (list, tuple)):
                out.append(complex(float(item[0]), float(item[1])))
            elif isinstance(item, str):
                out.append(complex(item.replace(" ", "")))
            else:
                out.append(complex(float(item)))
        except (TypeError, ValueError, IndexError):
            raise ConfigError(f"field '{field}' has a malformed entry {item!r}") from None
    return out


def _coords(doc: dict, args) -> "LatticeCoordinates":
    from .divisor_inversion import LatticeCoordinates
    if args.c1 is not None or args.c2 is not None:
        if args.c1 is None or args.c2 is None:
            raise ConfigError("both --c1 and --c2 are required")
        c1, c2 = _complex_list(args.c1, "c1"), _complex_list(args.c2, "c2")
    else:
        lc = doc.get("lattice_coords")
        if not isinstance(lc, dict) or "c1" not in lc or "c2" not in lc:
            raise ConfigError("field 'lattice_coords' with 'c1' and 'c2' is required")
        c1, c2 = _complex_entries(lc["c1"], "lattice_coords.c1"), _complex_entries(lc["c2"], "lattice_coords.c2")
    return LatticeCoordinates.of(c1, c2)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in config: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _curve(doc: dict, default: list | None = None):
    from .curve_core import load_curve_json
    if "branch_points" not in doc and default is not None:
        doc = dict(doc, branch_points=default)
    return load_curve_json(doc)


def _grid(text: str, field: str) -> np.ndarray:
    parts = text.split(",")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise ConfigError(f"field '{field}' must look like 'min,max,points'") from None
    if n < 5 or not hi > lo:
        raise ConfigError(f"field '{field}' needs max > min and at least 5 points")
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------- figures

def _pyplot():
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ConfigError("--figures needs matplotlib (pip install 'artifact[figures]')") from None
    return plt


def _line_figure(path: Path, x, series: dict, xlabel: str, logy: bool = False) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    if logy:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------- subcommands

def cmd_curve_info(doc, args, out: Path) -> tuple[dict, bool]:
    from .curve_core import build_frame
    config, quad = _curve(doc)
    fr = build_frame(config, quad=quad)
    B = fr.RiemannB
    sym = float(np.abs(B - B.T).max())
    eig = float(np.linalg.eigvalsh(0.5 * (B.imag + B.imag.T)).min())
    rep = {"genus": fr.genus, "riemann_matrix": B.tolist(), "a_periods": fr.Aper.tolist(),
           "b_periods": fr.Bper.tolist(), "cond_a_periods": float(np.linalg.cond(fr.Aper)),
           "symmetry_defect": sym, "min_eig_imag_B": eig}
    return rep, sym < args.tol and eig > 0


def cmd_omega_eval(doc, args, out: Path) -> tuple[dict, bool]:
    from .curve_core import build_frame
    from .divisor_inversion import invert
    from .omega_diff import a_periods, b_periods, build_omega, find_zeros
    config, quad = _curve(doc)
    coords = _coords(doc, args)
    fr = build_frame(config, quad=quad)
    D = invert(fr, coords, seed=args.seed)
    om = build_omega(fr, D, coords)
    ap = a_periods(om)
    a_res = np.abs(ap + 4j * np.pi * om.coords_eff.c2v)
    b_res, offsets = b_periods(om)
    rep = {"divisor": D.q.tolist(), "sheets": D.sheets.tolist(), "alphas": om.alphas.tolist(),
           "zeros": find_zeros(om).tolist(), "a_period_residual": a_res.tolist(),
           "b_period_residual": np.abs(b_res).tolist(), "b_period_offsets": offsets.tolist(),
           "lattice_shift": [om.lattice_shift[0].tolist(), om.lattice_shift[1].tolist()]}
    finite = a_res[np.isfinite(a_res)]
    ok = (finite.size == 0 or finite.max() < args.tol) and float(np.abs(b_res).max()) < args.tol
    return rep, ok


def cmd_pvi_solve(doc, args, out: Path) -> tuple[dict, bool]:
    from .divisor_inversion import LatticeCoordinates
    from .painleve import PICARD, QUARTER_EIGEN, hitchin_case, pvi_residual, solve_grid
    xs = np.linspace(args.x_min, args.x_max, args.points)
    if args.hitchin:
        try:
            m, n, k = (int(t) for t in args.hitchin.split(","))
        except ValueError:
            raise ConfigError("field 'hitchin' must be 'm,n,k'") from None
        sample = hitchin_case(xs, m, n, k, seed=args.seed)
        coords = LatticeCoordinates.of(m / k, n / k)
    else:
        coords = _coords(doc, args)
        sample = solve_grid(xs, coords, seed=args.seed)
    rp = pvi_residual(sample, PICARD, "y0")
    rv = pvi_residual(sample, QUARTER_EIGEN, "y")
    gap = np.abs(sample.y_okamoto - sample.y)
    rows = [(x.real, a.real, a.imag, b.real, b.imag, p, q, g)
            for x, a, b, p, q, g in zip(sample.x, sample.y0, sample.y, rp, rv, gap)]
    write_csv(out / "pvi.csv", ["x", "re_y0", "im_y0", "re_y", "im_y", "residual_picard",
                                "residual_pvi", "okamoto_gap"], rows)
    if args.figures:
        _line_figure(out / "pvi.png", xs, {"Re y0": sample.y0.real, "Re y": sample.y.real,
                                           "Im y": sample.y.imag}, "x")
    rep = {"coords": {"c1": list(coords.c1), "c2": list(coords.c2)},
           "max_residual_picard": float(np.nanmax(rp)), "max_residual_pvi": float(np.nanmax(rv)),
           "max_okamoto_gap": float(np.nanmax(gap)), "excluded": [[x, why] for x, why in sample.excluded],
           "tags": sample.tags}
    ok = max(rep["max_residual_picard"], rep["max_residual_pvi"]) < args.tol
    return rep, ok


def cmd_schlesinger_verify(doc, args, out: Path) -> tuple[dict, bool]:
    from .divisor_inversion import LatticeCoordinates
    from .schlesinger import verify_schlesinger
    config, quad = _curve(doc, default=[0, 1, 2, 3, 4])
    if args.c1 is None and "lattice_coords" not in doc:
        coords = LatticeCoordinates.of([0.21, 0.13], [0.17, 0.29])
    else:
        coords = _coords(doc, args)
    res = verify_schlesinger(config, coords, threads=args.threads)
    pipe = res["pipeline"]
    eig = [np.sort_complex(np.linalg.eigvals(A)).tolist() for A in pipe.residues.matrices]
    pairs = {f"{j},{k}": v for (j, k), v in res["pairs"].items()}
    rep = {"pairs": pairs, "max_residual": res["max"], "step": res["step"],
           "sum_rules": res["sum_rules"], "eigenvalues": eig,
           "beta_sum": pipe.betas.total(), "divisor": pipe.divisor.q.tolist()}
    if args.figures:
        plt = _pyplot()
        n = len(config.points)
        grid = np.array([[res["pairs"][(j, k)] for k in range(n)] for j in range(n)])
        fig, ax = plt.subplots(figsize=(4, 4))
        im = ax.imshow(np.log10(grid + 1e-300))
        fig.colorbar(im, label="log10 residual")
        ax.set_xlabel("k (moved point)")
        ax.set_ylabel("j (matrix)")
        fig.tight_layout()
        fig.savefig(out / "schlesinger.png", dpi=120)
        plt.close(fig)
    return rep, res["max"] < args.tol


def cmd_tau(doc, args, out: Path) -> tuple[dict, bool]:
    from .tau import continuity_jumps, tau_consistency
    coords = _coords(doc, args)
    xs = _grid(args.x_grid, "x-grid")
    rep_t = tau_consistency(xs, coords)
    rows = [(x, t.real, t.imag, r) for x, t, r in zip(xs, rep_t["tau"], rep_t["residuals"])]
    write_csv(out / "tau.csv", ["x", "re_tau", "im_tau", "consistency_residual"], rows)
    if args.figures:
        _line_figure(out / "tau.png", xs, {"|tau|": np.abs(rep_t["tau"])}, "x")
    rep = {"max_residual": rep_t["max"], "min_abs_tau": rep_t["min_abs_tau"],
           "continuity_jumps": continuity_jumps(rep_t["tau"])}
    return rep, rep_t["max"] < args.tol and rep_t["min_abs_tau"] > 0


def _billiard_setup(doc):
    from .billiards import BilliardState, ConfocalFamily, GameSpec, start_state
    for key in ("axes", "betas", "signature"):
        if key not in doc:
            raise ConfigError(f"field '{key}' is missing")
    try:
        fam = ConfocalFamily(tuple(doc["axes"]))
        spec = GameSpec(tuple(doc["betas"]), tuple(doc["signature"]))
    except (TypeError, ValueError):
        raise ConfigError("fields 'axes', 'betas', 'signature' must be numeric lists") from None
    spec.validate(fam)
    st = doc.get("start", {})
    if not isinstance(st, dict):
        raise ConfigError("field 'start' must be an object")
    if "position" in st and "velocity" in st:
        start = BilliardState.at(fam, st["position"], st["velocity"])
    elif "jacobi" in st and "caustics" in doc:
        start = start_state(fam, spec, doc["caustics"], st["jacobi"])
    else:
        raise ConfigError("field 'start' needs position+velocity, or jacobi with top-level 'caustics'")
    return fam, spec, start


def cmd_billiard_run(doc, args, out: Path) -> tuple[dict, bool]:
    from .billiards import run_game
    fam, spec, start = _billiard_setup(doc)
    rounds = int(doc.get("rounds", 10))
    tr = run_game(fam, spec, start, rounds)
    d = fam.d
    header = (["bounce", "quadric"] + [f"x{i + 1}" for i in range(d)] + [f"lambda{i + 1}" for i in range(d)]
              + ["caustic_residual"])
    rows = [[b.index, b.quadric + 1, *b.position, *b.jacobi,
             float(np.abs(b.caustics - tr.caustics0).max())] for b in tr.bounces]
    write_csv(out / "trajectory.csv", header, rows)
    if args.figures:
        plt = _pyplot()
        pts = np.array([b.position for b in tr.bounces])
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.plot(pts[:, 0], pts[:, 1], "-o", ms=2)
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        fig.tight_layout()
        fig.savefig(out / "trajectory.png", dpi=120)
        plt.close(fig)
    rep = {"bounces": len(tr.bounces) - 1, "caustics": tr.caustics0.tolist(),
           "caustic_drift": tr.caustic_drift, "speed_defect": tr.speed_defect,
           "closure_gap": tr.closure_gap(len(tr.bounces) - 1)}
    return rep, tr.caustic_drift < args.tol


def cmd_poncelet_check(doc, args, out: Path) -> tuple[dict, bool]:
    from .billiards import caustics_of_line, periodicity_check, run_game
    fam, spec, start = _billiard_setup(doc)
    alphas = caustics_of_line(fam, start.position, start.velocity)
    v = periodicity_check(fam, spec, alphas, args.n, tol=args.tol)
    # n-torsion of the Abel sum closes the game within 2n rounds
    rounds = 2 * args.n
    tr = run_game(fam, spec, start, rounds)
    k = len(spec.betas)
    gaps = [tr.closure_gap(r * k) for r in range(1, rounds + 1)]
    closing = [r + 1 for r, g in enumerate(gaps) if g < CLOSURE_TOL]
    if args.figures:
        _line_figure(out / "closure.png", np.arange(1, rounds + 1), {"closure gap": np.maximum(gaps, 1e-17)},
                     "rounds", logy=True)
    rep = {"defect": v.defect, "verdict": v.periodic, "n": args.n, "caustics": alphas.tolist(),
           "closure_gap": gaps[-1], "closure_rounds": rounds, "closure_bounces": rounds * k,
           "first_closing_round": closing[0] if closing else None,
           "abel_c1": v.c1.tolist(), "abel_c2": v.c2.tolist(),
           "tolerances": {"torsion_defect": args.tol, "closure_gap": CLOSURE_TOL}}
    return rep, v.periodic == (gaps[-1] < CLOSURE_TOL)


COMMANDS: dict[str, tuple[Callable, float]] = {
    "curve-info": (cmd_curve_info, 1e-10),
    "omega-eval": (cmd_omega_eval, 1e-8),
    "pvi-solve": (cmd_pvi_solve, 1e-4),
    "schlesinger-verify": (cmd_schlesinger_verify, 1e-3),
    "tau": (cmd_tau, 1e-4),
    "billiard-run": (cmd_billiard_run, 1e-7),
    "poncelet-check": (cmd_poncelet_check, 1e-6),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isoschlesinger", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="mode", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON configuration file")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--tol", type=float, default=None, help="residual gate")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--figures", action="store_true", help="also write PNG figures (needs matplotlib)")
        s.add_argument("--c1", help="comma-separated complex entries of c1")
        s.add_argument("--c2", help="comma-separated complex entries of c2")
        if name == "pvi-solve":
            s.add_argument("--x-min", type=float, default=0.2)
            s.add_argument("--x-max", type=float, default=0.8)
            s.add_argument("--points", type=int, default=601)
            s.add_argument("--hitchin", help="m,n,k for c1 = m/k, c2 = n/k")
        if name == "tau":
            s.add_argument("--x-grid", default="0.3,0.7,401", help="min,max,points")
        if name == "poncelet-check":
            s.add_argument("--n", type=int, default=3)
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    func, default_tol = COMMANDS[args.mode]
    try:
        if args.tol is None:
            args.tol = default_tol
        if not args.tol > 0:
            raise ConfigError("field 'tol' must be positive")
        if args.threads < 1:
            raise ConfigError("field 'threads' must be at least 1")
        doc = _load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        effective = {k: v for k, v in vars(args).items() if k not in ("out", "config", "figures", "threads")}
        effective["config"] = doc
        rep, ok = func(doc, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ComputeError as exc:
        print(f"compute error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    tolerances = {"gate": args.tol, **rep.pop("tolerances", {})}
    report = {"mode": args.mode, "version": __version__, "config_hash": config_hash(effective),
              "seed": args.seed, "tolerances": tolerances, "passed": ok, "result": rep}
    text = to_json(report)
    (out / f"{args.mode}.json").write_text(text + "\n")
    print(text)
    return 0 if ok else GATE_FAILURE


def main() -> int:
    return run()
