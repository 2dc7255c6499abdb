"""Command-line interface.

Usage examples:
  dimerdefect band --grid 199 --out out/band
  dimerdefect heatmap --which pt-loss --window 0 2 -1.5 1.5 --res 200 200 --clip 1.5 --out out/hm
  dimerdefect design --mode single --targets 1.2-0.4i --validate 100 --out out/design
  dimerdefect design --mode double --targets 1.4-1i 1.0-0.9i --validate 100 --out out/design2
  dimerdefect design --mode n --targets 1-0.4i 1.1-0.5i 0.9-0.3i --sites 0@-1 0@0 0@1 --out out/design3
  dimerdefect temporal --omega-minus 1.2+0.3i --omega-plus 1.2-0.3i --spatiotemporal --out out/temporal

Every command writes a ``manifest.json`` listing its outputs with sha256
checksums; ``--check`` recomputes the outputs and compares them with an
existing manifest instead of writing.

Exit codes: 0 ok, 1 checksum mismatch, 2 usage, 3 mathematical refusal,
4 half-plane violation, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .capacitance import band_structure, make_context
from .core import (
    TOL,
    ConfigError,
    DefectSpec,
    DimerDefectError,
    MathematicalRefusal,
    NumericalFailure,
    complex_pair,
    load_config,
    parse_complex,
    problem_to_dict,
    reference_dimer,
)
from .defect import CHARACTERISTICS, heatmap
from .design import design_double, design_n, design_single
from .kernels import BACKEND
from .oracle import finite_spectrum, localization_report
from .temporal import WrongHalfPlane, design_spatiotemporal, design_temporal

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_REFUSAL, EXIT_HALF_PLANE, EXIT_NUMERICAL = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


@dataclasses.dataclass
class RunManifest:
    command: str
    config: str | None
    parameters: dict
    output_dir: str
    versions: dict
    wall_clock_seconds: float
    tolerances: dict
    files: dict = dataclasses.field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


def _versions() -> dict:
    return {
        "dimerdefect": __version__,
        "kernels": BACKEND,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


# --- serialisation helpers ---------------------------------------------------------

def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue().encode("utf-8")


def _pairs(values) -> list:
    return [complex_pair(v) for v in values]


# --- commands: each returns {filename: bytes} ----------------------------------------

def _problem(args):
    return load_config(args.config) if args.config else reference_dimer()


def _context(args, problem):
    return make_context(problem, args.bz_grid, args.quadrature)


def cmd_band(args) -> dict:
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    p = _problem(args)
    bs = band_structure(args.grid, p.geometry, p.lattice, p.material)
    return {"band.csv": _csv_bytes(bs.header(), bs.to_rows())}


def cmd_heatmap(args) -> dict:
    re0, re1, im0, im1 = args.window
    if not (re1 > re0 and im1 > im0):
        raise UsageError("--window must have positive area (re_min re_max im_min im_max)")
    if min(args.res) < 1:
        raise UsageError("--res must be positive")
    if args.clip <= 0:
        raise UsageError("--clip must be positive")
    p = _problem(args)
    ctx = _context(args, p)
    V_def = None
    if args.which == "single":
        if len(args.vdef) != 1:
            raise UsageError("--which single needs one --vdef value")
        V_def = parse_complex(args.vdef[0])
    elif args.which == "double":
        if len(args.vdef) != 2:
            raise UsageError("--which double needs two --vdef values")
        V_def = tuple(parse_complex(v) for v in args.vdef)
    hm = heatmap(args.which, ctx, tuple(args.window), tuple(args.res), args.clip, V_def)
    header = ["im\\re"] + [repr(float(x)) for x in hm.re]
    rows = [[float(y)] + [float(v) for v in row] for y, row in zip(hm.im, hm.values)]
    meta = {
        "characteristic": args.which,
        "window": list(args.window),
        "resolution": list(args.res),
        "clip": args.clip,
        "V_def": None if V_def is None else _pairs(np.atleast_1d(V_def)),
        "grid_size": ctx.grid_size,
        "quadrature": ctx.rule,
        "on_band_pixels": [[int(i), int(j)] for i, j in zip(*np.nonzero(hm.on_band))],
        "band_overlay": _pairs(hm.band_overlay.ravel()),
    }
    return {"heatmap.csv": _csv_bytes(header, rows), "heatmap_meta.json": _json_bytes(meta)}


def _parse_sites(items) -> list[tuple[int, int]]:
    # 'resonator@cell' keeps negative cells away from argparse's option syntax
    sites = []
    for s in items:
        try:
            if "@" in s:
                res, cell = s.split("@")
            else:
                cell, res = s.split(",")
            sites.append((int(cell), int(res)))
        except ValueError as exc:
            raise UsageError(f"site {s!r} must look like 'resonator@cell' or 'cell,resonator'") from exc
    return sites


def _oracle(problem, defects, targets, num_cells) -> dict:
    spec = finite_spectrum(num_cells, problem, defects, targets=targets)
    matched = []
    for w in targets:
        k = spec.nearest_defect(w)
        om = complex(np.sqrt(spec.eigenvalues[k]))
        rep = localization_report(spec, omega=w)
        matched.append({
            "target": complex_pair(w),
            "omega": complex_pair(om),
            "relative_error": abs(om - w) / abs(w),
            "localization_fraction_10_cells": rep.fraction_within(10),
            "participation_ratio": rep.participation_ratio,
        })
    return {
        "num_cells": num_cells,
        "defect_eigenvalue_count": int(spec.defect_indices.size),
        "matched": matched,
    }


def cmd_design(args) -> dict:
    p = _problem(args)
    targets = [parse_complex(t) for t in args.targets]
    ctx = _context(args, p)
    report: dict = {"mode": args.mode, "targets": _pairs(targets)}
    if args.mode == "single":
        if len(targets) != 1:
            raise UsageError("--mode single takes exactly one target")
        d = design_single(targets[0], ctx)
        defects = {(0, 0): d.V1_def}
        report.update(V_def=[complex_pair(d.V1_def)], J=complex_pair(d.J), residuals=[d.residual],
                      sites=[[0, 0]])
    elif args.mode == "double":
        if len(targets) != 2:
            raise UsageError("--mode double takes exactly two targets")
        d = design_double(targets[0], targets[1], ctx)
        defects = {(0, 0): d.V_def[0], (0, 1): d.V_def[1]}
        report.update(
            V_def=_pairs(d.V_def), residuals=list(d.residuals), sites=[[0, 0], [0, 1]],
            quadratic=_pairs(d.coefficients), primary=d.primary,
            roots=[{"X1": complex_pair(r.X1), "V_def": _pairs(r.V_def), "residuals": list(r.residuals)}
                   for r in d.roots],
        )
    else:
        if not args.sites:
            raise UsageError("--mode n needs --sites, one 'resonator@cell' per target")
        sites = _parse_sites(args.sites)
        seed = [parse_complex(s) for s in args.seed] if args.seed else None
        d = design_n(targets, sites, ctx, seed=seed)
        defects = dict(zip(d.sites, d.V_def))
        report.update(V_def=_pairs(d.V_def), residuals=list(d.residuals), sites=[list(s) for s in d.sites],
                      iterations=d.iterations)
    if args.validate:
        report["oracle"] = _oracle(p, DefectSpec(defects), targets, args.validate)
    report["config"] = problem_to_dict(p)
    return {"design.json": _json_bytes(report)}


def cmd_temporal(args) -> dict:
    p = _problem(args)
    wm, wp = parse_complex(args.omega_minus), parse_complex(args.omega_plus)
    ctx = _context(args, p)
    if args.spatiotemporal:
        q, td = design_spatiotemporal(wm, wp, ctx, validate_cells=args.validate or None)
        localization = {"temporal": q.temporal_localized, "spatial": q.spatial_localized,
                        "mass_within_10_cells": q.mass_within}
    else:
        td = design_temporal(wm, wp, ctx)
        localization = {"temporal": wm.imag > 0 > wp.imag, "spatial": None}
    sw = td.switch
    report = {
        "omega_minus": complex_pair(wm),
        "omega_plus": complex_pair(wp),
        "b": complex_pair(sw.b),
        "pre_material": {"V": _pairs(sw.pre.V), "V_def": _pairs(sw.pre_defects.entries.values())},
        "post_material": {"V": _pairs(sw.post.V), "V_def": _pairs(sw.post_defects.entries.values())},
        "defect_site": [0, 0],
        "residual_pre": td.residual_pre,
        "residual_post": td.residual_post,
        "localization": localization,
    }
    return {"temporal.json": _json_bytes(report)}


COMMANDS = {"band": cmd_band, "heatmap": cmd_heatmap, "design": cmd_design, "temporal": cmd_temporal}


# --- driver --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dimerdefect", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, quadrature=True):
        sp.add_argument("--config", help="problem JSON; default: the symmetric reference dimer")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--check", action="store_true", help="verify outputs against an existing manifest")
        if quadrature:
            sp.add_argument("--bz-grid", type=int, default=199, help="Brillouin-zone quadrature nodes")
            sp.add_argument("--quadrature", choices=("graded", "uniform"), default="graded")

    sp = sub.add_parser("band", help="band structure CSV")
    common(sp, quadrature=False)
    sp.add_argument("--grid", type=int, default=199)

    sp = sub.add_parser("heatmap", help="|characteristic| over a complex window")
    common(sp)
    sp.add_argument("--which", choices=CHARACTERISTICS, required=True)
    sp.add_argument("--window", type=float, nargs=4, required=True,
                    metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
    sp.add_argument("--res", type=int, nargs=2, default=(100, 100), metavar=("NX", "NY"))
    sp.add_argument("--clip", type=float, required=True)
    sp.add_argument("--vdef", nargs="*", default=[], help="defect values for single/double")

    sp = sub.add_parser("design", help="defect parameters for target frequencies")
    common(sp)
    sp.add_argument("--targets", nargs="+", required=True, help="complex targets such as 1.2-0.4i")
    sp.add_argument("--mode", choices=("single", "double", "n"), default="single")
    sp.add_argument("--sites", nargs="*", help="defect sites for --mode n, e.g. 0@-1 0@0 0@1 (resonator@cell)")
    sp.add_argument("--seed", nargs="*", help="initial V_def per site for --mode n")
    sp.add_argument("--validate", type=int, default=0, metavar="N_CELLS",
                    help="check against a truncated chain of this many cells")

    sp = sub.add_parser("temporal", help="instant material switch design")
    common(sp)
    sp.add_argument("--omega-minus", required=True)
    sp.add_argument("--omega-plus", required=True)
    sp.add_argument("--spatiotemporal", action="store_true",
                    help="require Im(omega-) > 0 > Im(omega+) and check spatial localization")
    sp.add_argument("--validate", type=int, default=100, metavar="N_CELLS")
    return ap


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _check(outdir: Path, outputs: dict) -> int:
    manifest_path = outdir / "manifest.json"
    if not manifest_path.exists():
        print(f"error: no manifest in {outdir}", file=sys.stderr)
        return EXIT_USAGE
    recorded = json.loads(manifest_path.read_text(encoding="utf-8"))["files"]
    status = EXIT_OK
    for name in sorted(set(recorded) | set(outputs)):
        new = _sha256(outputs[name]) if name in outputs else None
        on_disk = (outdir / name).read_bytes() if (outdir / name).exists() else None
        ok = new is not None and recorded.get(name) == new and on_disk is not None and _sha256(on_disk) == new
        print(f"{'ok ' if ok else 'BAD'} {name}")
        if not ok:
            status = EXIT_MISMATCH
    return status


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    try:
        outputs = COMMANDS[args.command](args)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WrongHalfPlane as exc:
        print(f"half-plane violation: {exc}", file=sys.stderr)
        return EXIT_HALF_PLANE
    except MathematicalRefusal as exc:
        print(f"refused: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except (NumericalFailure, DimerDefectError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    outdir = Path(args.out)
    if args.check:
        return _check(outdir, outputs)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, data in outputs.items():
        (outdir / name).write_bytes(data)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out", "check")}
    manifest = RunManifest(
        command=args.command,
        config=args.config,
        parameters=json.loads(json.dumps(params, default=list)),
        output_dir=str(outdir),
        versions=_versions(),
        wall_clock_seconds=round(time.perf_counter() - t0, 3),
        tolerances=dataclasses.asdict(TOL),
        files={name: _sha256(data) for name, data in sorted(outputs.items())},
    )
    (outdir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    for name in sorted(outputs):
        print(outdir / name)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
