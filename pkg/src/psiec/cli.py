"""Command-line front end.

Every subcommand prints a short report, optionally writes a JSON summary
(``--summary``) and exits with 0 on success, 1 when a check fails or an
output cannot be written, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import struct
import sys
import time
from pathlib import Path

import numpy as np

from . import _jit
from . import applications as apps
from . import exterior_ft as eft
from . import form_wavelets as fw
from . import frame_transforms as ft
from .fields import Grid, SampledFormField, monomials, pairing_freq, pairing_space
from .scalar_polarlets import ScalarAtomIndex
from .windows import (admissibility_2d, admissibility_3d, calderon_check, load_window_config,
                      shipped_config)

RAW_MAGIC = b"PSEC"
RAW_VERSION = 1
# magic, version, dim, degree, grid dims (3 x u32, unused = 0), extent, component count
RAW_HEADER = struct.Struct("<4sHBB3IdI")
assert RAW_HEADER.size == 32

log = logging.getLogger("psiec")


class ValidationFailure(Exception):
    """A check ran to completion and failed (exit code 1)."""


# ---------------------------------------------------------------------------
# Field files

def emit_field_file(field: SampledFormField, path, fmt: str = "csv"):
    path = Path(path)
    if not path.parent.exists():
        raise OSError(f"directory {path.parent} does not exist")
    if fmt == "csv":
        _write_csv(field, path)
    elif fmt == "raw":
        _write_raw(field, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _write_csv(field: SampledFormField, path: Path):
    g = field.grid
    coords = [c.ravel() for c in g.mesh()]
    comps = [field.components[m].ravel() for m in monomials(g.dim, field.degree)]
    header = [f"x{i + 1}" for i in range(g.dim)] + field.labels()
    table = np.column_stack(coords + comps)
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def _write_raw(field: SampledFormField, path: Path):
    g = field.grid
    dims = list(g.shape) + [0] * (3 - g.dim)
    comps = monomials(g.dim, field.degree)
    with open(path, "wb") as fh:
        fh.write(RAW_HEADER.pack(RAW_MAGIC, RAW_VERSION, g.dim, field.degree, *dims, g.extent, len(comps)))
        for m in comps:
            fh.write(np.ascontiguousarray(field.components[m], dtype="<f8").tobytes())


def read_field_file(path) -> SampledFormField:
    """Read a raw field file written by :func:`emit_field_file`."""
    with open(path, "rb") as fh:
        head = fh.read(RAW_HEADER.size)
        if len(head) != RAW_HEADER.size:
            raise ValueError("truncated header")
        magic, version, dim, degree, n1, n2, n3, extent, count = RAW_HEADER.unpack(head)
        if magic != RAW_MAGIC:
            raise ValueError("not a PSEC field file")
        if version != RAW_VERSION:
            raise ValueError(f"unsupported version {version}")
        shape = (n1, n2, n3)[:dim]
        if len(set(shape)) != 1:
            raise ValueError("only cubic grids are supported")
        grid = Grid(dim, shape[0], extent)
        comps = {}
        size = int(np.prod(shape))
        for m in monomials(dim, degree):
            data = np.frombuffer(fh.read(8 * size), dtype="<f8")
            if data.size != size:
                raise ValueError("truncated data block")
            comps[m] = data.reshape(shape).copy()
        if len(comps) != count:
            raise ValueError("component count does not match the degree")
    return SampledFormField(grid, degree, comps)


# ---------------------------------------------------------------------------
# Helpers

def _windows(name_or_path):
    p = Path(name_or_path)
    if not p.exists():
        try:
            p = shipped_config(str(name_or_path))
        except FileNotFoundError:
            raise ValueError(f"configuration {name_or_path!r} not found (path or shipped name)") from None
    return load_window_config(p)


def _power_of_two(text):
    n = int(text)
    if n < 2 or n & (n - 1):
        raise argparse.ArgumentTypeError(f"{n} is not a power of two")
    return n


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _write_summary(args, payload: dict):
    payload = {"command": args.command, **payload}
    if getattr(args, "summary", None):
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _atom_from_args(args) -> fw.FormAtomIndex:
    k = tuple(args.k) if args.k else (0,) * args.dim
    if len(k) != args.dim:
        raise ValueError(f"--k needs {args.dim} integers")
    s = ScalarAtomIndex(args.dim, args.level, k, args.t)
    return fw.FormAtomIndex(s, args.degree, args.type, args.family)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_check_admissibility(args) -> int:
    w = _windows(args.config)
    calderon = calderon_check(w.radial, args.levels)
    r2 = admissibility_2d(w.angular2d)
    r3 = admissibility_3d(w.angular3d)
    ok = calderon < 1e-10 and bool(r2) and bool(r3)
    print(f"radial partition residual (J={args.levels}): {calderon:.3e}")
    print(f"planar windows:    {r2.summary()}")
    print(f"spherical windows: {r3.summary()}")
    print("admissible" if ok else "NOT admissible")
    _write_summary(args, {"config": str(args.config), "calderon": calderon, "planar": r2.summary(),
                          "spherical": r3.summary(), "config_hash": ft.config_hash(w), "passed": ok})
    if not ok:
        raise ValidationFailure("window configuration is not admissible")
    return 0


def cmd_tables(args) -> int:
    print(eft.table_listing(args.dim))
    print()
    print(fw.table_listing(args.dim))
    return 0


def cmd_emit_wavelet(args) -> int:
    w = _windows(args.config)
    idx = _atom_from_args(args)
    grid = Grid(args.dim, args.grid, args.extent)
    pts = grid.points().reshape(-1, args.dim)
    vals = fw.eval_space_form(idx, w, pts)
    comps = {J: v.reshape(grid.shape) for J, v in vals.items()}
    field = SampledFormField(grid, args.degree, comps)
    emit_field_file(field, args.out, args.format)
    print(f"wrote {args.out}: {idx.key} level {args.level}, {grid.size}^{grid.dim} samples")
    _write_summary(args, {"atom": idx.to_dict(), "grid": args.grid, "extent": args.extent,
                          "out": str(args.out), "config_hash": ft.config_hash(w)})
    return 0


def cmd_frame_roundtrip(args) -> int:
    w = _windows(args.config)
    grid = Grid(args.dim, args.grid, args.extent)
    frame = ft.FormFrame(grid, w, args.levels, args.degree)
    rng = np.random.default_rng(args.seed)
    cutoff = 2.0 ** (args.levels - 2) * math.pi
    nus = [args.type] if args.type else sorted({nu for nu, _ in frame.types})
    rows = []
    ok = True
    for nu in nus:
        if nu not in {n for n, _ in frame.types}:
            raise ValueError(f"no {nu} atoms of degree {args.degree} in R^{args.dim}")
        field = SampledFormField.from_spectrum(grid, args.degree, ft.random_form_spectrum(frame, nu, cutoff, rng), 1e-8)
        coeffs = frame.analyze(field, [t for t in frame.types if t[0] == nu])
        rec = frame.synthesize(coeffs)
        err = (rec - field).norm() / field.norm()
        wp = 2 if nu == "delta" else 0
        energy = pairing_freq(field, field, wp).real
        parseval = abs(coeffs.energy(nu) - energy) / energy
        planch = abs(pairing_space(field, field) - pairing_freq(field, field)) / field.norm() ** 2
        good = err < 1e-5 and parseval < 1e-5 and planch < 1e-6
        ok &= good
        rows.append({"type": nu, "rel_error": err, "parseval": parseval, "plancherel": planch,
                     "leakage": coeffs.leakage, "coefficients": len(coeffs), "passed": good})
        print(f"{nu:>5}: reconstruction {err:.2e}  parseval {parseval:.2e}  plancherel {planch:.2e}  "
              f"leakage {coeffs.leakage:.1e}  {'ok' if good else 'FAIL'}")
        if args.coeffs:
            coeffs.to_csv(args.coeffs)
    _write_summary(args, {"dim": args.dim, "degree": args.degree, "levels": args.levels, "seed": args.seed,
                          "grid": args.grid, "extent": args.extent, "results": rows,
                          "config_hash": ft.config_hash(w)})
    if not ok:
        raise ValidationFailure("round-trip tolerance exceeded")
    return 0


def cmd_laplacian_table(args) -> int:
    w = _windows(args.config)
    key = (args.degree, args.type, args.family)
    if key not in fw.atom_types(args.dim):
        raise ValueError(f"{key} is not an atom type in R^{args.dim}")
    sym = fw.laplace_symbol(key, args.dim)
    weighted = fw.laplacian_atom(fw.FormAtomIndex(ScalarAtomIndex(args.dim, 0, (0,) * args.dim, 1), *key))
    print(f"Laplace-de Rham image of {key}: {sym}  (= {weighted.sign:+g} |xi|^2 times the atom)")
    atoms = []
    for j in range(-1, args.levels):
        T = 1 if j < 0 else w.angular(args.dim).orientations
        for t in range(1, T + 1):
            atoms.append(fw.FormAtomIndex(ScalarAtomIndex(args.dim, j, (0,) * args.dim, t), *key))
    D = fw.galerkin_laplacian(atoms, atoms, w)
    out = sys.stdout if not args.out else open(args.out, "w", encoding="utf-8")
    try:
        out.write("row_j,row_t,col_j,col_t,value\n")
        for i, q in enumerate(atoms):
            for k, p in enumerate(atoms):
                out.write(f"{q.scalar.level},{q.scalar.t},{p.scalar.level},{p.scalar.t},{D[i, k]:.17g}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    far = [(i, k) for i in range(len(atoms)) for k in range(len(atoms))
           if abs(atoms[i].scalar.level - atoms[k].scalar.level) > 1]
    zeros_ok = all(D[i, k] == 0.0 for i, k in far)
    _write_summary(args, {"type": list(key), "symbol": str(sym), "symbol_factor": weighted.sign, "atoms": len(atoms),
                          "separated_pairs": len(far), "separated_exact_zero": zeros_ok})
    if not zeros_ok:
        raise ValidationFailure("level-separated entries are not exactly zero")
    return 0


def cmd_stokes_demo(args) -> int:
    w = _windows(args.config)
    vortex = apps.GaussianVortex(tuple(args.center), args.sigma, 1.0)
    grid = Grid(2, args.grid, args.extent)
    levels = list(range(2, args.levels + 1))
    rows = apps.circulation_study(vortex, args.radius, levels, w, grid)
    for r in rows:
        print(f"J={r.levels}: circulation {r.boundary:+.12f}  exact {r.circulation:+.12f}  "
              f"residual {r.residual:.3e}  stokes gap {r.stokes_gap:.1e}")
    if args.out:
        apps.write_rows(rows, args.out)
    res = [r.residual for r in rows]
    decreasing = all(b < a for a, b in zip(res, res[1:]))
    _write_summary(args, {"sigma": args.sigma, "radius": args.radius, "center": args.center,
                          "grid": args.grid, "extent": args.extent,
                          "rows": [r.__dict__ for r in rows], "strictly_decreasing": decreasing,
                          "config_hash": ft.config_hash(w)})
    return 0


def cmd_fiber_demo(args) -> int:
    w = _windows(args.config)
    s = ScalarAtomIndex(3, args.level, tuple(args.k) if args.k else (0, 0, 0), args.t)
    idx = fw.FormAtomIndex(s, 2, "delta", 1)
    fib = ft.fiber_integrate(idx, w)
    grid = Grid(3, args.grid, args.extent)
    vals = fw.eval_space_form(idx, w, grid.points().reshape(-1, 3))
    g2 = Grid(2, args.grid, args.extent)
    ref = fib.evaluate(w, g2.points().reshape(-1, 2))
    num = den = 0.0
    for J, v in vals.items():
        if J[-1] != 2:
            continue
        summed = v.reshape(grid.shape).sum(axis=2) * grid.spacing
        r = ref[J[:-1]].reshape(g2.shape)
        num += float(np.sum((summed - r) ** 2))
        den += float(np.sum(r ** 2))
    err = math.sqrt(num / den)
    for p, win in fib.parts:
        beta = {int(m): complex(b) for m, b in zip(win.harmonics, win.beta)}
        print(f"restricted atom {p.key}, scale {fib.scale:.6f}, beta = "
              + ", ".join(f"{m}: {b.real:+.6f}{b.imag:+.6f}j" for m, b in beta.items()))
    print(f"grid integration vs closed form: relative error {err:.3e}")
    _write_summary(args, {"atom": idx.to_dict(), "rel_error": err, "grid": args.grid, "extent": args.extent,
                          "passed": err < 1e-3})
    if err >= 1e-3:
        raise ValidationFailure("fiber integral disagrees with the planar closed form")
    return 0


def cmd_cavity(args) -> int:
    w = _windows(args.config)
    results = []
    for J in args.levels:
        t0 = time.perf_counter()
        res = apps.cavity_solve(apps.CavityProblem(levels=J, count=args.count, penalty=args.penalty), w)
        results.append((J, res, time.perf_counter() - t0))
        print(f"J={J}: " + " ".join(f"{v:.6f}" for v in res.eigenvalues)
              + f"  (atoms {len(res.atoms)}, rank {res.basis_rank}, residual {res.residual:.1e})")
        print("      leakage " + " ".join(f"{v:.3f}" for v in res.leakage))
    ref = results[0][1].reference
    print("reference " + " ".join(f"{v:.6f}" for v in ref))
    errs = [np.abs(r.eigenvalues - r.reference) for _, r, _ in results]
    toward = all(bool(np.all(b < a)) for a, b in zip(errs, errs[1:]))
    _write_summary(args, {"levels": args.levels, "penalty": args.penalty, "reference": ref,
                          "runs": [{"levels": J, "eigenvalues": r.eigenvalues, "leakage": r.leakage,
                                    "residual": r.residual, "atoms": len(r.atoms), "seconds": dt,
                                    "zero_fraction": r.zero_fraction,
                                    "predicted_zero_fraction": r.predicted_zero_fraction}
                                   for J, r, dt in results],
                          "moves_toward_reference": toward, "config_hash": ft.config_hash(w)})
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psiec", description="Polar differential-form wavelets")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", metavar="command")

    def common(sp, grid=128, extent=16.0, config="isotropic"):
        sp.add_argument("--config", default=config, help="window config (path or shipped name)")
        sp.add_argument("--grid", type=_power_of_two, default=grid, help="samples per axis (power of two)")
        sp.add_argument("--extent", type=_positive, default=extent, help="physical box length")
        sp.add_argument("--summary", help="write a JSON run summary here")

    def atom(sp, dim=2):
        sp.add_argument("--dim", type=int, choices=(2, 3), default=dim)
        sp.add_argument("--degree", type=int, default=1)
        sp.add_argument("--type", choices=fw.NU, default="delta")
        sp.add_argument("--family", type=int, default=1)
        sp.add_argument("--level", type=int, default=2)
        sp.add_argument("--k", type=int, nargs="+")
        sp.add_argument("--t", type=int, default=1)

    sp = sub.add_parser("check-admissibility", help="radial partition and direction-window checks")
    sp.add_argument("--config", default="isotropic")
    sp.add_argument("--levels", type=int, default=6)
    sp.add_argument("--summary")
    sp.set_defaults(func=cmd_check_admissibility)

    sp = sub.add_parser("tables", help="print the transform table and the wavelet descriptors")
    sp.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sp.set_defaults(func=cmd_tables)

    sp = sub.add_parser("emit-wavelet", help="sample one atom on a grid")
    common(sp, grid=256)
    atom(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=("csv", "raw"), default="csv")
    sp.set_defaults(func=cmd_emit_wavelet)

    sp = sub.add_parser("frame-roundtrip", help="analyze and resynthesize a random band-limited form")
    common(sp)
    sp.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sp.add_argument("--degree", type=int, default=1)
    sp.add_argument("--type", choices=fw.NU)
    sp.add_argument("--levels", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--coeffs", help="write coefficients as CSV")
    sp.set_defaults(func=cmd_frame_roundtrip)

    sp = sub.add_parser("laplacian-table", help="Galerkin matrix of the Laplace-de Rham operator")
    sp.add_argument("--config", default="isotropic")
    sp.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sp.add_argument("--degree", type=int, default=1)
    sp.add_argument("--type", choices=fw.NU, default="delta")
    sp.add_argument("--family", type=int, default=1)
    sp.add_argument("--levels", type=int, default=3)
    sp.add_argument("--out")
    sp.add_argument("--summary")
    sp.set_defaults(func=cmd_laplacian_table)

    sp = sub.add_parser("stokes-demo", help="Kelvin circulation of a Gaussian vortex on a disc")
    common(sp, grid=512, extent=16.0)
    sp.add_argument("--sigma", type=_positive, default=0.1)
    sp.add_argument("--radius", type=_positive, default=1.0)
    sp.add_argument("--center", type=float, nargs=2, default=(0.3, -0.2))
    sp.add_argument("--levels", type=int, default=6)
    sp.add_argument("--out", help="CSV table of residuals per level")
    sp.set_defaults(func=cmd_stokes_demo)

    sp = sub.add_parser("fiber-demo", help="integrate a 3D co-exact 2-form atom along x3")
    common(sp, grid=128, extent=32.0)
    sp.add_argument("--level", type=int, default=1)
    sp.add_argument("--k", type=int, nargs=3)
    sp.add_argument("--t", type=int, default=1)
    sp.set_defaults(func=cmd_fiber_demo)

    sp = sub.add_parser("cavity", help="eigenvalues of the square cavity")
    sp.add_argument("--config", default="isotropic")
    sp.add_argument("--levels", type=int, nargs="+", default=[1, 2])
    sp.add_argument("--count", type=int, default=6)
    sp.add_argument("--penalty", type=_positive, default=1e6)
    sp.add_argument("--summary")
    sp.set_defaults(func=cmd_cavity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    _jit.apply_thread_cap()
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
