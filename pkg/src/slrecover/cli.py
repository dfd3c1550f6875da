"""Command-line driver.

Subcommands: forward (solve spectra of a known problem), make-spectra
(forward plus seeded noise), reconstruct (conjugate-gradient recovery
from a target spectrum file), verify (bilinear-form certification).
Every run writes a manifest next to its outputs.  Exit codes: 0 success,
2 config error, 3 solver failure, 4 verification failure.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .objective import ProblemVector, eval_G
from .optimize import pr_cg_minimize
from .slcore import Potential, SolverFailure
from . import spectra
from . import verify as verification

__all__ = ["main", "ConfigError", "VerificationFailure"]


class ConfigError(Exception):
    pass


class VerificationFailure(Exception):
    pass


def _say(args, *message):
    if not args.quiet:
        print(*message)


def _require(doc, key, ctx):
    if key not in doc:
        raise ConfigError(f"missing required key '{key}' in {ctx}")
    return doc[key]


def _load_config(args):
    try:
        return spectra.load_json(args.config)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {args.config}") from None
    except ValueError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None


def _resolve(args, path):
    return os.path.join(os.path.dirname(os.path.abspath(args.config)), path)


def _potential_from_doc(doc, ctx, grid_override):
    if "q_values" in doc:
        q = Potential(np.asarray(doc["q_values"], dtype=np.float64))
        declared = int(doc.get("grid", q.grid_size))
        if declared != q.grid_size:
            raise ConfigError(f"{ctx}: grid does not match the number of q_values")
        if grid_override and grid_override != q.grid_size:
            raise ConfigError(f"{ctx}: --grid conflicts with explicit q_values")
        return q
    kind = doc.get("q_kind", "zero")
    grid = grid_override or int(doc.get("grid", 512))
    try:
        return spectra.potential_from_kind(kind, grid)
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from None


def _problem_from_doc(doc, ctx, grid_override):
    for key in ("h0", "h1", "h2"):
        _require(doc, key, ctx)
    q = _potential_from_doc(doc, ctx, grid_override)
    try:
        return ProblemVector(float(doc["h0"]), float(doc["h1"]), float(doc["h2"]), q)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{ctx}: {exc}") from None


def _index_set(doc, ctx):
    n_max = int(_require(doc, "n_max", ctx))
    ids = doc.get("spectra", [1, 2])
    if not ids or any(i not in (1, 2) for i in ids):
        raise ConfigError(f"{ctx}: 'spectra' must be a nonempty subset of [1, 2]")
    return spectra.default_index_set(n_max, tuple(ids))


def _write_manifest(args, command, inputs, outputs, seed, t0):
    doc = {
        "command": command,
        "config": os.path.abspath(args.config),
        "inputs": [os.path.abspath(p) for p in inputs],
        "outputs": [os.path.abspath(p) for p in outputs],
        "seed": seed,
        "version": __version__,
        "wall_time_s": time.time() - t0,
    }
    spectra.save_json(os.path.join(args.out, "manifest.json"), doc)


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_forward(args):
    t0 = time.time()
    doc = _load_config(args)
    pv = _problem_from_doc(_require(doc, "problem", "config"), "problem", args.grid)
    indices = _index_set(doc, "config")
    target = spectra.generate_target(pv, indices, weights=1.0)
    out = _out_path(args, "spectrum.json")
    spectra.save_json(out, spectra.target_to_doc(target))
    _say(args, f"{'i':>2} {'n':>3} {'lambda':>24}")
    for i, n, lam, _ in target.entries():
        _say(args, f"{i:>2} {n:>3} {lam:>24.16g}")
    if len(set(target.spectrum_ids)) == 2:
        report = spectra.check_interlacing(target)
        _say(args, f"interlacing: {'ok' if report.passed else 'VIOLATED'} ({report.ordering})")
    _write_manifest(args, "forward", [args.config], [out], None, t0)
    return 0


def cmd_make_spectra(args):
    t0 = time.time()
    doc = _load_config(args)
    pv = _problem_from_doc(_require(doc, "problem", "config"), "problem", args.grid)
    indices = _index_set(doc, "config")
    noise_doc = doc.get("noise", {})
    seed = args.seed if args.seed is not None else int(noise_doc.get("seed", 0))
    noise = spectra.NoiseSpec(float(noise_doc.get("r", 0.0)), seed)
    weights = float(doc.get("weights", 1.0))
    target = spectra.generate_target(pv, indices, weights=weights, noise=noise)
    out = _out_path(args, "target.json")
    spectra.save_json(out, spectra.target_to_doc(target, noise))
    _say(args, f"wrote {len(target)} entries (r={noise.magnitude}, seed={noise.seed})")
    _write_manifest(args, "make-spectra", [args.config], [out], seed, t0)
    return 0


def cmd_reconstruct(args):
    t0 = time.time()
    doc = _load_config(args)
    target_path = _resolve(args, _require(doc, "target", "config"))
    try:
        target, _noise = spectra.target_from_doc(spectra.load_json(target_path))
    except FileNotFoundError:
        raise ConfigError(f"target spectrum file not found: {target_path}") from None
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad target file: {exc}") from None
    pv0 = _problem_from_doc(_require(doc, "initial", "config"), "initial", args.grid)
    cfg = spectra.descent_config_from_doc(doc.get("descent", {}))
    reference = None
    if "reference" in doc:
        reference = _potential_from_doc(doc["reference"], "reference", pv0.q.grid_size)
        if reference.grid_size != pv0.q.grid_size:
            raise ConfigError("reference potential must match the initial grid")

    records = pr_cg_minimize(pv0, target, cfg, reference=reference)

    outputs = []
    hist_path = _out_path(args, "history.csv")
    spectra.atomic_write_text(hist_path, spectra.history_to_csv(records))
    outputs.append(hist_path)
    final = records[-1]
    final_doc = spectra.problem_to_doc(
        ProblemVector(final.h0, final.h1, final.h2, final.q_snapshot)
    )
    final_path = _out_path(args, "final.json")
    spectra.save_json(final_path, final_doc)
    outputs.append(final_path)
    for rec in records:
        if rec.q_snapshot is not None and rec is not final:
            snap_path = _out_path(args, f"q_snapshot_{rec.iter:06d}.json")
            spectra.save_json(
                snap_path,
                {"iter": rec.iter, "grid": rec.q_snapshot.grid_size,
                 "q_values": rec.q_snapshot.values},
            )
            outputs.append(snap_path)

    _say(args, f"iterations: {final.iter}, final G = {final.G:.6g}, "
               f"bc = ({final.h0:.4g}, {final.h1:.4g}, {final.h2:.4g})")
    if reference is not None:
        best = min(records, key=lambda r: r.delta2)
        _say(args, f"best delta2 = {best.delta2:.6g} at iteration {best.iter}")
    _write_manifest(args, "reconstruct", [args.config, target_path], outputs, None, t0)
    if final.event.startswith("solver-failure"):
        raise SolverFailure(final.event)
    return 0


def cmd_verify(args):
    t0 = time.time()
    doc = _load_config(args)
    pv = _problem_from_doc(_require(doc, "problem", "config"), "problem", args.grid)
    n_max = int(doc.get("n_max", 6))
    lemma_tol = float(doc.get("lemma_tol", 1e-3))
    bridge_tol = float(doc.get("bridge_tol", 1e-5))
    refine = int(doc.get("refine", verification.REFINE_DEFAULT))

    lemma = verification.lemma_biorthogonality(pv, n_max, tol=lemma_tol, refine=refine)
    bridges = [
        verification.gamma_tilde_bridge(pv, i, n, n_max=n_max, tol=bridge_tol, refine=refine)
        for i in (1, 2)
        for n in range(n_max + 1)
    ]
    indep = verification.independence_smoke(pv, min(n_max, 8))

    worst_bridge = max(bridges, key=lambda b: b.max_abs_diff)
    report = {
        "problem": spectra.problem_to_doc(pv),
        "lemma": lemma.to_doc(),
        "bridge": [b.to_doc() for b in bridges],
        "independence": indep.to_doc(),
    }
    out = _out_path(args, "report.json")
    spectra.save_json(out, report)
    _say(args, f"lemma: max deviation {lemma.max_deviation:.3e} at {lemma.worst} "
               f"(tol {lemma_tol:g}) -> {'ok' if lemma.passed else 'FAIL'}")
    _say(args, f"bridge: max |diff| {worst_bridge.max_abs_diff:.3e} at "
               f"probe ({worst_bridge.spectrum_id},{worst_bridge.index}) "
               f"(tol {bridge_tol:g}) -> {'ok' if worst_bridge.passed else 'FAIL'}")
    _say(args, f"independence: min Gram eigenvalue {indep.min_eigenvalue:.6e}")
    _write_manifest(args, "verify", [args.config], [out], None, t0)
    failures = []
    if not lemma.passed:
        failures.append(f"lemma deviation {lemma.max_deviation:.3e} at {lemma.worst}")
    if not worst_bridge.passed:
        failures.append(
            f"bridge difference {worst_bridge.max_abs_diff:.3e} at probe "
            f"({worst_bridge.spectrum_id},{worst_bridge.index})"
        )
    if indep.min_eigenvalue <= 0.0:
        failures.append(f"Gram matrix not positive definite ({indep.min_eigenvalue:.3e})")
    if failures:
        raise VerificationFailure("; ".join(failures))
    return 0


def _add_common(sub):
    sub.add_argument("--config", required=True, help="path to the JSON config")
    sub.add_argument("--out", default=".", help="output directory (default: cwd)")
    sub.add_argument("--seed", type=int, default=None, help="override the noise seed")
    sub.add_argument("--grid", type=int, default=None, help="override the grid size M")
    sub.add_argument("--quiet", action="store_true", help="suppress stdout chatter")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="slrecover",
        description="Recover Sturm-Liouville potentials and Robin boundary "
                    "parameters from two eigenvalue sequences.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("forward", cmd_forward),
        ("make-spectra", cmd_make_spectra),
        ("reconstruct", cmd_reconstruct),
        ("verify", cmd_verify),
    ):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
