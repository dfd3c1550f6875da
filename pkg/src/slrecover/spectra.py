"""Synthetic spectra, noise, validation and (de)serialization.

Target spectra are generated by forward-solving a known problem over a
finite index set and optionally perturbing each eigenvalue by bounded
uniform noise from a SplitMix64 stream, so every noisy experiment is
reproducible from its seed.  JSON documents carry problems, spectra and
configs; CSV carries iterate histories.  All decimals are written with
17 significant digits, which round-trips IEEE doubles exactly.
"""

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .objective import ProblemVector, SpectralTarget
from .optimize import DescentConfig, IterateRecord, LineSearchConfig
from .slcore import Potential, solve_eigenvalues_batch, trapezoid

__all__ = [
    "NoiseSpec",
    "SplitMix64",
    "benchmark_step_ramp",
    "smooth_default",
    "potential_from_kind",
    "default_index_set",
    "generate_target",
    "InterlacingReport",
    "check_interlacing",
    "asymptotic_remainders",
    "format_float",
    "dumps_json",
    "atomic_write_text",
    "save_json",
    "load_json",
    "problem_to_doc",
    "problem_from_doc",
    "target_to_doc",
    "target_from_doc",
    "descent_config_to_doc",
    "descent_config_from_doc",
    "history_to_csv",
    "history_from_csv",
]


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded uniform noise: each eigenvalue moves by at most magnitude."""

    magnitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.magnitude) and self.magnitude >= 0.0):
            raise ValueError("noise magnitude must be a nonnegative real")


_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 by its published constants; identical streams everywhere."""

    GAMMA = 0x9E3779B97F4A7C15
    MIX1 = 0xBF58476D1CE4E5B9
    MIX2 = 0x94D049BB133111EB

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + self.GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * self.MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * self.MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_symmetric(self, r: float) -> float:
        """Uniform double in [-r, r]."""
        return (2.0 * self.next_unit() - 1.0) * r


# ---------------------------------------------------------------------------
# stock potentials


def benchmark_step_ramp(grid_size: int) -> Potential:
    """Triangular ramp on (0.1, 0.5] plus steps of height 4 and 2 near x = 1."""
    x = np.arange(grid_size + 1) / grid_size
    q = np.zeros(grid_size + 1)
    q = np.where((x > 0.1) & (x <= 0.3), 7.0 * x - 0.7, q)
    q = np.where((x > 0.3) & (x <= 0.5), 3.5 - 7.0 * x, q)
    q = np.where((x > 0.7) & (x <= 0.9), 4.0, q)
    q = np.where(x > 0.9, 2.0, q)
    return Potential(q)


def smooth_default(grid_size: int) -> Potential:
    """Smooth test potential 2 + sin(2 pi x) + sin(4 pi x)/2."""
    x = np.arange(grid_size + 1) / grid_size
    return Potential(2.0 + np.sin(2.0 * np.pi * x) + 0.5 * np.sin(4.0 * np.pi * x))


_KINDS = {
    "bench_step_ramp": benchmark_step_ramp,
    "smooth_default": smooth_default,
    "zero": Potential.zero,
}


def potential_from_kind(kind: str, grid_size: int) -> Potential:
    try:
        factory = _KINDS[kind]
    except KeyError:
        raise ValueError(
            f"unknown potential kind {kind!r}; expected one of {sorted(_KINDS)}"
        ) from None
    return factory(grid_size)


# ---------------------------------------------------------------------------
# target generation and validation


def default_index_set(n_max: int, spectra=(1, 2)):
    """The index set {spectra} x {0..n_max} as (i, n) pairs."""
    return [(i, n) for i in spectra for n in range(n_max + 1)]


def generate_target(
    pv: ProblemVector, indices, weights=1.0, noise: NoiseSpec = NoiseSpec()
) -> SpectralTarget:
    """Forward-solve both spectra over the index set and add seeded noise.

    Noise draws are consumed in the canonical (spectrum, index) order, one
    per entry, uniform in [-magnitude, magnitude].  With magnitude zero the
    returned eigenvalues are the exact forward values.
    """
    pairs = sorted(set((int(i), int(n)) for i, n in indices))
    if not pairs:
        raise ValueError("index set must be nonempty")
    ids = np.array([p[0] for p in pairs], dtype=np.int64)
    ns = np.array([p[1] for p in pairs], dtype=np.int64)
    h_right = np.where(ids == 1, pv.h1, pv.h2)
    lams = solve_eigenvalues_batch(pv.q, pv.h0, h_right, ns)
    if noise.magnitude > 0.0:
        rng = SplitMix64(noise.seed)
        lams = lams + np.array(
            [rng.next_symmetric(noise.magnitude) for _ in pairs]
        )
    w = np.broadcast_to(np.asarray(weights, dtype=np.float64), lams.shape).copy()
    return SpectralTarget(ids, ns, lams, w)


@dataclass(frozen=True)
class InterlacingReport:
    passed: bool
    ordering: str                  # "1<2" or "2<1"
    first_violation: tuple | None  # (n, lam_low, lam_mid, lam_high_next)

    def to_doc(self):
        return {
            "passed": self.passed,
            "ordering": self.ordering,
            "first_violation": list(self.first_violation)
            if self.first_violation
            else None,
        }


def check_interlacing(target: SpectralTarget) -> InterlacingReport:
    """Verify strict alternation of the two eigenvalue sequences.

    Requires both spectra on one common contiguous index range; accepts
    either ordering (sequence 1 below 2 or the mirror image) and reports
    the first violated triple otherwise.
    """
    is1 = target.spectrum_ids == 1
    n1 = target.indices[is1]
    n2 = target.indices[~is1]
    if n1.size == 0 or n2.size == 0:
        raise ValueError("interlacing check needs both spectra")
    common = (
        n1.size == n2.size
        and np.array_equal(n1, n2)
        and np.array_equal(n1, np.arange(n1[0], n1[0] + n1.size))
    )
    if not common:
        raise ValueError("interlacing check needs a common contiguous index range")
    a = target.lams[is1]
    b = target.lams[~is1]
    if a[0] >= b[0]:
        a, b = b, a
        ordering = "2<1"
    else:
        ordering = "1<2"
    # require a_n < b_n < a_{n+1} throughout
    for k in range(a.size):
        upper = a[k + 1] if k + 1 < a.size else math.inf
        if not (a[k] < b[k] < upper):
            n = int(n1[0] + k)
            return InterlacingReport(False, ordering, (n, float(a[k]), float(b[k]), float(upper)))
    return InterlacingReport(True, ordering, None)


def asymptotic_remainders(target: SpectralTarget, pv: ProblemVector) -> np.ndarray:
    """Remainders a_n = lam - pi^2 n^2 - 2(h_i - h0) - int q, in entry order.

    Under the hypothesis problem these decay; they drive the bracketing
    seeds and sanity reports.
    """
    h_i = np.where(target.spectrum_ids == 1, pv.h1, pv.h2)
    ns = target.indices.astype(np.float64)
    return target.lams - np.pi**2 * ns**2 - 2.0 * (h_i - pv.h0) - pv.q.integral


# ---------------------------------------------------------------------------
# serialization


def format_float(x: float) -> str:
    """17 significant digits (exact double round-trip), always float-typed."""
    s = f"{float(x):.17g}"
    if "e" not in s and "." not in s and "n" not in s and "i" not in s:
        s += ".0"
    return s


def _write_json(value, parts, indent):
    pad = " " * indent
    if isinstance(value, dict):
        if not value:
            parts.append("{}")
            return
        parts.append("{\n")
        for k, (key, val) in enumerate(value.items()):
            parts.append(pad + "  " + json.dumps(str(key)) + ": ")
            _write_json(val, parts, indent + 2)
            parts.append(",\n" if k < len(value) - 1 else "\n")
        parts.append(pad + "}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        if not seq:
            parts.append("[]")
            return
        parts.append("[\n")
        for k, val in enumerate(seq):
            parts.append(pad + "  ")
            _write_json(val, parts, indent + 2)
            parts.append(",\n" if k < len(seq) - 1 else "\n")
        parts.append(pad + "]")
    elif isinstance(value, bool) or isinstance(value, np.bool_):
        parts.append("true" if value else "false")
    elif value is None:
        parts.append("null")
    elif isinstance(value, (int, np.integer)):
        parts.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        parts.append(format_float(value))
    elif isinstance(value, str):
        parts.append(json.dumps(value))
    else:
        raise TypeError(f"cannot serialize {type(value)!r}")


def dumps_json(doc) -> str:
    """Deterministic JSON text with floats at 17 significant digits."""
    parts: list[str] = []
    _write_json(doc, parts, 0)
    parts.append("\n")
    return "".join(parts)


def atomic_write_text(path, text: str):
    """Write via a sibling temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_json(path, doc):
    atomic_write_text(path, dumps_json(doc))


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def problem_to_doc(pv: ProblemVector) -> dict:
    return {
        "h0": pv.h0,
        "h1": pv.h1,
        "h2": pv.h2,
        "grid": pv.q.grid_size,
        "q_values": pv.q.values,
    }


def problem_from_doc(doc: dict) -> ProblemVector:
    q = Potential(np.asarray(doc["q_values"], dtype=np.float64))
    if "grid" in doc and int(doc["grid"]) != q.grid_size:
        raise ValueError("grid does not match the number of q_values")
    return ProblemVector(float(doc["h0"]), float(doc["h1"]), float(doc["h2"]), q)


def target_to_doc(target: SpectralTarget, noise: NoiseSpec = NoiseSpec()) -> dict:
    return {
        "noise": {"r": noise.magnitude, "seed": noise.seed},
        "entries": [
            {"i": i, "n": n, "lambda": lam, "weight": w}
            for i, n, lam, w in target.entries()
        ],
    }


def target_from_doc(doc: dict):
    """Returns (target, noise)."""
    entries = [
        (e["i"], e["n"], e["lambda"], e["weight"]) for e in doc["entries"]
    ]
    noise_doc = doc.get("noise", {})
    noise = NoiseSpec(float(noise_doc.get("r", 0.0)), int(noise_doc.get("seed", 0)))
    return SpectralTarget.from_entries(entries), noise


def descent_config_to_doc(cfg: DescentConfig) -> dict:
    return {
        "max_iters": cfg.max_iters,
        "g_tol": cfg.g_tol,
        "reset_schedule": list(cfg.reset_schedule),
        "restart_every": cfg.restart_every,
        "snapshot_every": cfg.snapshot_every,
        "delta2_stop": cfg.delta2_stop,
        "line_search": {
            "growth": cfg.line_search.growth,
            "shrink_tol": cfg.line_search.shrink_tol,
            "max_evals": cfg.line_search.max_evals,
            "alpha_init": cfg.line_search.alpha_init,
        },
    }


def descent_config_from_doc(doc: dict) -> DescentConfig:
    ls_doc = doc.get("line_search", {})
    ls = LineSearchConfig(
        growth=float(ls_doc.get("growth", 2.0)),
        shrink_tol=float(ls_doc.get("shrink_tol", 1e-3)),
        max_evals=int(ls_doc.get("max_evals", 40)),
        alpha_init=float(ls_doc.get("alpha_init", 1e-3)),
    )
    return DescentConfig(
        max_iters=int(doc.get("max_iters", 200)),
        g_tol=float(doc.get("g_tol", 1e-10)),
        reset_schedule=tuple(int(j) for j in doc.get("reset_schedule", [])),
        line_search=ls,
        restart_every=int(doc.get("restart_every", 0)),
        snapshot_every=int(doc.get("snapshot_every", 0)),
        delta2_stop=float(doc.get("delta2_stop", 0.0)),
    )


_CSV_HEADER = "iter,G,h0,h1,h2,delta2"


def history_to_csv(records) -> str:
    lines = [_CSV_HEADER]
    for r in records:
        d2 = "" if r.delta2 is None else format_float(r.delta2)
        lines.append(
            f"{r.iter},{format_float(r.G)},{format_float(r.h0)},"
            f"{format_float(r.h1)},{format_float(r.h2)},{d2}"
        )
    return "\n".join(lines) + "\n"


def history_from_csv(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _CSV_HEADER:
        raise ValueError(f"bad history header; expected '{_CSV_HEADER}'")
    records = []
    for ln in lines[1:]:
        cols = ln.split(",")
        records.append(
            IterateRecord(
                iter=int(cols[0]),
                G=float(cols[1]),
                h0=float(cols[2]),
                h1=float(cols[3]),
                h2=float(cols[4]),
                delta2=float(cols[5]) if cols[5] != "" else None,
            )
        )
    return records
