"""Run reports: line-oriented, byte-deterministic records of a run.

A report starts with `sdpsketch-report 1` and ends with `end`.  Floats
are printed with %.17g so every value round-trips bit-exactly; all
indices (rounds, constraints, matrix rows) are 1-based on disk and
0-based in memory, with the conversion confined to render/parse.

A feasible run's witness is dumped in its succinct form: the chosen
exponent summands (so the sampling stores can be re-joined from the
manifest), the sketch rows with their probabilities, the singular
values and left vectors, and the compressed-matrix eigensystem.
Rebuilding from those bytes reproduces the witness exactly, so entry
queries against a reloaded report match the original run bit for bit.

Timing lines are opt-in: two runs of the same command with the same
seed produce identical bytes unless timings were requested.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ManifestError
from .gibbs import GibbsDescription, make_gibbs
from .sketch import BasisSketch, MatrixSum
from .spectral import SpectralSurrogate

VERSION = 1
HEADER = f"sdpsketch-report {VERSION}"


def fmt(x: float) -> str:
    """Shortest decimal that round-trips a float (17 significant digits)."""
    return format(float(x), ".17g")


def _fmt_complex(z: complex) -> str:
    return f"{fmt(z.real)} {fmt(z.imag)}"


@dataclass
class WitnessDump:
    """Everything needed to rebuild a candidate solution bit-exactly."""

    kind: str  # "uniform" or "gibbs"
    beta: float = 0.0
    exponent: list[int] = field(default_factory=list)  # 0-based constraint indices
    rows: Optional[np.ndarray] = None
    row_probs: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None
    left: Optional[np.ndarray] = None  # p x r_tilde
    core_d: Optional[np.ndarray] = None
    core_u: Optional[np.ndarray] = None  # r_tilde x r_tilde


@dataclass
class RunReport:
    """In-memory form of a report; indices 0-based."""

    command: str
    dimension: int
    seed: int
    epsilon: float
    rounds: int
    verdict: str = "infeasible"
    iterations: int = 0
    constraints: int = 0
    beta_scale: float = 0.25
    delta_total: float = 1.0 / 6.0
    preset: str = "scaled"
    sketch_p: Optional[int] = None
    sketch_gamma: Optional[float] = None
    violations: list[tuple[int, int, float]] = field(default_factory=list)
    manifest_sha: Optional[str] = None
    value: Optional[float] = None
    calls: Optional[int] = None
    estimates: list[float] = field(default_factory=list)
    timings: list[tuple[str, float]] = field(default_factory=list)
    witness: Optional[WitnessDump] = None


def dump_witness(g: GibbsDescription, exponent: list[int]) -> WitnessDump:
    """Capture a candidate's succinct description for serialization."""
    if g.r_tilde == 0:
        return WitnessDump(kind="uniform", beta=g.beta)
    basis = g.basis
    return WitnessDump(
        kind="gibbs",
        beta=g.beta,
        exponent=list(exponent),
        rows=basis.rows.copy(),
        row_probs=basis.row_probs.copy(),
        sigma=basis.singular_values.copy(),
        left=basis.left_vectors.copy(),
        core_d=g.surrogate.d.copy(),
        core_u=g.surrogate.u.copy(),
    )


def rebuild_witness(dump: WitnessDump, constraints: list, n: int) -> GibbsDescription:
    """Reconstruct the candidate from a dump plus the original stores.

    The stores must come from the same matrix files the run used; the
    report's manifest digest is the caller's handle for checking that.
    """
    if dump.kind == "uniform":
        return GibbsDescription.uniform(n)
    summands = [constraints[j] for j in dump.exponent]
    if not summands:
        raise ManifestError("gibbs witness with an empty exponent list")
    ms = MatrixSum(summands, rank=max(s.rank_hint for s in summands))
    basis = BasisSketch(
        ms=ms,
        rows=dump.rows,
        row_probs=dump.row_probs,
        singular_values=dump.sigma,
        left_vectors=dump.left,
    )
    surrogate = SpectralSurrogate(u=dump.core_u, d=dump.core_d, basis=basis)
    return make_gibbs(basis, surrogate, dump.beta)


def render(report: RunReport) -> str:
    """Serialize a report; output bytes are a pure function of the fields."""
    lines = [HEADER, f"command {report.command}", f"dimension {report.dimension}"]
    if report.manifest_sha is not None:
        lines.append(f"manifest-sha256 {report.manifest_sha}")
    lines.append(f"seed {report.seed}")
    lines.append(f"epsilon {fmt(report.epsilon)}")
    lines.append(f"constraints {report.constraints}")
    lines.append(f"rounds {report.rounds}")
    lines.append(f"beta-scale {fmt(report.beta_scale)}")
    lines.append(f"delta-total {fmt(report.delta_total)}")
    lines.append(f"preset {report.preset}")
    if report.sketch_p is not None:
        lines.append(f"sketch-p {report.sketch_p}")
    if report.sketch_gamma is not None:
        lines.append(f"sketch-gamma {fmt(report.sketch_gamma)}")
    lines.append(f"verdict {report.verdict}")
    lines.append(f"iterations {report.iterations}")
    for t, j, zeta in report.violations:
        lines.append(f"violation {t} {j + 1} {fmt(zeta)}")
    if report.value is not None:
        lines.append(f"value {fmt(report.value)}")
    if report.calls is not None:
        lines.append(f"calls {report.calls}")
    for k, est in enumerate(report.estimates, start=1):
        lines.append(f"estimate {k} {fmt(est)}")
    for name, seconds in report.timings:
        lines.append(f"timing {name} {fmt(seconds)}")
    w = report.witness
    if w is None:
        lines.append("witness none")
    elif w.kind == "uniform":
        lines.append("witness uniform")
    else:
        p, r = w.left.shape
        lines.append("witness gibbs")
        lines.append(f"beta {fmt(w.beta)}")
        lines.append(f"tau {len(w.exponent)}")
        lines.append("exponent " + " ".join(str(j + 1) for j in w.exponent))
        lines.append(f"p {p}")
        lines.append(f"rank {r}")
        lines.append("rows " + " ".join(str(int(i) + 1) for i in w.rows))
        lines.append("row-probs " + " ".join(fmt(q) for q in w.row_probs))
        lines.append("sigma " + " ".join(fmt(s) for s in w.sigma))
        for k in range(r):
            pairs = " ".join(_fmt_complex(z) for z in w.left[:, k])
            lines.append(f"left {k + 1} {pairs}")
        lines.append("core-d " + " ".join(fmt(d) for d in w.core_d))
        for k in range(r):
            pairs = " ".join(_fmt_complex(z) for z in w.core_u[:, k])
            lines.append(f"core-u {k + 1} {pairs}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def _toks(line: str, lineno: int) -> list[str]:
    tokens = line.split()
    if not tokens:
        raise ManifestError(f"report line {lineno}: empty line inside report")
    return tokens


def _float_tok(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ManifestError(f"report line {lineno}: bad float {token!r}") from None


def _int_tok(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ManifestError(f"report line {lineno}: bad integer {token!r}") from None


def _complex_vec(tokens: list[str], lineno: int) -> np.ndarray:
    if len(tokens) % 2:
        raise ManifestError(f"report line {lineno}: odd number of components")
    values = [_float_tok(t, lineno) for t in tokens]
    arr = np.array(values, dtype=np.float64).reshape(-1, 2)
    return arr[:, 0] + 1j * arr[:, 1]


def parse(text: str) -> RunReport:
    """Parse a rendered report, validating structure as it goes."""
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise ManifestError("not a report: missing header line")
    if not lines or lines[-1] != "end":
        raise ManifestError("truncated report: missing end line")
    scalars: dict[str, str] = {}
    violations: list[tuple[int, int, float]] = []
    estimates: list[tuple[int, float]] = []
    timings: list[tuple[str, float]] = []
    witness_kind: Optional[str] = None
    payload: dict[str, list[str]] = {}
    left_rows: dict[int, np.ndarray] = {}
    core_rows: dict[int, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:-1], start=2):
        tokens = _toks(line, lineno)
        key = tokens[0]
        if key == "violation":
            if len(tokens) != 4:
                raise ManifestError(f"report line {lineno}: violation takes three fields")
            violations.append(
                (
                    _int_tok(tokens[1], lineno),
                    _int_tok(tokens[2], lineno) - 1,
                    _float_tok(tokens[3], lineno),
                )
            )
        elif key == "estimate":
            estimates.append((_int_tok(tokens[1], lineno), _float_tok(tokens[2], lineno)))
        elif key == "timing":
            timings.append((tokens[1], _float_tok(tokens[2], lineno)))
        elif key == "witness":
            witness_kind = tokens[1]
        elif key == "left":
            left_rows[_int_tok(tokens[1], lineno)] = _complex_vec(tokens[2:], lineno)
        elif key == "core-u":
            core_rows[_int_tok(tokens[1], lineno)] = _complex_vec(tokens[2:], lineno)
        elif key in ("exponent", "rows", "row-probs", "sigma", "core-d"):
            payload[key] = tokens[1:]
        elif key in (
            "command",
            "dimension",
            "manifest-sha256",
            "seed",
            "epsilon",
            "constraints",
            "rounds",
            "beta-scale",
            "delta-total",
            "preset",
            "sketch-p",
            "sketch-gamma",
            "verdict",
            "iterations",
            "value",
            "calls",
            "beta",
            "tau",
            "p",
            "rank",
        ):
            if key in scalars:
                raise ManifestError(f"report line {lineno}: duplicate {key!r}")
            if len(tokens) != 2:
                raise ManifestError(f"report line {lineno}: {key} takes one value")
            scalars[key] = tokens[1]
        else:
            raise ManifestError(f"report line {lineno}: unknown key {key!r}")
    for required in ("command", "dimension", "seed", "epsilon", "rounds", "verdict", "iterations"):
        if required not in scalars:
            raise ManifestError(f"report is missing {required!r}")
    if scalars["verdict"] not in ("feasible", "infeasible"):
        raise ManifestError(f"unknown verdict {scalars['verdict']!r}")
    witness: Optional[WitnessDump] = None
    if witness_kind == "uniform":
        witness = WitnessDump(kind="uniform", beta=float(scalars.get("beta", 0.0)))
    elif witness_kind == "gibbs":
        for required in ("beta", "tau", "p", "rank"):
            if required not in scalars:
                raise ManifestError(f"gibbs witness is missing {required!r}")
        p = int(scalars["p"])
        r = int(scalars["rank"])
        tau = int(scalars["tau"])
        for required in ("exponent", "rows", "row-probs", "sigma", "core-d"):
            if required not in payload:
                raise ManifestError(f"gibbs witness is missing {required!r}")
        exponent = [int(t) - 1 for t in payload["exponent"]]
        rows = np.array([int(t) - 1 for t in payload["rows"]], dtype=np.int64)
        row_probs = np.array([float(t) for t in payload["row-probs"]], dtype=np.float64)
        sigma = np.array([float(t) for t in payload["sigma"]], dtype=np.float64)
        core_d = np.array([float(t) for t in payload["core-d"]], dtype=np.float64)
        if len(exponent) != tau:
            raise ManifestError(f"exponent lists {len(exponent)} entries, tau says {tau}")
        if rows.size != p or row_probs.size != p:
            raise ManifestError("row data does not match the declared p")
        if sigma.size != r or core_d.size != r:
            raise ManifestError("spectral data does not match the declared rank")
        if sorted(left_rows) != list(range(1, r + 1)) or sorted(core_rows) != list(
            range(1, r + 1)
        ):
            raise ManifestError("left/core-u vectors must cover 1..rank exactly once")
        left = np.stack([left_rows[k] for k in range(1, r + 1)], axis=1)
        core_u = np.stack([core_rows[k] for k in range(1, r + 1)], axis=1)
        if left.shape != (p, r):
            raise ManifestError(f"left vectors have shape {left.shape}, expected ({p}, {r})")
        if core_u.shape != (r, r):
            raise ManifestError(f"core-u has shape {core_u.shape}, expected ({r}, {r})")
        witness = WitnessDump(
            kind="gibbs",
            beta=float(scalars["beta"]),
            exponent=exponent,
            rows=rows,
            row_probs=row_probs,
            sigma=sigma,
            left=left,
            core_d=core_d,
            core_u=core_u,
        )
    elif witness_kind not in (None, "none"):
        raise ManifestError(f"unknown witness kind {witness_kind!r}")
    estimates_out = []
    if estimates:
        if [k for k, _ in estimates] != list(range(1, len(estimates) + 1)):
            raise ManifestError("estimate lines must appear as 1..k in order")
        estimates_out = [v for _, v in estimates]
    return RunReport(
        command=scalars["command"],
        dimension=int(scalars["dimension"]),
        seed=int(scalars["seed"]),
        epsilon=float(scalars["epsilon"]),
        rounds=int(scalars["rounds"]),
        verdict=scalars["verdict"],
        iterations=int(scalars["iterations"]),
        constraints=int(scalars.get("constraints", 0)),
        beta_scale=float(scalars.get("beta-scale", 0.25)),
        delta_total=float(scalars.get("delta-total", 1.0 / 6.0)),
        preset=scalars.get("preset", "scaled"),
        sketch_p=int(scalars["sketch-p"]) if "sketch-p" in scalars else None,
        sketch_gamma=float(scalars["sketch-gamma"]) if "sketch-gamma" in scalars else None,
        violations=violations,
        manifest_sha=scalars.get("manifest-sha256"),
        value=float(scalars["value"]) if "value" in scalars else None,
        calls=int(scalars["calls"]) if "calls" in scalars else None,
        estimates=estimates_out,
        timings=timings,
        witness=witness,
    )


def load_report(path: str) -> RunReport:
    with open(path, "r", encoding="ascii") as handle:
        return parse(handle.read())


def save_report(path: str, report: RunReport) -> None:
    with open(path, "w", encoding="ascii") as handle:
        handle.write(render(report))
