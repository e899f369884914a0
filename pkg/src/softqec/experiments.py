"""Experiment configurations and runners behind the command line.

Each runner returns a mapping of file name to text.  Data files never hold
timings or other run-dependent values, so a rerun with the same seed writes
byte-identical data; those live in ``manifest.json`` instead.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import math
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bp, codes, noise, postselect

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("phi-sweep", "rep-exact", "hierarchical", "postselect", "bounds", "memory", "qclp-info")

# Outer-code draws use a seed key of a different length from the inner
# chunk streams, so the two never share a SeedSequence.
OUTER_SEED_OFFSET = 1 << 32


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    output: str = "results"
    d: int = 5
    variant: str = "rotated"
    n: int | None = None          # repetition length, or outer block length for the T rule
    p: float = 0.08
    q: float | None = None
    r: float | None = None        # SWAP ratio in the T rule
    T: int | None = None
    decoder: str = "ufd"
    trials: int = 10_000
    threads: int = 1
    cutoff: float | None = None
    discard: float | None = None  # target discarded fraction, used when no cutoff is given
    V: int = 4
    epsilon: float = 1e-9
    T_mem: int | None = None
    k: int = 1
    outer_rounds: int = 20
    inner_trials: int = 1_000_000
    joint: str | None = None      # saved soft-output distribution for hierarchical runs
    max_iter: int = bp.MAX_ITER

    @property
    def rounds(self) -> int:
        if self.T is not None:
            return self.T
        if self.r is not None:
            return math.ceil(3 * math.sqrt(self.n) * self.d / self.r)
        return 1

    def problems(self) -> list[str]:
        out = []
        if self.kind not in KINDS:
            out.append(f"kind: expected one of {', '.join(KINDS)}, got {self.kind!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            out.append("seed: must be a non-negative integer")
        if self.d < 3 or self.d % 2 == 0:
            out.append("d: must be odd and >= 3")
        if self.variant not in ("rotated", "planar"):
            out.append("variant: must be 'rotated' or 'planar'")
        if not 0 < self.p < 0.5:
            out.append("p: must lie in (0, 1/2)")
        if self.q is not None and not 0 < self.q < 0.5:
            out.append("q: must lie in (0, 1/2)")
        if self.decoder not in ("ufd", "mwpm"):
            out.append("decoder: must be 'ufd' or 'mwpm'")
        if self.trials < 1:
            out.append("trials: must be >= 1")
        if self.threads < 1:
            out.append("threads: must be >= 1")
        if self.T is not None and self.T < 1:
            out.append("T: must be >= 1")
        if self.r is not None:
            if self.r <= 0:
                out.append("r: must be positive")
            if self.n is None and self.T is None:
                out.append("n: required by the T rule when r is given")
        if self.kind == "rep-exact" and (self.n is None or not 1 <= self.n <= 64):
            out.append("n: repetition length in [1, 64] required")
        if self.cutoff is not None and self.cutoff < 0:
            out.append("cutoff: must be non-negative")
        if self.discard is not None and not 0 <= self.discard < 1:
            out.append("discard: must lie in [0, 1)")
        if self.kind == "postselect" and self.cutoff is None and self.discard is None:
            out.append("cutoff or discard: one is required for postselect")
        if self.V < 1:
            out.append("V: must be >= 1")
        if not 0 < self.epsilon < 1:
            out.append("epsilon: must lie in (0, 1)")
        if self.T_mem is not None and self.T_mem < self.rounds:
            out.append("T_mem: must be >= the simulated rounds")
        if self.k < 1:
            out.append("k: must be >= 1")
        if self.outer_rounds < 1:
            out.append("outer_rounds: must be >= 1")
        if self.inner_trials < 1:
            out.append("inner_trials: must be >= 1")
        return out

    def validate(self) -> "ExperimentConfig":
        problems = self.problems()
        if problems:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        missing = [k for k in ("kind", "seed") if data.get(k) is None]
        if missing:
            raise ConfigError(f"missing required config fields: {', '.join(missing)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config_file(path) -> dict:
    """Read a TOML config, or the ``config`` section of a run manifest."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from None
        return data.get("config", data)
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from None


# -- formatting ----------------------------------------------------------

def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x) for x in row) + "\n")
    return buf.getvalue()


def histogram_csv(joint: bp.JointDistribution) -> str:
    rows = []
    for lo, hi, s, f in joint.csv_rows():
        log_odds = math.log(s / f) if s and f else ""
        rows.append((float(lo), float(hi), s, f, log_odds))
    return _csv(("phi_low", "phi_high", "successes", "failures", "log_odds_success"), rows)


def _interval(lo_hi):
    return [float(lo_hi[0]), float(lo_hi[1])]


# -- runners -------------------------------------------------------------

def _memory_setup(cfg: ExperimentConfig, rounds: int | None = None) -> noise.MemorySetup:
    code, layer = codes.surface_code(cfg.d, cfg.variant)
    spec = codes.SpacetimeGraphSpec(rounds or cfg.rounds, cfg.p, cfg.q)
    return noise.MemorySetup(code, layer, spec, cfg.decoder)


def _sample(cfg, setup, trials, progress) -> tuple[noise.TrialBatch, bp.JointDistribution]:
    batch = noise.run_trials(setup, trials, cfg.seed, cfg.threads, progress)
    width = float(setup.graph.weights.min()) / 2
    return batch, bp.build_joint(batch.phi, batch.failure, width)


def _rate_summary(failures: int, trials: int) -> dict:
    return {"trials": trials, "failures": failures, "failure_rate": failures / trials,
            "interval_95": _interval(postselect.clopper_pearson(failures, trials))}


def run_phi_sweep(cfg, progress=None) -> dict[str, str]:
    setup = _memory_setup(cfg)
    batch, joint = _sample(cfg, setup, cfg.trials, progress)
    summary = _rate_summary(int(batch.failure.sum()), len(batch))
    summary.update(rounds=setup.spec.rounds, bin_width=joint.width)
    return {"histogram.csv": histogram_csv(joint), "joint.json": _json(joint.to_json()),
            "summary.json": _json(summary)}


def run_memory(cfg, progress=None) -> dict[str, str]:
    setup = _memory_setup(cfg)
    batch = noise.run_trials(setup, cfg.trials, cfg.seed, cfg.threads, progress)
    summary = _rate_summary(int(batch.failure.sum()), len(batch))
    summary["rounds"] = setup.spec.rounds
    if cfg.T_mem is not None:
        rate = min(summary["failure_rate"], 0.5)
        summary["extrapolated"] = {"T_mem": cfg.T_mem, "k": cfg.k,
                                   "failure_rate": postselect.extrapolate(rate, setup.spec.rounds, cfg.T_mem, cfg.k)}
    return {"summary.json": _json(summary)}


def _cutoff_json(res: postselect.CutoffResult) -> dict:
    return {"cutoff": res.cutoff, "discard_fraction": res.discard_fraction, "kept": res.kept,
            "kept_failures": res.kept_failures, "failure_rate": res.failure_rate,
            "interval_95": _interval(res.interval), "failure_rate_before": res.failure_rate_before,
            "interval_95_before": _interval(res.interval_before)}


def run_postselect(cfg, progress=None) -> dict[str, str]:
    setup = _memory_setup(cfg)
    batch, joint = _sample(cfg, setup, cfg.trials, progress)
    cutoff = cfg.cutoff
    if cutoff is None:
        cutoff = postselect.cutoff_for_fraction(batch.phi, cfg.discard)
    res = postselect.cutoff_analysis(batch.phi, cutoff, batch.failure)
    out = _cutoff_json(res)
    out["rounds"] = setup.spec.rounds
    return {"histogram.csv": histogram_csv(joint), "summary.json": _json(out)}


def exact_cutoff_for_fraction(rows, fraction: float) -> float:
    """Soft-output value whose cumulative discarded mass is closest to ``fraction``."""
    total = 0.0
    best, best_gap = rows[0].phi, math.inf
    for row in rows:
        total += float(row.mass)
        gap = abs(total - fraction)
        if gap < best_gap:
            best, best_gap = row.phi, gap
    return best


def run_rep_exact(cfg, progress=None) -> dict[str, str]:
    rows = postselect.rep_exact_joint(cfg.n, cfg.p)
    table = _csv(("phi_units", "phi", "mass", "fail_mass", "mass_exact", "fail_mass_exact"),
                 [(r.units, float(r.phi), float(r.mass), float(r.fail_mass), str(r.mass), str(r.fail_mass))
                  for r in rows])
    summary = {"n": cfg.n, "p": cfg.p, "w": math.log((1 - cfg.p) / cfg.p)}
    cutoff = cfg.cutoff
    if cutoff is None and cfg.discard is not None:
        cutoff = exact_cutoff_for_fraction(rows, cfg.discard)
    if cutoff is not None:
        res = postselect.exact_cutoff(rows, cutoff)
        summary.update(cutoff=cutoff, discarded=float(res.discarded),
                       failure_before=float(res.failure_before), failure_after=float(res.failure_after))
    else:
        summary["failure_before"] = float(postselect.exact_cutoff(rows, -1.0).failure_before)
    return {"table.csv": table, "summary.json": _json(summary)}


def run_bounds(cfg, progress=None) -> dict[str, str]:
    n, delta = postselect.postselection_parameters(cfg.V, cfg.p, cfg.epsilon)
    n_int = math.ceil(n)
    delta_int = postselect.cutoff_delta(cfg.V, cfg.p, n_int)
    bounds = postselect.cutoff_bounds(postselect.PostselectParams(cfg.V, n_int, cfg.p, delta_int))
    baseline = postselect.no_postselection_length(cfg.V, cfg.p, cfg.epsilon)
    out = {"V": cfg.V, "p": cfg.p, "epsilon": cfg.epsilon, "n": n, "delta": delta,
           "n_integer": n_int, "delta_at_n_integer": delta_int,
           "expected_executions_per_sample": bounds.expected_executions,
           "discard_bound": bounds.discard_probability, "epsilon_bound": bounds.epsilon,
           "no_postselection_n": baseline, "length_ratio": n / baseline}
    return {"bounds.json": _json(out)}


def run_hierarchical(cfg, progress=None) -> dict[str, str]:
    files = {}
    if cfg.joint:
        joint = bp.JointDistribution.load(cfg.joint)
    else:
        setup = _memory_setup(cfg)
        _, joint = _sample(cfg, setup, cfg.inner_trials, progress)
        files["joint.json"] = _json(joint.to_json())
        files["histogram.csv"] = histogram_csv(joint)
    hier = bp.HierarchicalSetup(codes.qclp_1054_140(), cfg.outer_rounds, joint, cfg.max_iter)
    outcomes = bp.run_paired(hier, cfg.trials, cfg.seed + OUTER_SEED_OFFSET, cfg.threads, progress)
    cmp = bp.paired_comparison(outcomes)
    files["paired.csv"] = _csv(("trial", "soft_failed", "hard_failed"),
                               [(i, int(s), int(h)) for i, (s, h) in enumerate(outcomes)])
    files["summary.json"] = _json({
        "inner_failure_rate": joint.marginal_rate, "inner_samples": joint.total,
        "outer_rounds": cfg.outer_rounds, "trials": cmp.trials,
        "soft": _rate_summary(cmp.soft_failures, cmp.trials),
        "hard": _rate_summary(cmp.hard_failures, cmp.trials),
        "soft_only": cmp.soft_only, "hard_only": cmp.hard_only, "p_value": cmp.p_value})
    return files


def run_qclp_info(cfg, progress=None) -> dict[str, str]:
    from . import gf2
    code = codes.qclp_1054_140()
    pairing = (code.L_X.astype(np.int64) @ code.L_Z.T.astype(np.int64)) & 1
    info = {"name": code.name, "n": code.n, "k": code.k,
            "H_X_shape": list(code.H_X.shape), "H_Z_shape": list(code.H_Z.shape),
            "rank_H_X": gf2.rank(code.H_X), "rank_H_Z": gf2.rank(code.H_Z),
            "row_weights_H_X": sorted(set(code.H_X.sum(axis=1).tolist())),
            "row_weights_H_Z": sorted(set(code.H_Z.sum(axis=1).tolist())),
            "checks_commute": not np.any((code.H_X.astype(np.int64) @ code.H_Z.T.astype(np.int64)) & 1),
            "logical_pairing_identity": bool(np.array_equal(pairing, np.eye(code.k, dtype=np.int64)))}
    return {"code.json": _json(info)}


RUNNERS = {"phi-sweep": run_phi_sweep, "rep-exact": run_rep_exact, "hierarchical": run_hierarchical,
           "postselect": run_postselect, "bounds": run_bounds, "memory": run_memory,
           "qclp-info": run_qclp_info}


def git_hash() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 else "unknown"


def run(cfg: ExperimentConfig, progress=None) -> Path:
    """Execute ``cfg`` and write its data files plus ``manifest.json``."""
    cfg.validate()
    start = time.perf_counter()
    files = RUNNERS[cfg.kind](cfg, progress)
    wall = time.perf_counter() - start
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, text in sorted(files.items()):
        (out / name).write_text(text)
        digests[name] = hashlib.sha256(text.encode()).hexdigest()
    manifest = {"config": cfg.to_dict(), "git": git_hash(), "wall_seconds": wall,
                "python": sys.version.split()[0], "numpy": np.__version__, "files": digests}
    (out / "manifest.json").write_text(_json(manifest))
    return out
