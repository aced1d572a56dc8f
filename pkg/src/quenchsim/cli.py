"""Command-line orchestration: jobs, deterministic seeding, and reports.

Every job kind maps to a fixed substream id, and instance k of a job draws
from RandomStream(seed).substream(job_id, k), so any single record can be
regenerated in isolation. Reports are written as per-instance CSV plus an
aggregate JSON; everything except the wall-clock timing entry is
deterministic for a fixed configuration.

Exit codes: 0 success, 2 configuration/validation error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import Architecture, build_lattice, ising_couplings
from .prep import beta_from_bits, sample_beta
from .rng import RandomStream
from .statevec import OutcomeRecord
from . import certify, circuits, ising, iqproute

JOB_STREAM = {
    "anticoncentration": 1,
    "identity-check": 2,
    "certification": 3,
    "iqp-route": 4,
    "partition-bench": 5,
}

CSV_HEADERS = {
    "anticoncentration": ["arch", "n", "m", "instance", "seed", "gamma", "tv"],
    "identity-check": ["arch", "n", "m", "instance", "seed", "beta_bits", "max_residual"],
    "certification": [
        "arch", "n", "m", "instance", "seed", "m_samples", "E_star", "F_min_star", "verdict",
    ],
    "iqp-route": ["n", "instance", "seed", "gate_count", "depth", "meetings_ok", "deviation"],
    "partition-bench": ["n", "m", "instance", "seed", "log_abs_z", "residual"],
}


class ValidationError(ValueError):
    """Configuration rejected before any work starts."""


@dataclass
class JobConfig:
    kind: str
    arch: str = "I"
    rows: int = 2
    cols: int = 2
    instances: int = 10
    seed: int = 0
    threshold_fidelity: float = 0.9
    eps: float = 0.05
    p_err: float = 0.05
    noise_p: float = 0.0
    qubits: int = 4

    def validate(self) -> None:
        if self.kind not in JOB_STREAM:
            raise ValidationError(f"kind: unknown job kind {self.kind!r}")
        try:
            Architecture.parse(self.arch)
        except ValueError as exc:
            raise ValidationError(f"arch: {exc}") from exc
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("rows/cols: must be positive")
        if self.instances < 1:
            raise ValidationError("instances: must be positive")
        if self.kind == "certification":
            if not 0 < self.threshold_fidelity < 1:
                raise ValidationError("threshold_fidelity: must lie in (0, 1)")
            if not 0 < self.eps <= (1 - self.threshold_fidelity) / 2:
                raise ValidationError("eps: must satisfy 0 < eps <= (1 - F_T)/2")
            if not 0 < self.p_err < 0.5:
                raise ValidationError("p_err: must lie in (0, 1/2)")
            if not 0 <= self.noise_p <= 1:
                raise ValidationError("noise_p: must lie in [0, 1]")
        if self.kind == "iqp-route" and self.qubits < 1:
            raise ValidationError("qubits: must be positive")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunReport:
    config: JobConfig
    records: list[dict]
    aggregates: dict
    wall_seconds: float = 0.0
    version: str = __version__

    def payload(self) -> dict:
        """The deterministic part of the report."""
        return {
            "version": self.version,
            "config": self.config.to_dict(),
            "aggregates": self.aggregates,
        }


def quartiles_inclusive(values) -> tuple[float, float, float]:
    """(Q1, median, Q3) with Tukey's inclusive-median convention: both halves
    contain the middle element when the count is odd."""
    data = sorted(float(v) for v in values)
    if not data:
        raise ValueError("no values")

    def med(block):
        k = len(block)
        mid = k // 2
        return block[mid] if k % 2 else (block[mid - 1] + block[mid]) / 2.0

    k = len(data)
    half = k // 2 + (k % 2)
    return med(data[:half]), med(data), med(data[k - half:])


def _job_anticoncentration(config: JobConfig, stream: RandomStream) -> RunReport:
    records = []
    gammas, tvs = [], []
    job_id = JOB_STREAM[config.kind]
    for k in range(config.instances):
        rng = stream.substream(job_id, k)
        circuit = circuits.sample_instance(config.arch, config.rows, config.cols, rng)
        table = circuits.simulate_circuit(circuit)
        gamma = circuits.gamma_of_table(table)
        tv = circuits.pt_tv_distance(table, config.rows)
        gammas.append(gamma)
        tvs.append(tv)
        records.append(
            {
                "arch": config.arch,
                "n": config.rows,
                "m": config.cols,
                "instance": k,
                "seed": config.seed,
                "gamma": gamma,
                "tv": tv,
            }
        )
    q1, med, q3 = quartiles_inclusive(gammas)
    aggregates = {
        "mean_gamma": float(np.mean(gammas)),
        "alpha": float(np.mean(np.asarray(gammas) >= 1.0 / math.e)),
        "gamma_quartiles": [q1, med, q3],
        "gamma_iqr": q3 - q1,
        "median_tv": quartiles_inclusive(tvs)[1],
        "reference_inverse_e": 1.0 / math.e,
    }
    return RunReport(config=config, records=records, aggregates=aggregates)


def _beta_family(config: JobConfig, stream: RandomStream):
    """Exhaustive preparations of the symmetry class when small, else samples."""
    arch = Architecture.parse(config.arch)
    n, m = config.rows, config.cols
    if arch is Architecture.I:
        free = n * m
    elif arch is Architecture.II:
        free = m
    else:
        free = 1  # the uniform angle: try both constants
    if free <= 12:
        for pattern in range(1 << free):
            bits = [(pattern >> i) & 1 for i in range(free)]
            if arch is Architecture.I:
                yield beta_from_bits(arch, n, m, bits)
            elif arch is Architecture.II:
                yield beta_from_bits(arch, n, m, np.tile(bits, (n, 1)).reshape(n * m))
            else:
                yield beta_from_bits(arch, n, m, [bits[0]] * (n * m))
    else:
        lattice = build_lattice(arch, n, m)
        for k in range(config.instances):
            yield sample_beta(arch, lattice, stream.substream(JOB_STREAM[config.kind], k))


def _job_identity_check(config: JobConfig, stream: RandomStream) -> RunReport:
    lattice = build_lattice(config.arch, config.rows, config.cols)
    couplings = ising_couplings(lattice)
    records = []
    worst = 0.0
    for k, beta in enumerate(_beta_family(config, stream)):
        residual = float(
            ising.identity_residuals(lattice.arch, lattice, couplings, beta).max()
        )
        worst = max(worst, residual)
        records.append(
            {
                "arch": config.arch,
                "n": config.rows,
                "m": config.cols,
                "instance": k,
                "seed": config.seed,
                "beta_bits": "".join(str(b) for b in beta.bits()),
                "max_residual": residual,
            }
        )
    aggregates = {"max_residual": worst, "preparations": len(records)}
    return RunReport(config=config, records=records, aggregates=aggregates)


def _job_certification(config: JobConfig, stream: RandomStream) -> RunReport:
    from .prep import product_state
    from .statevec import evolve_diagonal

    lattice = build_lattice(config.arch, config.rows, config.cols)
    couplings = ising_couplings(lattice)
    job_id = JOB_STREAM[config.kind]
    beta = sample_beta(lattice.arch, lattice, stream.substream(job_id, 0, 0))
    state = evolve_diagonal(product_state(beta, lattice), couplings, lattice)
    source = certify.apply_noise(state, {"kind": "depolarizing", "p": config.noise_p})
    parent = certify.parent_hamiltonian(lattice.arch, lattice, beta)
    decomposition = certify.two_color_decomposition(parent)
    protocol = certify.ProtocolConfig(
        threshold_fidelity=config.threshold_fidelity, eps=config.eps, p_err=config.p_err
    )
    caches = [{} for _ in decomposition.parts]
    records = []
    accepted = 0
    for k in range(config.instances):
        report = certify.run_protocol(
            protocol,
            source,
            lattice.arch,
            lattice,
            beta,
            stream.substream(job_id, k + 1),
            decomposition=decomposition,
            caches=caches,
        )
        accepted += report.verdict == "accept"
        rec = report.to_dict()
        records.append(
            {
                "arch": config.arch,
                "n": config.rows,
                "m": config.cols,
                "instance": k,
                "seed": config.seed,
                "m_samples": rec["m_samples"],
                "E_star": rec["E_star"],
                "F_min_star": rec["F_min_star"],
                "verdict": rec["verdict"],
            }
        )
    aggregates = {
        "accept_fraction": accepted / config.instances,
        "m_samples": records[0]["m_samples"] if records else 0,
        "reports": [r for r in records],
    }
    return RunReport(config=config, records=records, aggregates=aggregates)


def _job_iqp_route(config: JobConfig, stream: RandomStream) -> RunReport:
    job_id = JOB_STREAM[config.kind]
    n = config.qubits
    records = []
    worst_dev = 0.0
    for k in range(config.instances):
        rng = stream.substream(job_id, k)
        circuit = iqproute.normalize(iqproute.random_iqp(n, rng))
        schedule = iqproute.schedule_linear(circuit)
        met, _, _ = iqproute.replay_meetings(schedule)
        meetings_ok = len(met) == n * (n - 1) // 2 and len(set(met)) == len(met)
        deviation = (
            iqproute.verify_schedule(circuit, schedule) if n <= iqproute.VERIFY_LIMIT else float("nan")
        )
        if not math.isnan(deviation):
            worst_dev = max(worst_dev, deviation)
        records.append(
            {
                "n": n,
                "instance": k,
                "seed": config.seed,
                "gate_count": circuit.gate_count(),
                "depth": schedule.depth,
                "meetings_ok": meetings_ok,
                "deviation": deviation,
            }
        )
    aggregates = {
        "max_depth": max(r["depth"] for r in records),
        "depth_bound": 2 * n + 2,
        "all_meetings_ok": all(r["meetings_ok"] for r in records),
        "max_deviation": worst_dev,
    }
    return RunReport(config=config, records=records, aggregates=aggregates)


def _job_partition_bench(config: JobConfig, stream: RandomStream) -> RunReport:
    job_id = JOB_STREAM[config.kind]
    n, m = config.rows, config.cols
    records = []
    for k in range(config.instances):
        rng = stream.substream(job_id, k)
        fields = rng.generator.uniform(0.0, 2.0 * math.pi, size=n * m)
        cfg = ising.IsingFieldConfig(n=n, m=m, hhat=fields, n_x=n * m, n_z=0)
        zt = ising.z_transfer(cfg)
        residual = float("nan")
        if n * m <= 20:
            zb = ising.z_bruteforce(cfg)
            residual = abs(zt.value - zb.value)
        records.append(
            {
                "n": n,
                "m": m,
                "instance": k,
                "seed": config.seed,
                "log_abs_z": zt.log_abs2() / 2.0,
                "residual": residual,
            }
        )
    checked = [r["residual"] for r in records if not math.isnan(r["residual"])]
    aggregates = {"max_residual": max(checked) if checked else None}
    return RunReport(config=config, records=records, aggregates=aggregates)


_JOB_RUNNERS = {
    "anticoncentration": _job_anticoncentration,
    "identity-check": _job_identity_check,
    "certification": _job_certification,
    "iqp-route": _job_iqp_route,
    "partition-bench": _job_partition_bench,
}


def run_job(config: JobConfig) -> RunReport:
    config.validate()
    stream = RandomStream(config.seed)
    start = time.perf_counter()
    report = _JOB_RUNNERS[config.kind](config, stream)
    report.wall_seconds = time.perf_counter() - start
    return report


def write_report(report: RunReport, out_dir: str | Path, fmt: str = "json") -> list[Path]:
    """Write per-instance CSV and/or aggregate JSON; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = report.config.kind
    written = []
    if fmt in ("csv", "both"):
        path = out / f"{kind}.csv"
        header = CSV_HEADERS[kind]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=header)
            writer.writeheader()
            for record in report.records:
                writer.writerow({k: record[k] for k in header})
        written.append(path)
    if fmt in ("json", "both"):
        path = out / f"{kind}.json"
        body = report.payload()
        body["timing_seconds"] = report.wall_seconds  # non-deterministic entry
        with open(path, "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


def write_shots_csv(path: str | Path, shots: list[OutcomeRecord], instance: int = 0) -> Path:
    """Shot records as CSV rows (instance id, outcome bit-string)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "outcome"])
        for rec in shots:
            writer.writerow([instance, rec.bitstring()])
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quenchsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"quenchsim {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in JOB_STREAM:
        p = sub.add_parser(kind)
        p.add_argument("--config", type=str, default=None, help="JSON file with defaults")
        p.add_argument("--arch", choices=["I", "II", "III"], default="I")
        p.add_argument("--rows", type=int, default=2)
        p.add_argument("--cols", type=int, default=2)
        p.add_argument("--instances", type=int, default=10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=str, default="out")
        p.add_argument("--format", choices=["json", "csv", "both"], default="both")
        if kind == "certification":
            p.add_argument("--threshold-fidelity", type=float, default=0.9)
            p.add_argument("--eps", type=float, default=0.05)
            p.add_argument("--p-err", type=float, default=0.05)
            p.add_argument("--noise-p", type=float, default=0.0)
        if kind == "iqp-route":
            p.add_argument("--qubits", type=int, default=4)
    return parser


def config_from_args(args: argparse.Namespace) -> tuple[JobConfig, str, str]:
    values = {
        "kind": args.kind,
        "arch": args.arch,
        "rows": args.rows,
        "cols": args.cols,
        "instances": args.instances,
        "seed": args.seed,
    }
    if args.kind == "certification":
        values.update(
            threshold_fidelity=args.threshold_fidelity,
            eps=args.eps,
            p_err=args.p_err,
            noise_p=args.noise_p,
        )
    if args.kind == "iqp-route":
        values["qubits"] = args.qubits
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(JobConfig("anticoncentration").__dict__)
        if unknown:
            raise ValidationError(f"config: unknown fields {sorted(unknown)}")
        values.update({k: v for k, v in loaded.items()})
    return JobConfig(**values), args.out, args.format


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config, out_dir, fmt = config_from_args(args)
        report = run_job(config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface runtime errors verbatim
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    paths = write_report(report, out_dir, fmt)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
