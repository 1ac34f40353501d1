"""Experiment runner: spectrum, g2 scan, state tomography and process tomography.

Every runner takes an :class:`ExperimentConfig`, writes its files into the
output directory and returns the in-memory results. Numeric payloads are
deterministic functions of (config, seed).
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from . import counting, lattice, measurement, qstate, tomography
from .errors import ConstructionError, DomainError, UndefinedCorrelationError

PAPER_Z_MM = [20, 40, 60, 80, 100, 120, 140]

NAMED_CHANNELS = {
    "I": qstate.I2,
    "X": qstate.X,
    "Y": qstate.Y,
    "Z": qstate.Z,
    "S": qstate.PHASE_GATE,
    "H": qstate.HADAMARD_LIKE,
}

DEFAULT_CONFIG: dict[str, Any] = {
    "lattice": {
        "n_sites": 50,
        "defect_site": 26,
        "separation_weak_um": lattice.SEPARATION_WEAK_UM,
        "separation_strong_um": lattice.SEPARATION_STRONG_UM,
        "coupling_scale_per_mm": lattice.DEFAULT_C0,
        "coupling_decay_length_um": lattice.DEFAULT_D0,
        "ports": {},
    },
    "source": {
        "pair_probability": 3e-3,
        "background_s": 1e-4,
        "background_i": 1e-4,
        "window_count": 700_000_000,
    },
    "noise": {
        "channel_first": "S",
        "channel_second": "S",
        "depolarizing": 0.03,
        "exposure": 10000,
        "sampling": "poisson",
    },
    "disorder": {
        "kind": "coupling",
        "strength": 0.0,
        "ensemble_strength": 0.1,
        "ensemble_seeds": 100,
    },
    "z_mm": PAPER_Z_MM,
    "process_z_mm": 140,
    "seed": 0,
    "output_dir": "results",
}

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PROB = {"type": "number", "minimum": 0, "exclusiveMaximum": 1}
_MATRIX = {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": _NUM}}
_CHANNEL = {
    "oneOf": [
        {"type": "string", "enum": sorted(NAMED_CHANNELS)},
        {"type": "object", "additionalProperties": False, "required": ["re", "im"], "properties": {"re": _MATRIX, "im": _MATRIX}},
    ]
}
_SITE = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "topoqlab experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_sites": {"type": "integer", "minimum": 2},
                "defect_site": {"type": ["integer", "null"], "minimum": 2},
                "separation_weak_um": _POS,
                "separation_strong_um": _POS,
                "coupling_scale_per_mm": _POS,
                "coupling_decay_length_um": _POS,
                "ports": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"A": _SITE, "B": _SITE, "C": _SITE},
                },
            },
        },
        "source": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pair_probability": _PROB,
                "background_s": _PROB,
                "background_i": _PROB,
                "window_count": {"type": "integer", "minimum": 1},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "channel_first": _CHANNEL,
                "channel_second": _CHANNEL,
                "depolarizing": {"type": "number", "minimum": 0, "maximum": 1},
                "exposure": _POS,
                "sampling": {"enum": ["poisson", "expected"]},
            },
        },
        "disorder": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["coupling", "on_site"]},
                "strength": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "ensemble_strength": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "ensemble_seeds": {"type": "integer", "minimum": 0},
            },
        },
        "z_mm": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "process_z_mm": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _channel_matrix(spec) -> np.ndarray:
    if isinstance(spec, str):
        return NAMED_CHANNELS[spec]
    k = np.asarray(spec["re"], dtype=float) + 1j * np.asarray(spec["im"], dtype=float)
    if not qstate.is_unitary(k, tol=1e-8):
        raise ConfigError("channel matrix is not unitary")
    return k


@dataclass
class ExperimentConfig:
    """Resolved configuration (defaults merged, schema-validated)."""

    raw: dict
    lattice: lattice.LatticeSpec = field(init=False)
    source: counting.SourceModel = field(init=False)

    def __post_init__(self):
        lat = self.raw["lattice"]
        ports = lat.get("ports", {})
        try:
            self.lattice = lattice.LatticeSpec(
                n_sites=lat["n_sites"],
                defect_site=lat["defect_site"],
                separation_weak=lat["separation_weak_um"],
                separation_strong=lat["separation_strong_um"],
                c0=lat["coupling_scale_per_mm"],
                d0=lat["coupling_decay_length_um"],
                port_a=ports.get("A"),
                port_b=ports.get("B"),
                port_c=ports.get("C"),
            )
            src = self.raw["source"]
            self.source = counting.SourceModel(
                pair_probability=src["pair_probability"],
                background_s=src["background_s"],
                background_i=src["background_i"],
                window_count=src["window_count"],
            )
            lattice.dimerization_pattern(self.lattice.n_sites, self.lattice.defect_site)
        except (DomainError, ConstructionError) as exc:
            raise ConfigError(str(exc)) from exc
        self.channel_first = _channel_matrix(self.raw["noise"]["channel_first"])
        self.channel_second = _channel_matrix(self.raw["noise"]["channel_second"])

    @classmethod
    def from_dict(cls, doc: dict | None = None, seed: int | None = None, output_dir: str | None = None) -> ExperimentConfig:
        doc = doc or {}
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        raw = _merge(DEFAULT_CONFIG, doc)
        if seed is not None:
            raw["seed"] = int(seed)
        if output_dir is not None:
            raw["output_dir"] = str(output_dir)
        return cls(raw)

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> ExperimentConfig:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc, **kwargs)

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def out(self) -> Path:
        return Path(self.raw["output_dir"])

    @property
    def z_mm(self) -> list[float]:
        return [float(z) for z in self.raw["z_mm"]]

    @property
    def noise(self) -> dict:
        return self.raw["noise"]

    @property
    def disorder(self) -> dict:
        return self.raw["disorder"]

    def hash(self) -> str:
        """SHA-256 of the resolved config, excluding the output directory."""
        payload = {k: v for k, v in self.raw.items() if k != "output_dir"}
        return hashlib.sha256(canonical_json(payload).encode()).hexdigest()

    def derived_seed(self, *stream: int) -> int:
        return int(np.random.SeedSequence([self.seed, *stream]).generate_state(1)[0])


# stream ids for derived seeds
_CHIP, _G2, _STATE, _PROCESS, _ENSEMBLE = range(5)


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _r12(x: float) -> float:
    return float(fmt(float(x)))


def matrix_json(m: np.ndarray) -> dict:
    m = np.asarray(m)
    return {"re": [[_r12(v) for v in row] for row in m.real], "im": [[_r12(v) for v in row] for row in m.imag]}


def matrix_from_json(doc: dict) -> np.ndarray:
    return np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)


def _header(cfg: ExperimentConfig) -> list[str]:
    return [f"config_hash={cfg.hash()}", f"seed={cfg.seed}", f"tool_version={__version__}"]


def _write_csv(path: Path, cfg: ExperimentConfig, columns: list[str], rows: list[list], trailer: list[str] = ()) -> Path:
    buf = io.StringIO()
    for line in _header(cfg):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    for line in trailer:
        buf.write(f"# {line}\n")
    path.write_text(buf.getvalue())
    return path


def _write_json(path: Path, cfg: ExperimentConfig, payload: dict) -> Path:
    doc = {"config_hash": cfg.hash(), "seed": cfg.seed, "tool_version": __version__, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def chip_hamiltonian(cfg: ExperimentConfig, index: int) -> lattice.Hamiltonian:
    """Lattice for the ``index``-th z sample; each z point is its own chip."""
    strength = cfg.disorder["strength"]
    if strength == 0:
        return lattice.build_hamiltonian(cfg.lattice)
    return lattice.add_disorder(cfg.lattice, strength, cfg.disorder["kind"], seed=cfg.derived_seed(_CHIP, index))


# ---------------------------------------------------------------------------
# spectrum


@dataclass
class SpectrumResult:
    decomposition: lattice.SpectralDecomposition
    mid_gap: np.ndarray
    densities: list[lattice.ModeDensity]
    ensemble: list[dict]
    files: list[Path]


def disorder_ensemble(spec: lattice.LatticeSpec, strength: float, kind: str, seeds, n_mid: int = 2) -> list[dict]:
    """Per-seed mid-gap energies measured against half the ideal chain's gap."""
    ideal = lattice.eigendecompose(lattice.build_hamiltonian(spec))
    half_gap = 0.5 * ideal.gap()
    rows = []
    for seed in seeds:
        dec = lattice.eigendecompose(lattice.add_disorder(spec, strength, kind, seed=int(seed)))
        mid = np.sort(dec.energies[np.argsort(np.abs(dec.energies), kind="stable")[:n_mid]])
        worst = float(np.abs(mid).max())
        rows.append(
            {
                "seed": int(seed),
                "kind": kind,
                "strength": float(strength),
                "mid_gap_energies": mid,
                "max_abs_over_half_gap": worst / half_gap,
                "within_tenth_half_gap": bool(worst <= 0.1 * half_gap),
            }
        )
    return rows


def run_spectrum(cfg: ExperimentConfig) -> SpectrumResult:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.lattice
    dec = lattice.eigendecompose(lattice.build_hamiltonian(spec))
    mid = dec.mid_gap_indices()
    files = [
        _write_csv(
            out / "spectrum.csv",
            cfg,
            ["mode", "energy_per_mm", "mid_gap"],
            [[m + 1, float(e), int(m in set(mid.tolist()))] for m, e in enumerate(dec.energies)],
            [f"mid_gap_count={mid.size}"],
        )
    ]

    sites = sorted({spec.port_a, spec.port_b, spec.port_c})
    width = dec.gap() / 20
    if width <= 0:
        width = max(float(np.ptp(dec.energies)), 1e-12) / 20
    grid = lattice.default_energy_grid(dec, width)
    densities = [lattice.mode_density(dec, s, grid, width) for s in sites]
    files.append(
        _write_csv(
            out / "mode_density.csv",
            cfg,
            ["energy_per_mm"] + [f"D_site{s}" for s in sites],
            [[float(e)] + [float(d.density[i]) for d in densities] for i, e in enumerate(grid)],
            [f"broadening_width_per_mm={fmt(width)}"],
        )
    )

    ensemble: list[dict] = []
    n_seeds = cfg.disorder["ensemble_seeds"]
    if n_seeds > 0 and mid.size > 0:
        seeds = [cfg.derived_seed(_ENSEMBLE, i) for i in range(n_seeds)]
        for kind in ("coupling", "on_site"):
            ensemble += disorder_ensemble(spec, cfg.disorder["ensemble_strength"], kind, seeds, n_mid=mid.size)
        rows = [
            [r["kind"], r["seed"], r["strength"]]
            + [float(e) for e in r["mid_gap_energies"]]
            + [float(r["max_abs_over_half_gap"]), int(r["within_tenth_half_gap"])]
            for r in ensemble
        ]
        files.append(
            _write_csv(
                out / "disorder_ensemble.csv",
                cfg,
                ["kind", "seed", "strength"] + [f"mid_gap_energy_{i + 1}" for i in range(mid.size)] + ["max_abs_over_half_gap", "within_tenth_half_gap"],
                rows,
            )
        )
    return SpectrumResult(dec, mid, densities, ensemble, files)


# ---------------------------------------------------------------------------
# g2


@dataclass
class G2Result:
    rows: list[dict]
    fit: counting.ExponentialFit | None
    files: list[Path]

    def series(self, case: str) -> tuple[np.ndarray, np.ndarray]:
        pts = [(r["z"], r["g2"]) for r in self.rows if r["case"] == case and not r["flagged"]]
        z, g = zip(*pts) if pts else ((), ())
        return np.array(z), np.array(g)


def g2_cases(spec: lattice.LatticeSpec) -> dict[str, tuple[int, int]]:
    return {"topological": (spec.port_a, spec.port_b), "trivial": (spec.port_b, spec.port_c)}


def run_g2_scan(cfg: ExperimentConfig) -> G2Result:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    sampling = cfg.noise["sampling"]
    rows = []
    for i, z in enumerate(cfg.z_mm):
        u = lattice.propagator(chip_hamiltonian(cfg, i), z)
        for j, (case, (site_s, site_i)) in enumerate(g2_cases(cfg.lattice).items()):
            eta_s = counting.channel_transmission(u, site_s, site_s)
            eta_i = counting.channel_transmission(u, site_i, site_i)
            if sampling == "expected":
                rec = counting.expected_record(cfg.source, eta_s, eta_i)
            else:
                rec = counting.simulate_counts(cfg.source, eta_s, eta_i, seed=cfg.derived_seed(_G2, i, j))
            try:
                value, flagged = counting.g2(rec), False
            except UndefinedCorrelationError:
                value, flagged = float("nan"), True
            rows.append(
                {
                    "z": z,
                    "case": case,
                    "eta_s": eta_s,
                    "eta_i": eta_i,
                    "g2": value,
                    "singles_s": rec.singles_s,
                    "singles_i": rec.singles_i,
                    "coincidences": rec.coincidences,
                    "flagged": flagged,
                }
            )
    result = G2Result(rows, None, [])
    z_t, g_t = result.series("trivial")
    trailer = []
    if z_t.size >= 3 and np.ptp(z_t) > 0:
        result.fit = counting.fit_exponential(z_t, g_t)
        trailer.append(
            f"fit_trivial amplitude={fmt(result.fit.amplitude)} rate_per_mm={fmt(result.fit.rate)} "
            f"residual_norm={fmt(result.fit.residual_norm)}"
        )
    else:
        trailer.append("fit_trivial unavailable (fewer than 3 distinct z points)")
    cols = ["z_mm", "case", "eta_s", "eta_i", "g2", "singles_s", "singles_i", "coincidences", "flagged"]
    result.files.append(
        _write_csv(
            out / "g2_vs_z.csv",
            cfg,
            cols,
            [[float(r["z"]), r["case"], r["eta_s"], r["eta_i"], float(r["g2"]), float(r["singles_s"]), float(r["singles_i"]), float(r["coincidences"]), int(r["flagged"])] for r in rows],
            trailer,
        )
    )
    return result


# ---------------------------------------------------------------------------
# state tomography


ARMS = ("one_in_lattice", "both_in_lattice")


def lattice_output_state(cfg: ExperimentConfig, arm: str) -> np.ndarray:
    """Singlet after the polarisation channels of the photons that travel through the chip.

    ``one_in_lattice``: only the idler (second photon, input B).
    ``both_in_lattice``: signal at input A and idler at input B.
    """
    if arm not in ARMS:
        raise DomainError(f"arm must be one of {ARMS}")
    rho = qstate.singlet()
    p = cfg.noise["depolarizing"]
    sides = [("second", cfg.channel_second)]
    if arm == "both_in_lattice":
        sides.insert(0, ("first", cfg.channel_first))
    for side, k in sides:
        rho = qstate.apply_one_sided_channel(rho, k, side)
        rho = qstate.depolarize(rho, p, side)
    return rho


@dataclass
class StateTomoResult:
    rows: list[dict]
    estimates: dict
    files: list[Path]


def run_state_tomo(cfg: ExperimentConfig, arms=ARMS) -> StateTomoResult:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    settings = measurement.build_state_tomo_settings()
    spec = cfg.lattice
    rows, estimates, files = [], {}, []
    for a_idx, arm in enumerate(ARMS):
        if arm not in arms:
            continue
        truth = lattice_output_state(cfg, arm)
        for i, z in enumerate(cfg.z_mm):
            u = lattice.propagator(chip_hamiltonian(cfg, i), z)
            eta = u.transmission(spec.port_b, spec.port_b)
            if arm == "both_in_lattice":
                eta *= u.transmission(spec.port_a, spec.port_a)
            exposure = float(cfg.noise["exposure"])
            table = measurement.expected_counts(truth, settings, exposure)
            seed = cfg.derived_seed(_STATE, a_idx, i)
            if cfg.noise["sampling"] == "poisson":
                table = measurement.sample_counts(table, seed)
            est = tomography.mle_state(table)
            metrics = est.metrics(reference=truth)
            tag = f"{arm}_z{int(round(z)):03d}"
            estimates[(arm, z)] = est
            table.to_csv(out / f"counts_{tag}.csv", header=_header(cfg))
            files.append(out / f"counts_{tag}.csv")
            files.append(
                _write_json(
                    out / f"rho_{tag}.json",
                    cfg,
                    {
                        "arm": arm,
                        "z_mm": _r12(z),
                        "sampling_seed": seed,
                        "exposure_per_setting": _r12(exposure),
                        "transmission": _r12(eta),
                        "rho": matrix_json(est.rho),
                        "metrics": {k: _r12(v) for k, v in metrics.items()},
                        "convergence": {
                            "converged": est.converged,
                            "iterations": est.iterations,
                            "log_likelihood": _r12(est.log_likelihood),
                            "initial_log_likelihood": _r12(est.initial_log_likelihood),
                            "linear_inversion_min_eigenvalue": _r12(est.linear_min_eigenvalue),
                        },
                    },
                )
            )
            rows.append(
                {
                    "arm": arm,
                    "z": z,
                    "seed": seed,
                    "exposure": exposure,
                    "transmission": eta,
                    "concurrence": metrics["concurrence"],
                    "purity": metrics["purity"],
                    "fidelity": metrics["fidelity"],
                    "converged": est.converged,
                    "flagged": not est.converged,
                }
            )
    cols = ["arm", "z_mm", "seed", "exposure_per_setting", "transmission", "concurrence", "purity", "fidelity_to_truth", "converged", "flagged"]
    files.append(
        _write_csv(
            out / "metrics.csv",
            cfg,
            cols,
            [[r["arm"], float(r["z"]), r["seed"], float(r["exposure"]), r["transmission"], r["concurrence"], r["purity"], r["fidelity"], int(r["converged"]), int(r["flagged"])] for r in rows],
        )
    )
    return StateTomoResult(rows, estimates, files)


# ---------------------------------------------------------------------------
# process tomography


@dataclass
class ProcessTomoResult:
    chi: tomography.ChiMatrix
    fidelity_phase_gate: float
    fidelity_configured: float
    nearest_unitary: np.ndarray
    files: list[Path]


def run_process_tomo(cfg: ExperimentConfig) -> ProcessTomoResult:
    """Single-photon process tomography on the idler arm (input B); the signal only heralds."""
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.lattice
    z = float(cfg.raw["process_z_mm"])
    idx = cfg.z_mm.index(z) if z in cfg.z_mm else len(cfg.z_mm)
    u = lattice.propagator(chip_hamiltonian(cfg, idx), z)
    eta = u.transmission(spec.port_b, spec.port_b)
    exposure = float(cfg.noise["exposure"])
    k = cfg.channel_second
    p = cfg.noise["depolarizing"]

    def channel(rho):
        return qstate.depolarize(k @ rho @ k.conj().T, p)

    records = tomography.process_counts(channel, exposure)
    if cfg.noise["sampling"] == "poisson":
        records = {
            prep: measurement.sample_counts(t, cfg.derived_seed(_PROCESS, j)) for j, (prep, t) in enumerate(records.items())
        }
    chi = tomography.process_tomography(records)
    ideal_s = tomography.chi_from_unitary(qstate.PHASE_GATE)
    f_s = tomography.process_fidelity(chi.matrix, ideal_s)
    f_cfg = tomography.process_fidelity(chi.matrix, tomography.chi_from_unitary(k))
    k_hat = tomography.nearest_unitary(chi.matrix)

    rows = []
    for prep, table in records.items():
        obs = table.observed if table.observed is not None else [None] * len(table.settings)
        for s, e, o in zip(table.settings, table.expected, obs):
            rows.append([prep, s.output, float(e), "" if o is None else int(o)])
    files = [_write_csv(out / "process_counts.csv", cfg, ["setting_1", "setting_2", "expected", "observed"], rows)]
    files.append(
        _write_json(
            out / "chi.json",
            cfg,
            {
                "z_mm": _r12(z),
                "basis": list(tomography.PAULI_LABELS),
                "layout": "eps(rho) = sum_mn chi[m][n] E_n rho E_m^dagger",
                "exposure_per_setting": _r12(exposure),
                "transmission": _r12(eta),
                "chi": matrix_json(chi.matrix),
                "ideal_phase_gate_chi": matrix_json(ideal_s),
                "constraints": {
                    "psd_margin": _r12(chi.psd_margin),
                    "trace_preservation_defect": _r12(chi.tp_defect),
                    "penalty_weight": _r12(chi.penalty_weight),
                    "residual_norm": _r12(chi.residual_norm),
                },
                "metrics": {
                    "process_fidelity_phase_gate": _r12(f_s),
                    "process_fidelity_configured_channel": _r12(f_cfg),
                },
                "nearest_unitary": matrix_json(k_hat),
            },
        )
    )
    return ProcessTomoResult(chi, f_s, f_cfg, k_hat, files)


# ---------------------------------------------------------------------------


def write_manifest(cfg: ExperimentConfig, files: list[Path], wall_clock_s: float) -> Path:
    path = cfg.out / "manifest.json"
    doc = {
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "tool_version": __version__,
        "files": sorted(str(Path(f).relative_to(cfg.out)) for f in files),
        "wall_clock_s": round(wall_clock_s, 3),
        "config": cfg.raw,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def run_all(cfg: ExperimentConfig) -> list[Path]:
    files: list[Path] = []
    files += run_spectrum(cfg).files
    files += run_g2_scan(cfg).files
    files += run_state_tomo(cfg).files
    files += run_process_tomo(cfg).files
    return files


def timed(fn, cfg: ExperimentConfig) -> tuple[Any, float]:
    t0 = time.perf_counter()
    result = fn(cfg)
    return result, time.perf_counter() - t0
