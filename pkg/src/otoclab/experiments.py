"""Experiment recipes behind the CLI: spectrum dumps, OTOC scans, classical
regularity maps, size-scaling studies, the GOE baseline, and deterministic
CSV emission with provenance headers.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import numba
import scipy

from . import __version__
from . import algebra as al
from . import classical as cl
from . import otoc as ot
from . import spectra as sp
from .config import ConfigError, RunConfig

__all__ = ["Column", "ResultTable", "run_spectrum", "run_otoc_scan",
           "run_classical_map", "run_scaling", "run_goe", "write_outputs",
           "FORMAT_VERSION"]

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Column:
    name: str
    unit: str = ""


@dataclass
class ResultTable:
    """Rectangular table with provenance; None cells serialize as empty."""

    name: str
    columns: list
    rows: list
    provenance: dict

    def csv_text(self) -> str:
        lines = [f"# otoclab format_version={FORMAT_VERSION}"]
        prov = " ".join(f"{k}={v}" for k, v in sorted(self.provenance.items()))
        lines.append(f"# {prov}")
        units = " ".join(f"{c.name}:{c.unit or '-'}" for c in self.columns)
        lines.append(f"# units {units}")
        lines.append(",".join(c.name for c in self.columns))
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> list:
        names = [c.name for c in self.columns]
        if name not in names:
            raise ConfigError(f"unknown column {name}")
        k = names.index(name)
        return [row[k] for row in self.rows]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _provenance(cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "otoclab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _model_params(cfg: RunConfig) -> al.ModelParams:
    m = cfg.model
    return al.ModelParams(N=m.N, xi=m.xi, epsilon=m.epsilon)


def _block_spectra(params: al.ModelParams, basis: al.FockBasis):
    """Eigen-decompose the two parity blocks; merged order by energy."""
    H = al.build_hamiltonian(params, basis)
    B1, B2 = al.parity_blocks(H, basis)
    e1 = sp.diagonalize(B1)
    e2 = sp.diagonalize(B2)
    energies = np.concatenate([e1.energies, e2.energies])
    labels = np.concatenate([np.ones(e1.dim, dtype=int),
                             np.full(e2.dim, 2, dtype=int)])
    order = np.argsort(energies, kind="stable")
    return energies[order], labels[order]


def run_spectrum(cfg: RunConfig) -> dict[str, ResultTable]:
    """Eigenvalues with parity labels, ascending in energy."""
    params = _model_params(cfg)
    basis = al.build_basis(params.N)
    energies, labels = _block_spectra(params, basis)
    rows = [(n, float(e), int(p)) for n, (e, p) in enumerate(zip(energies, labels))]
    table = ResultTable(
        name="spectrum",
        columns=[Column("n"), Column("E_n", "model energy"), Column("parity")],
        rows=rows,
        provenance=_provenance(cfg, "spectrum"),
    )
    return {"spectrum": table}


def _eigen_operators(cfg: RunConfig, params: al.ModelParams,
                     hamiltonian: str = "u3"):
    """Diagonalized Hamiltonian plus the configured operator pair."""
    basis = al.build_basis(params.N)
    if cfg.parity_block is None:
        H = al.build_hamiltonian(params, basis)
        rotate = lambda op: op
    else:
        blocks = {1: 0, 2: 1}
        if cfg.parity_block not in blocks:
            raise ConfigError("parity_block must be null, 1, or 2")
        H = al.parity_blocks(al.build_hamiltonian(params, basis), basis)[
            blocks[cfg.parity_block]]
        rotate = lambda op: al.parity_blocks(op, basis)[blocks[cfg.parity_block]]
    if hamiltonian == "goe":
        dim = H.dim
        goe = sp.goe_sample(dim, (cfg.seed, 1, params.N))
        H = al.OperatorMatrix(goe.entries, H.basis_tag, True)
    eig = sp.diagonalize(H)
    ops = {}
    for name in {cfg.operators.v, cfg.operators.w}:
        op = rotate(al.generator_matrix(basis, name))
        ops[name] = sp.to_eigenbasis(op, eig)
    V = ops[cfg.operators.v]
    W = ops[cfg.operators.w]
    if cfg.operators.v == cfg.operators.w:
        W = V  # enables the same-operator fast path
    return eig, V, W


def _records_table(cfg: RunConfig, command: str, records,
                   dim: int) -> dict[str, ResultTable]:
    rows = []
    for r in records:
        rows.append((
            r.n, r.energy, r.mean, r.mean / dim, r.sigma, r.sigma / dim,
            r.wiggliness, r.lambda_q, r.t_tilde, r.fit_r2, r.curvature,
            r.flags,
        ))
    main = ResultTable(
        name=command,
        columns=[Column("n"), Column("E_n", "model energy"),
                 Column("mean"), Column("mean_per_dim"),
                 Column("sigma"), Column("sigma_per_dim"), Column("nu"),
                 Column("lambda_q", "1/model time"),
                 Column("t_tilde", "model time"),
                 Column("fit_R2"), Column("curvature"), Column("flags")],
        rows=rows,
        provenance=_provenance(cfg, command),
    )
    sm = cfg.smoothing
    energies = np.array([r.energy for r in records])
    nus = np.array([np.nan if r.wiggliness is None else r.wiggliness
                    for r in records])
    nu_curve = ot.moving_average(energies, nus, sm.nu_window)
    lam_ok = np.array([
        r.lambda_q if (r.lambda_q is not None and r.fit_r2 is not None
                       and r.fit_r2 >= sm.r2_min
                       and r.curvature is not None
                       and r.curvature <= sm.curvature_max)
        else np.nan
        for r in records
    ])
    lam_curve = ot.moving_average(energies, lam_ok, sm.lambda_window)
    srows = []
    for e, v, c in zip(nu_curve.energies, nu_curve.values, nu_curve.counts):
        lam_val = None
        if (lam_curve.energies.size
                and lam_curve.energies[0] <= e <= lam_curve.energies[-1]):
            lam_val = ot.interpolate_at(lam_curve, float(e))
        srows.append((float(e), float(v), lam_val, int(c)))
    smoothed = ResultTable(
        name=f"{command}_smoothed",
        columns=[Column("E", "model energy"), Column("nu_smoothed"),
                 Column("lambda_smoothed", "1/model time"),
                 Column("window_count")],
        rows=srows,
        provenance=_provenance(cfg, command),
    )
    return {command: main, f"{command}_smoothed": smoothed}


def run_otoc_scan(cfg: RunConfig, with_short_time: bool = True
                  ) -> dict[str, ResultTable]:
    """Per-state OTOC records plus the smoothed companion table."""
    params = _model_params(cfg)
    eig, V, W = _eigen_operators(cfg, params)
    sampler = ot.TimeSampler(t_min=cfg.sampler.t_min, t_max=cfg.sampler.t_max,
                             count=cfg.sampler.count, seed=cfg.seed)
    records = ot.scan_records(V, W, sampler, threads=cfg.threads,
                              with_short_time=with_short_time)
    return _records_table(cfg, "otoc", records, eig.dim)


def run_goe(cfg: RunConfig, with_short_time: bool = True
            ) -> dict[str, ResultTable]:
    """OTOC scan with the Hamiltonian replaced by a GOE sample of the same
    dimension; operators still come from the u(3) model at the configured N."""
    params = _model_params(cfg)
    eig, V, W = _eigen_operators(cfg, params, hamiltonian="goe")
    sampler = ot.TimeSampler(t_min=cfg.sampler.t_min, t_max=cfg.sampler.t_max,
                             count=cfg.sampler.count, seed=cfg.seed)
    records = ot.scan_records(V, W, sampler, threads=cfg.threads,
                              with_short_time=with_short_time)
    return _records_table(cfg, "goe", records, eig.dim)


def run_classical_map(cfg: RunConfig) -> dict[str, ResultTable]:
    """f_reg and lambda_bar over the configured (xi, E) probe grid."""
    c = cfg.classical
    section = cl.SectionSpec(plane=c.plane, orientation=c.orientation)
    grid_cfg = cl.SectionGridConfig(
        n_cells=c.n_cells, budget=c.budget, traj_time=c.traj_time,
        tol=c.tol, section=section,
    )
    jobs = [(float(xi), float(E)) for xi in c.xi_values for E in c.energies]

    def work(job):
        xi, E = job
        params = cl.ClassicalParams(xi=xi, epsilon=c.epsilon)
        try:
            r = cl.freg_at_energy(E, params, grid_cfg)
        except cl.DomainError:
            return (xi, E, None, None, None, 0, "no-section")
        return (xi, E, r.f_reg, r.lambda_bar, r.coverage, r.n_traj, "-", r)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    rows = [res[:7] for res in results]
    table = ResultTable(
        name="classical",
        columns=[Column("xi"), Column("E", "model energy"), Column("f_reg"),
                 Column("lambda_bar", "1/model time"), Column("coverage"),
                 Column("n_traj"), Column("flags")],
        rows=rows,
        provenance=_provenance(cfg, "classical"),
    )
    out = {"classical": table}
    if c.dump_sections:
        srows = []
        for res in results:
            if len(res) < 8:
                continue
            xi, E = res[0], res[1]
            for (c1, c2, lam) in res[7].points:
                srows.append((xi, E, float(c1), float(c2), float(lam)))
        cname1, cname2 = section.coords()
        out["sections"] = ResultTable(
            name="sections",
            columns=[Column("xi"), Column("E", "model energy"),
                     Column(cname1), Column(cname2),
                     Column("lambda_cl", "1/model time")],
            rows=srows,
            provenance=_provenance(cfg, "classical"),
        )
    return out


def _scaling_window(rule: str, N: int) -> int:
    if rule == "2N":
        return 2 * N
    try:
        return int(rule)
    except ValueError:
        raise ConfigError(f"scaling.window_rule must be '2N' or an integer, got {rule!r}")


def run_scaling(cfg: RunConfig) -> dict[str, ResultTable]:
    """Wiggliness scaling fit nu(E, N) = N^alpha e^-beta over system sizes."""
    s = cfg.scaling
    if len(s.sizes) < 3:
        raise ConfigError("scaling.sizes needs at least 3 entries")
    if s.hamiltonian not in ("u3", "goe"):
        raise ConfigError("scaling.hamiltonian must be 'u3' or 'goe'")
    nu_rows = []
    for N in s.sizes:
        sub = _with_model_n(cfg, int(N))
        params = _model_params(sub)
        eig, V, W = _eigen_operators(sub, params, hamiltonian=s.hamiltonian)
        sampler = ot.TimeSampler(t_min=cfg.sampler.t_min,
                                 t_max=cfg.sampler.t_max,
                                 count=cfg.sampler.count, seed=cfg.seed)
        records = ot.scan_records(V, W, sampler, with_short_time=False,
                                  threads=cfg.threads)
        energies = np.array([r.energy for r in records])
        nus = np.array([np.nan if r.wiggliness is None else r.wiggliness
                        for r in records])
        window = _scaling_window(s.window_rule, int(N))
        curve = ot.moving_average(energies, nus, window)
        for E in s.energies:
            try:
                val = ot.interpolate_at(curve, float(E))
            except al.InvalidParameterError:
                val = None
            nu_rows.append((float(E), int(N), val, window))
    nu_table = ResultTable(
        name="scaling_nu",
        columns=[Column("E", "model energy"), Column("N"),
                 Column("nu_smoothed"), Column("window")],
        rows=nu_rows,
        provenance=_provenance(cfg, "scaling"),
    )
    fit_rows = []
    size_list = "|".join(str(int(N)) for N in s.sizes)
    for E in s.energies:
        vals = [row[2] for row in nu_rows if row[0] == float(E)]
        if any(v is None or v <= 0 for v in vals):
            fit_rows.append((float(E), None, None, None, size_list, "undefined-nu"))
            continue
        fit = ot.fit_scaling(s.sizes, vals)
        fit_rows.append((float(E), fit.alpha, fit.beta, fit.residual,
                         size_list, "-"))
    fit_table = ResultTable(
        name="scaling",
        columns=[Column("E", "model energy"), Column("alpha"), Column("beta"),
                 Column("residual"), Column("N_list"), Column("flags")],
        rows=fit_rows,
        provenance=_provenance(cfg, "scaling"),
    )
    return {"scaling": fit_table, "scaling_nu": nu_table}


def _with_model_n(cfg: RunConfig, N: int) -> RunConfig:
    from dataclasses import replace
    return replace(cfg, model=replace(cfg.model, N=N))


def write_outputs(tables: dict[str, ResultTable], cfg: RunConfig,
                  command: str) -> str:
    """Write all tables plus a summary.json under out/<command>-<hash>/."""
    run_dir = os.path.join(cfg.out, f"{command}-{cfg.config_hash()}")
    os.makedirs(run_dir, exist_ok=True)
    written = {}
    for key, table in sorted(tables.items()):
        path = os.path.join(run_dir, f"{key}.csv")
        with open(path, "w", newline="\n") as fh:
            fh.write(table.csv_text())
        written[key] = os.path.basename(path)
    summary = {
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "format_version": FORMAT_VERSION,
        "tables": written,
    }
    with open(os.path.join(run_dir, "summary.json"), "w", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return run_dir


def read_table_csv(path: str) -> ResultTable:
    """Parse a CSV written by write_outputs back into a ResultTable."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    prov = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            continue
        body.append(line)
    header = body[0].split(",")
    rows = []
    for line in body[1:]:
        cells = line.split(",")
        row = []
        for cell in cells:
            if cell == "":
                row.append(None)
            else:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
        rows.append(tuple(row))
    return ResultTable(name=os.path.basename(path), rows=rows,
                       columns=[Column(h) for h in header], provenance=prov)
