"""Run configuration and the solve pipeline.

A run goes far field -> grid -> fixed-point iteration -> reconstruction ->
checks, and leaves everything it produced in one output directory::

    config.ini      normalized copy of the configuration
    farfield.json   downstream state and interface offset
    iterations.csv  one row per fixed-point step
    nodes.csv       x, Y, y, u, v, p, rho, layer (contact nodes once per layer)
    contact.csv     x, g_cd, omega_* eta
    walls.csv       sampled walls and slopes
    report.txt / report.json
"""
from __future__ import annotations

import configparser
import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .duct import WallPerturbation
from .errors import ConfigError, ContactDuctError, DomainError, FarFieldError, SubsonicityError
from .farfield import FarFieldSolution, LeftState, solve_farfield
from .fields import (EulerianSolution, read_solution, reconstruct, to_eulerian,
                     write_contact_csv, write_nodes_csv, write_walls_csv)
from .gas import GasConstants
from .grid import LagrangianGrid, build_grid
from .picard import PicardOptions, PicardResult, run
from .verify import VerificationReport, asymptotic_deviation, l2_norms, verify_solution

log = logging.getLogger(__name__)

OUT_ENV = "CONTACT_DUCT_OUT"

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

SWEEP_PARAMS = ("omega", "sigma", "R", "resolution")


@dataclass
class RunConfig:
    gamma: float = 1.4
    u_top: float = 0.5
    u_bot: float = 0.3
    p: float = 1.0
    rho_top: float = 1.0
    rho_bot: float = 1.2
    omega_plus: float = 0.0
    omega_minus: float = 0.0
    a_plus: float = 0.0
    a_minus: float = 0.0
    width: float = 1.0
    profile: str = "gauss"
    top_table: str = ""
    bottom_table: str = ""
    sigma: float | None = None
    R: float = 10.0
    nx: int = 128
    ny_top: int = 16
    ny_bot: int = 16
    tol_fp: float = 1e-11
    tol_lin: float = 1e-12
    tol_res: float = 1e-9
    max_iter: int = 60
    theta: float = 1.0
    init: str = "phi0"
    output: str = "runs"
    name: str = "run"

    # section -> keys, in file order
    SECTIONS = {
        "gas": ("gamma",),
        "left": ("u_top", "u_bot", "p", "rho_top", "rho_bot"),
        "walls": ("omega_plus", "omega_minus", "a_plus", "a_minus", "width", "profile",
                  "top_table", "bottom_table", "sigma"),
        "grid": ("R", "nx", "ny_top", "ny_bot"),
        "solver": ("tol_fp", "tol_lin", "tol_res", "max_iter", "theta", "init"),
        "output": ("output", "name"),
    }

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cfg = cls.from_string(path.read_text(), base=path.parent)
        if "name" not in _raw_keys(path.read_text()):
            cfg.name = path.stem
        return cfg

    @classmethod
    def from_string(cls, text: str, base: Path | None = None) -> "RunConfig":
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config not parseable: {exc}") from exc
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for section in parser.sections():
            allowed = cls.SECTIONS.get(section)
            if allowed is None:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in allowed:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                values[key] = _convert(key, raw, types[key])
        for key in ("top_table", "bottom_table"):
            if values.get(key) and base is not None and not Path(values[key]).is_absolute():
                values[key] = str((base / values[key]).resolve())
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def to_ini(self) -> str:
        lines = []
        for section, keys in self.SECTIONS.items():
            lines.append(f"[{section}]")
            for k in keys:
                v = getattr(self, k)
                if v is None or v == "":
                    continue
                lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
            lines.append("")
        return "\n".join(lines)

    @property
    def effective_sigma(self) -> float:
        if self.sigma is not None:
            return self.sigma
        return max(abs(self.omega_plus), abs(self.omega_minus), abs(self.a_plus), abs(self.a_minus))

    def validate(self) -> None:
        if not self.gamma > 1.0:
            raise ConfigError("gamma must exceed 1")
        left = self.left_state()
        gc = GasConstants(self.gamma)
        try:
            left.validate(gc)
        except (SubsonicityError, DomainError) as exc:
            raise ConfigError(str(exc)) from exc
        amps = max(abs(self.omega_plus), abs(self.omega_minus), abs(self.a_plus), abs(self.a_minus))
        tables = bool(self.top_table or self.bottom_table)
        if self.effective_sigma < 0:
            raise ConfigError("sigma must be positive")
        if self.effective_sigma == 0 and (amps > 0 or tables):
            raise ConfigError("sigma must be positive for a perturbed duct")
        if tables and not (self.top_table and self.bottom_table):
            raise ConfigError("tabulated walls need both top_table and bottom_table")
        if self.profile not in ("gauss", "lorentz"):
            raise ConfigError(f"unknown wall profile {self.profile!r}")
        if self.width <= 0:
            raise ConfigError("wall bump width must be positive")
        if self.R < 10:
            raise ConfigError("R must be at least 10")
        if min(self.nx, self.ny_top, self.ny_bot) < 4:
            raise ConfigError("grid counts must be at least 4")
        if min(self.tol_fp, self.tol_lin, self.tol_res) <= 0:
            raise ConfigError("tolerances must be positive")
        if self.init not in ("phi0", "phi_l"):
            raise ConfigError(f"unknown initialization {self.init!r}")
        if not 0 < self.theta <= 1:
            raise ConfigError("theta must lie in (0, 1]")

    def left_state(self) -> LeftState:
        return LeftState(self.u_top, self.u_bot, self.p, self.rho_top, self.rho_bot)

    def walls(self) -> WallPerturbation:
        if self.top_table:
            return WallPerturbation.from_tables(self.top_table, self.bottom_table, self.omega_plus,
                                                self.omega_minus, self.effective_sigma)
        return WallPerturbation.bump_family(self.omega_plus, self.omega_minus, self.a_plus,
                                            self.a_minus, width=self.width, sigma=self.effective_sigma,
                                            profile=self.profile)

    def picard_options(self) -> PicardOptions:
        return PicardOptions(tol_fp=self.tol_fp, tol_res=self.tol_res, tol_lin=self.tol_lin,
                             max_iter=self.max_iter, theta=self.theta, init=self.init)

    def output_root(self) -> Path:
        return Path(os.environ.get(OUT_ENV) or self.output)

    def with_param(self, name: str, value: float) -> "RunConfig":
        """Copy with one sweep parameter changed.

        ``omega`` sets ``omega_plus`` (``omega_minus`` kept); ``sigma`` rescales
        every amplitude by ``value / sigma``; ``R`` keeps ``hx`` fixed;
        ``resolution`` sets ``nx`` and scales the ``Y`` counts with it.
        """
        if name == "omega":
            return replace(self, omega_plus=float(value))
        if name == "sigma":
            s0 = self.effective_sigma
            if s0 <= 0:
                raise ConfigError("sigma sweep needs a perturbed base configuration")
            k = float(value) / s0
            return replace(self, omega_plus=k * self.omega_plus, omega_minus=k * self.omega_minus,
                           a_plus=k * self.a_plus, a_minus=k * self.a_minus, sigma=float(value))
        if name == "R":
            nx = int(round(self.nx * float(value) / self.R))
            return replace(self, R=float(value), nx=nx)
        if name == "resolution":
            k = int(value) / self.nx
            return replace(self, nx=int(value), ny_top=max(4, int(round(self.ny_top * k))),
                           ny_bot=max(4, int(round(self.ny_bot * k))))
        raise ConfigError(f"sweep parameter must be one of {', '.join(SWEEP_PARAMS)}")


def _raw_keys(text: str) -> set[str]:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    return {k for s in parser.sections() for k in parser[s]}


def _convert(key: str, raw: str, typ) -> object:
    raw = raw.strip()
    typ = str(typ)
    try:
        if typ.startswith("int"):
            return int(raw)
        if typ.startswith("float"):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


@dataclass
class RunResult:
    status: int
    message: str = ""
    out_dir: Path | None = None
    ff: FarFieldSolution | None = None
    grid: LagrangianGrid | None = None
    picard: PicardResult | None = None
    solution: EulerianSolution | None = None
    report: VerificationReport | None = None
    extra: dict = field(default_factory=dict)


def farfield_of(cfg: RunConfig) -> FarFieldSolution:
    return solve_farfield(cfg.left_state(), cfg.omega_plus, cfg.omega_minus, GasConstants(cfg.gamma))


def _write_history(result: PicardResult, path: Path) -> None:
    rows = [asdict(r) for r in result.history]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})


def read_history(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def run_pipeline(cfg: RunConfig, out_dir: str | Path | None = None, write: bool = True,
                 on_step=None) -> RunResult:
    """Solve one configuration; never raises for solver failures, returns an exit status.

    ``on_step`` is handed to the fixed-point iteration (see :func:`picard.run`).
    """
    out = Path(out_dir) if out_dir is not None else cfg.output_root() / cfg.name
    try:
        cfg.validate()
        gc = GasConstants(cfg.gamma)
        ff = farfield_of(cfg)
        wp = cfg.walls()
    except (ConfigError, FarFieldError, SubsonicityError, DomainError, OSError, ValueError) as exc:
        return RunResult(EXIT_CONFIG, str(exc))

    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(cfg.to_ini())
        (out / "farfield.json").write_text(json.dumps(ff.summary(), indent=2) + "\n")

    grid = build_grid(cfg.R, cfg.nx, cfg.ny_top, cfg.ny_bot, ff)
    try:
        pic = run(wp, ff, grid, gc, cfg.picard_options(), on_step=on_step)
        sol = to_eulerian(reconstruct(pic.phi, grid, ff, gc), wp)
    except ContactDuctError as exc:
        log.error("%s", exc)
        return RunResult(EXIT_DIVERGED, str(exc), out, ff, grid)

    history = [asdict(r) for r in pic.history]
    report = verify_solution(sol, ff, history, tol_res=cfg.tol_res * (ff.m_top + ff.m_bot))
    if write:
        _write_history(pic, out / "iterations.csv")
        write_nodes_csv(sol, out / "nodes.csv")
        write_contact_csv(sol, ff, out / "contact.csv")
        write_walls_csv(sol, out / "walls.csv")
        report.write(out)
    status = EXIT_OK if report.passed else EXIT_CHECKS
    msg = "all checks passed" if report.passed else "failed: " + ", ".join(c.name for c in report.failures())
    return RunResult(status, msg, out if write else None, ff, grid, pic, sol, report)


def verify_run_dir(run_dir: str | Path) -> tuple[int, VerificationReport | None, str]:
    """Re-check a finished run from its files alone."""
    run_dir = Path(run_dir)
    try:
        cfg = RunConfig.from_file(run_dir / "config.ini")
        ff = farfield_of(cfg)
        sol = read_solution(run_dir)
        history = read_history(run_dir / "iterations.csv")
    except (ConfigError, FarFieldError, SubsonicityError, OSError, ValueError) as exc:
        return EXIT_CONFIG, None, str(exc)
    report = verify_solution(sol, ff, history, tol_res=cfg.tol_res * (ff.m_top + ff.m_bot))
    report.write(run_dir)
    return (EXIT_OK if report.passed else EXIT_CHECKS), report, ""


SWEEP_COLUMNS = ("value", "status", "p_r", "omega_star", "l2_contact", "l2_state",
                 "max_pressure_jump", "asymptotic_right", "m_star", "iterations")


def sweep(cfg: RunConfig, param: str, values: list[float], out_dir: str | Path | None = None) -> Path:
    """One run per value in its own subdirectory, aggregated into ``sweep.csv``."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {', '.join(SWEEP_PARAMS)}")
    root = Path(out_dir) if out_dir is not None else cfg.output_root() / f"{cfg.name}_sweep_{param}"
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for k, value in enumerate(values):
        row = {c: "" for c in SWEEP_COLUMNS}
        row["value"] = f"{value:.17g}"
        try:
            sub = cfg.with_param(param, value)
            res = run_pipeline(sub, root / f"{param}_{k:02d}")
        except (ConfigError, ValueError) as exc:
            res = RunResult(EXIT_CONFIG, str(exc))
        if res.solution is None:
            row["status"] = f"failed({res.status}): {res.message}"
        else:
            n_g, n_U = l2_norms(res.solution, res.ff)
            sol = res.solution
            row.update(
                status="ok" if res.status == EXIT_OK else f"checks_failed({res.message})",
                p_r=f"{res.ff.p_r:.17g}", omega_star=f"{res.ff.omega_star:.17g}",
                l2_contact=f"{n_g:.17g}", l2_state=f"{n_U:.17g}",
                max_pressure_jump=f"{float(np.abs(sol.top.p[0] - sol.bottom.p[-1]).max()):.17g}",
                asymptotic_right=f"{asymptotic_deviation(sol, res.ff)[1]:.17g}",
                m_star=f"{1.0 / min((1.0 / (lf.rho * lf.u)).min() for lf in (sol.top, sol.bottom)):.17g}",
                iterations=str(res.picard.iterations),
            )
        rows.append(row)
    path = root / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    return path
