"""Command-line driver: solve a configured problem, run error sweeps, or
compute iteration spectra, writing CSV artifacts with a fixed numeric format.

Configuration files are flat `key = value` text with `#` comments.
Coefficient expressions use a small grammar: numbers, the coordinate
variable, pi, + - * /, parentheses, sin(x), exp(x), and
piecewise(threshold, left, right) which selects left where the coordinate
is at or below the threshold.

Exit codes: 0 success, 2 configuration error, 3 cross-section (absorption)
violation, 4 iteration did not converge.
"""

import argparse
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .analysis import convergence_study, error_propagation_spectrum, manufactured_data
from .angular import AngularGrid
from .assembly import ProblemData, assemble_load, assemble_system, scalar_flux
from .solver import SolverConfig, source_iteration
from .spatial import CrossSectionError, CrossSections, SpatialMesh

__all__ = ["ConfigError", "RunConfig", "main", "parse_config", "parse_expression"]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# coefficient expression grammar

class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.token = None
        self.advance()

    def advance(self):
        text, i = self.text, self.pos
        while i < len(text) and text[i].isspace():
            i += 1
        if i >= len(text):
            self.token = ("end", "")
            self.pos = i
            return
        ch = text[i]
        if ch.isdigit() or ch == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < len(text) and text[j] in "eE":
                k = j + 1
                if k < len(text) and text[k] in "+-":
                    k += 1
                if k < len(text) and text[k].isdigit():
                    j = k
                    while j < len(text) and text[j].isdigit():
                        j += 1
            self.token = ("number", text[i:j])
            self.pos = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            self.token = ("name", text[i:j])
            self.pos = j
        elif ch in "+-*/(),":
            self.token = ("op", ch)
            self.pos = i + 1
        else:
            raise ConfigError(f"unexpected character {ch!r} in expression {text!r}")


def parse_expression(text: str, var: str = "z"):
    """Compile a coefficient expression into a vectorized callable of one variable."""
    tok = _Tokenizer(text)

    def expect(value):
        if tok.token != ("op", value):
            raise ConfigError(f"expected {value!r} in expression {text!r}")
        tok.advance()

    def atom():
        kind, value = tok.token
        if kind == "number":
            tok.advance()
            try:
                const = float(value)
            except ValueError as err:
                raise ConfigError(f"bad number {value!r} in expression {text!r}") from err
            return lambda x: const
        if kind == "name":
            tok.advance()
            if tok.token == ("op", "("):
                tok.advance()
                args = [expr()]
                while tok.token == ("op", ","):
                    tok.advance()
                    args.append(expr())
                expect(")")
                if value == "sin" and len(args) == 1:
                    return lambda x, a=args[0]: np.sin(a(x))
                if value == "exp" and len(args) == 1:
                    return lambda x, a=args[0]: np.exp(a(x))
                if value == "piecewise" and len(args) == 3:
                    t, lo, hi = args
                    return lambda x, t=t, lo=lo, hi=hi: np.where(
                        np.asarray(x) <= t(x), lo(x), hi(x))
                raise ConfigError(f"unknown function {value}/{len(args)} in {text!r}")
            if value == var:
                return lambda x: np.asarray(x, dtype=float)
            if value == "pi":
                return lambda x: np.pi
            raise ConfigError(f"unknown name {value!r} in {text!r} (variable is {var!r})")
        if (kind, value) == ("op", "("):
            tok.advance()
            inner = expr()
            expect(")")
            return inner
        raise ConfigError(f"unexpected token {value!r} in expression {text!r}")

    def unary():
        if tok.token == ("op", "-"):
            tok.advance()
            inner = unary()
            return lambda x: -inner(x)
        return atom()

    def term():
        left = unary()
        while tok.token[0] == "op" and tok.token[1] in "*/":
            op = tok.token[1]
            tok.advance()
            right = unary()
            if op == "*":
                left = lambda x, l=left, r=right: l(x) * r(x)
            else:
                left = lambda x, l=left, r=right: l(x) / r(x)
        return left

    def expr():
        left = term()
        while tok.token[0] == "op" and tok.token[1] in "+-":
            op = tok.token[1]
            tok.advance()
            right = term()
            if op == "+":
                left = lambda x, l=left, r=right: l(x) + r(x)
            else:
                left = lambda x, l=left, r=right: l(x) - r(x)
        return left

    fn = expr()
    if tok.token != ("end", ""):
        raise ConfigError(f"trailing input in expression {text!r}")

    def evaluate(x, fn=fn):
        return np.broadcast_to(np.asarray(fn(x), dtype=float), np.shape(x)).copy() \
            if np.shape(x) else float(fn(x))

    return evaluate


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    problem: str = "custom"
    n_cells: int = 512
    n_elements: int = 256
    degree: int = 0
    thickness: float = 1.0
    gamma: float = 1e-8
    tolerance: float = 1e-10
    max_iterations: int = 200
    preconditioner: str = "dsa"
    sigma_t: str | None = None
    sigma_s: str | None = None
    sigma_a: str | None = None
    source: str | None = None
    inflow_left: str | None = None
    inflow_right: str | None = None
    sweep: str = "N"
    levels: list = field(default_factory=lambda: [512, 1024, 2048, 4096])
    spectrum_n: list = field(default_factory=lambda: [2, 4, 8, 16, 32, 64, 128, 256])
    spectrum_j: list = field(default_factory=lambda: [16, 64, 512])


def _int_list(value: str):
    parts = value.replace(",", " ").split()
    try:
        return [int(p) for p in parts]
    except ValueError as err:
        raise ConfigError(f"bad integer list {value!r}") from err


def parse_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cfg = RunConfig()
    setters = {
        "problem": ("problem", str),
        "n": ("n_cells", int),
        "j": ("n_elements", int),
        "l": ("degree", int),
        "z": ("thickness", float),
        "gamma": ("gamma", float),
        "tolerance": ("tolerance", float),
        "max_iterations": ("max_iterations", int),
        "preconditioner": ("preconditioner", str),
        "sigma_t": ("sigma_t", str),
        "sigma_s": ("sigma_s", str),
        "sigma_a": ("sigma_a", str),
        "source": ("source", str),
        "inflow_left": ("inflow_left", str),
        "inflow_right": ("inflow_right", str),
        "sweep": ("sweep", str),
        "levels": ("levels", _int_list),
        "spectrum_n": ("spectrum_n", _int_list),
        "spectrum_j": ("spectrum_j", _int_list),
    }
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            entry = setters.get(key.lower())
            if entry is None:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            attr, conv = entry
            try:
                setattr(cfg, attr, conv(value))
            except (ValueError, ConfigError) as err:
                raise ConfigError(f"{path}:{lineno}: {err}") from err

    if cfg.problem not in ("manufactured", "two-region", "custom"):
        raise ConfigError(f"unknown problem {cfg.problem!r}")
    if cfg.n_cells < 1 or cfg.n_elements < 1 or cfg.degree < 0:
        raise ConfigError("grid sizes must be at least 1 and the degree non-negative")
    if cfg.tolerance <= 0:
        raise ConfigError("tolerance must be positive")
    if cfg.max_iterations < 1:
        raise ConfigError("max_iterations must be at least 1")
    if cfg.preconditioner not in ("dsa", "none"):
        raise ConfigError(f"unknown preconditioner {cfg.preconditioner!r}")
    if cfg.sweep not in ("N", "J"):
        raise ConfigError("sweep must be N or J")
    return cfg


def _two_region_cross_sections(gamma: float) -> CrossSections:
    sigma_s = parse_expression("piecewise(0.5, 2 + sin(2*pi*z), 102 + sin(2*pi*z))")
    sigma_a = parse_expression("piecewise(0.5, 10.01, 0.01)")
    return CrossSections(lambda z: sigma_s(z) + sigma_a(z), sigma_s, gamma)


def _build_problem(cfg: RunConfig):
    """Cross sections and data for the configured problem."""
    if cfg.problem == "manufactured":
        case = manufactured_data()
        return case.xs, case.data
    if cfg.problem == "two-region":
        xs = _two_region_cross_sections(cfg.gamma)
    else:
        if cfg.sigma_s is None or (cfg.sigma_t is None and cfg.sigma_a is None):
            raise ConfigError("custom problems need sigma_s and one of sigma_t or sigma_a")
        sigma_s = parse_expression(cfg.sigma_s)
        if cfg.sigma_t is not None:
            sigma_t = parse_expression(cfg.sigma_t)
        else:
            sigma_a = parse_expression(cfg.sigma_a)
            sigma_t = lambda z: sigma_a(z) + sigma_s(z)
        xs = CrossSections(sigma_t, sigma_s, cfg.gamma)

    source = parse_expression(cfg.source) if cfg.source else None
    g0 = parse_expression(cfg.inflow_left, var="mu") if cfg.inflow_left else None
    gz = parse_expression(cfg.inflow_right, var="mu") if cfg.inflow_right else None
    data = ProblemData.isotropic(source, g0=g0, gZ=gz) if source is not None \
        else ProblemData.isotropic(lambda z: np.zeros_like(np.asarray(z, dtype=float)),
                                   g0=g0, gZ=gz)
    return xs, data


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def _write_csv(path: str, header: str, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# commands

def cmd_solve(cfg: RunConfig, out_dir: str) -> int:
    xs, data = _build_problem(cfg)
    grid = AngularGrid.uniform(cfg.n_cells, cfg.degree)
    mesh = SpatialMesh.uniform(cfg.n_elements, cfg.thickness)
    system = assemble_system(grid, mesh, xs)
    load = assemble_load(system, data)
    solver_cfg = SolverConfig(tolerance=cfg.tolerance, max_iterations=cfg.max_iterations,
                              preconditioner=cfg.preconditioner)
    u, report = source_iteration(system, load, solver_cfg)

    flux = scalar_flux(system, u)
    _write_csv(os.path.join(out_dir, "solution.csv"), "z,scalar_flux",
               ([_fmt(z), _fmt(f)] for z, f in zip(mesh.nodes, flux)))
    rows = []
    for k, inc in enumerate(report.increments, start=1):
        rate = _fmt(report.rates[k - 2]) if k >= 2 else ""
        rows.append([str(k), _fmt(inc), rate])
    _write_csv(os.path.join(out_dir, "iterations.csv"), "k,increment,rate", rows)

    print(f"iterations:      {report.iterations}")
    print(f"converged:       {report.converged}")
    final = report.increments[-1] if report.increments else 0.0
    print(f"final increment: {final:.6e}")
    print(f"contraction c:   {report.contraction:.6f}")
    return 0 if report.converged else 4


def cmd_convergence(cfg: RunConfig, out_dir: str) -> int:
    if cfg.problem != "manufactured":
        raise ConfigError("convergence sweeps compare against the manufactured solution")
    fixed = cfg.n_elements if cfg.sweep == "N" else cfg.n_cells
    rows = convergence_study(cfg.sweep, cfg.levels, fixed, degree=cfg.degree,
                             tolerance=cfg.tolerance, max_iterations=cfg.max_iterations)
    _write_csv(os.path.join(out_dir, "convergence.csv"), "level,E_h,rate",
               ([str(r.level), _fmt(r.error), "" if r.rate is None else _fmt(r.rate)]
                for r in rows))
    for r in rows:
        rate = "     " if r.rate is None else f"{r.rate:.2f}"
        print(f"{cfg.sweep}={r.level:<6d} E_h={r.error:.4e} rate={rate} iterations={r.iterations}")
    return 0 if all(r.converged for r in rows) else 4


def cmd_spectrum(cfg: RunConfig, out_dir: str) -> int:
    xs, _ = _build_problem(cfg)
    rows = []
    failures = 0
    for j in sorted(set(cfg.spectrum_j)):
        mesh = SpatialMesh.uniform(j, cfg.thickness)
        for n in sorted(set(cfg.spectrum_n)):
            grid = AngularGrid.uniform(n, cfg.degree)
            system = assemble_system(grid, mesh, xs)
            try:
                result = error_propagation_spectrum(system)
            except ValueError as err:
                print(f"J={j:<5d} N={n:<5d} skipped: {err}", file=sys.stderr)
                failures += 1
                continue
            for idx, value in enumerate(result.eigenvalues):
                rows.append([str(j), str(n), str(idx), _fmt(value)])
            print(f"J={j:<5d} N={n:<5d} max eigenvalue = {result.eigenvalues[-1]:.6f}")
    _write_csv(os.path.join(out_dir, "spectrum.csv"), "J,N,index,value", rows)
    return 3 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rte",
        description="Slab radiative transfer: even-parity solver and study harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("solve", "solve the configured problem and write solution/iteration CSVs"),
        ("convergence", "manufactured-solution error sweep"),
        ("spectrum", "eigenvalues of the iteration error propagation operator"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to a key = value config file")
        cmd.add_argument("--out", default=".", help="output directory for CSV artifacts")
    args = parser.parse_args(argv)

    threads = os.environ.get("RTE_THREADS")
    if threads:
        try:
            import numba

            numba.set_num_threads(max(1, int(threads)))
        except (ImportError, ValueError):
            pass

    try:
        cfg = parse_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        handler = {"solve": cmd_solve, "convergence": cmd_convergence,
                   "spectrum": cmd_spectrum}[args.command]
        return handler(cfg, args.out)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except CrossSectionError as err:
        print(f"cross-section violation: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
