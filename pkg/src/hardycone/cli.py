"""Command-line surface: constants, spectra, certifications, sweeps, tables.

Reports are deterministic (no RNG, fixed quadrature) and machine readable:
JSON documents {"schema": 1, "config": ..., "rows": [...]} or CSV with a
fixed column set; floats are written in round-trip decimal form.  Exit code
0 means every row is ok and every closed-vs-numeric gap is within --tol.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

from .params import (
    AdmissibilityError,
    ConeSpec,
    HardyParams,
    closed_form_constant,
    cone_admissible,
)
from .spherical import ConvergenceError, solve_M
from .verifier import cutoff_decay, evaluate_quotient_udelta

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "command", "d", "k", "p", "a", "b", "cone", "mesh",
    "closed_form", "numeric_M", "lambda", "gap",
    "extrapolated", "fit_order", "fit_rate",
    "iterations", "residual", "status", "trace",
]

CONE_CHOICES = "full, punctured, complement-sigma0, half-space, band:<theta1>:<theta2>"


def parse_cone(text: str) -> ConeSpec:
    text = text.strip()
    if text.startswith("band:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"band cone syntax is band:<theta1>:<theta2>, got {text!r}")
        return ConeSpec.band(float(parts[1]), float(parts[2]))
    try:
        return {
            "full": ConeSpec.full_space(),
            "punctured": ConeSpec.punctured_space(),
            "complement-sigma0": ConeSpec.complement_sigma0(),
            "half-space": ConeSpec.half_space(),
        }[text]
    except KeyError:
        raise ValueError(f"unknown cone {text!r}; choices: {CONE_CHOICES}") from None


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation: command, parameter grid, cones, and output policy."""

    command: str
    d: tuple[int, ...]
    k: tuple[int, ...]
    p: tuple[float, ...]
    a: tuple[float, ...]
    b: tuple[float, ...]
    cones: tuple[str, ...]
    mesh_size: int = 512
    delta_list: tuple[float, ...] = ()
    h_list: tuple[int, ...] = ()
    cs_n: tuple[int, ...] = ()
    cs_s: tuple[float, ...] = ()
    output_path: str | None = None
    format: str = "json"
    jobs: int = 1
    tol: float = 1e-3

    def single(self) -> tuple[HardyParams, ConeSpec]:
        for name in ("d", "k", "p", "a", "b", "cones"):
            if len(getattr(self, name)) != 1:
                flag = "--cone" if name == "cones" else f"--{name}"
                raise ValueError(f"command {self.command!r} takes exactly one value for {flag}")
        params = HardyParams(self.d[0], self.k[0], self.p[0], self.a[0], self.b[0])
        return params, parse_cone(self.cones[0])

    def cells(self) -> list[tuple[HardyParams, ConeSpec]]:
        out = []
        for d in self.d:
            for k in self.k:
                if not 1 <= k < d:
                    continue
                for p in self.p:
                    for a in self.a:
                        for b in self.b:
                            for cone in self.cones:
                                out.append((HardyParams(d, k, p, a, b), parse_cone(cone)))
        return out

    def to_dict(self) -> dict:
        doc = asdict(self)
        return {key: list(val) if isinstance(val, tuple) else val for key, val in doc.items()}


@dataclass(frozen=True)
class ReportRow:
    command: str
    d: int
    k: int
    p: float
    a: float
    b: float
    cone: str
    mesh: int | None = None
    closed_form: float | None = None
    numeric_M: float | None = None
    lam: float | None = None
    gap: float | None = None
    extrapolated: float | None = None
    fit_order: float | None = None
    fit_rate: float | None = None
    iterations: int | None = None
    residual: float | None = None
    status: str = "ok"
    quotient_trace: tuple[tuple[float, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "d": self.d, "k": self.k, "p": self.p, "a": self.a, "b": self.b,
            "cone": self.cone, "mesh": self.mesh,
            "closed_form": self.closed_form, "numeric_M": self.numeric_M,
            "lambda": self.lam, "gap": self.gap,
            "extrapolated": self.extrapolated,
            "fit_order": self.fit_order, "fit_rate": self.fit_rate,
            "iterations": self.iterations, "residual": self.residual,
            "status": self.status,
            "trace": [[x, v] for x, v in self.quotient_trace],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReportRow":
        return cls(
            command=doc["command"],
            d=doc["d"], k=doc["k"], p=doc["p"], a=doc["a"], b=doc["b"],
            cone=doc["cone"], mesh=doc["mesh"],
            closed_form=doc["closed_form"], numeric_M=doc["numeric_M"],
            lam=doc["lambda"], gap=doc["gap"],
            extrapolated=doc["extrapolated"],
            fit_order=doc["fit_order"], fit_rate=doc["fit_rate"],
            iterations=doc["iterations"], residual=doc["residual"],
            status=doc["status"],
            quotient_trace=tuple((x, v) for x, v in doc["trace"]),
        )


def _base_row(command: str, params: HardyParams, cone: ConeSpec, mesh: int | None) -> ReportRow:
    return ReportRow(
        command=command, d=params.d, k=params.k, p=params.p, a=params.a, b=params.b,
        cone=cone.describe(), mesh=mesh,
    )


def _solve_cell(
    command: str, params: HardyParams, cone: ConeSpec, mesh: int, with_closed: bool = True
) -> ReportRow:
    """Closed form (optional) plus numeric spherical minimum for one grid cell."""
    row = _base_row(command, params, cone, mesh)
    try:
        closed = closed_form_constant(params, cone) if with_closed else None
        result = solve_M(params, cone, mesh_size=mesh)
    except AdmissibilityError:
        raise
    except (ConvergenceError, ValueError):
        return replace(row, status="solver_fail")
    closed_value = closed.value if closed is not None else None
    gap = result.M - closed_value if closed_value is not None else None
    return replace(
        row,
        closed_form=closed_value,
        numeric_M=result.M,
        lam=result.lam,
        gap=gap,
        iterations=result.iterations,
        residual=result.residual,
        status="ok" if (closed_value is not None or not with_closed) else "no_closed_form",
    )


def cmd_constant(config: RunConfig) -> list[ReportRow]:
    params, cone = config.single()
    return [_solve_cell("constant", params, cone, config.mesh_size)]


def cmd_spectrum(config: RunConfig) -> list[ReportRow]:
    """Numeric spectral data only: M, eigenvalue, residual, iteration count."""
    params, cone = config.single()
    return [_solve_cell("spectrum", params, cone, config.mesh_size, with_closed=False)]


def _richardson(trace: list[tuple[float, float]]) -> tuple[float | None, float | None]:
    """Extrapolated delta->0 limit (quadratic model) and the observed order."""
    if len(trace) < 2:
        return None, None
    (x0, q0), (x1, q1) = trace[-2], trace[-1]
    extrap = (q1 * x0**2 - q0 * x1**2) / (x0**2 - x1**2)
    order = None
    if len(trace) >= 3:
        (xa, qa), (xb, qb), (xc, qc) = trace[-3], trace[-2], trace[-1]
        num, den = qa - qb, qb - qc
        if num * den > 0:
            order = math.log(num / den) / math.log(xa / xb)
    return extrap, order


def cmd_verify(config: RunConfig) -> list[ReportRow]:
    """Trace the minimizing family in delta and the cutoff energy in h.

    The delta row fails (status solver_fail) if the trace does not approach
    the reference quadratically or the extrapolated limit misses it; the h
    row fails if the strip energy decays slower than h^(1-p).
    """
    params, cone = config.single()
    rows: list[ReportRow] = []

    row = _base_row("verify", params, cone, config.mesh_size)
    try:
        closed = closed_form_constant(params, cone)
        result = solve_M(params, cone, mesh_size=config.mesh_size)
        reference = closed.value if closed is not None else result.M
        trace = []
        for delta in config.delta_list:
            ev = evaluate_quotient_udelta(params, result.minimizer, delta, reference=reference)
            trace.append((delta, ev.quotient))
        extrap, order = _richardson(trace)
        status = "ok"
        if order is not None and order < 1.85:
            status = "solver_fail"
        if extrap is not None and abs(extrap - reference) > max(5e-3 * abs(reference), 1e-9):
            status = "solver_fail"
        rows.append(replace(
            row,
            closed_form=closed.value if closed is not None else None,
            numeric_M=result.M,
            lam=result.lam,
            gap=(result.M - closed.value) if closed is not None else None,
            quotient_trace=tuple(trace),
            extrapolated=extrap,
            fit_order=order,
            status=status,
        ))
    except (ConvergenceError, ValueError):
        rows.append(replace(row, status="solver_fail"))

    if config.h_list:
        hrow = _base_row("verify", params, cone, None)
        if params.k + params.a >= params.p:
            try:
                htrace = [(float(h), cutoff_decay(params, (0.05, 20.0), h)) for h in config.h_list]
                rate = _fit_log_slope(htrace)
                status = "ok"
                if rate is not None and rate > (1.0 - params.p) * 0.9:
                    status = "solver_fail"  # slower than the h^(1-p) guarantee
                hrow = replace(hrow, quotient_trace=tuple(htrace), fit_rate=rate, status=status)
            except ValueError:
                hrow = replace(hrow, status="solver_fail")
        rows.append(hrow)
    return rows


def _fit_log_slope(trace: list[tuple[float, float]]) -> float | None:
    if len(trace) < 2:
        return None
    xs = [math.log(h) for h, _ in trace]
    ys = [math.log(v) for _, v in trace]
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    return (n * sxy - sx * sy) / (n * sxx - sx * sx)


def _cell_admissible(params: HardyParams, cone: ConeSpec) -> bool:
    try:
        return cone_admissible(params, cone).cone_admissible
    except ValueError:  # structurally invalid combination, e.g. half-space with k != 1
        return False


def cmd_sweep(config: RunConfig) -> list[ReportRow]:
    cells = []
    for params, cone in config.cells():
        if _cell_admissible(params, cone):
            cells.append((params, cone))
    if config.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(_solve_cell, "sweep", params, cone, config.mesh_size)
                       for params, cone in cells]
            return [f.result() for f in futures]
    return [_solve_cell("sweep", params, cone, config.mesh_size) for params, cone in cells]


def cmd_table(config: RunConfig) -> list[ReportRow]:
    """Reproduce every closed form over a parameter grid.

    Rows: the d = n+1, a = 1-2s, b = 0 family on the full and half space for
    the configured (n, s) grid; the mixed-threshold family a = p-k, b = 0 on
    the full space; and any explicitly configured (params, cone) cells.
    """
    rows: list[ReportRow] = []
    for n in config.cs_n:
        for s_val in config.cs_s:
            if not 0 < s_val < 1:
                continue
            params = HardyParams(n + 1, 1, 2.0, 1.0 - 2.0 * s_val, 0.0)
            if n > 2 * s_val:
                rows.append(_solve_cell("table", params, ConeSpec.full_space(), config.mesh_size))
            rows.append(_solve_cell("table", params, ConeSpec.half_space(), config.mesh_size))
    for d in config.d:
        for k in config.k:
            if not 1 <= k < d:
                continue
            for p in config.p:
                params = HardyParams(d, k, p, p - k, 0.0)
                rows.append(_solve_cell("table", params, ConeSpec.full_space(), config.mesh_size))
    for params, cone in config.cells():
        if _cell_admissible(params, cone):
            rows.append(_solve_cell("table", params, cone, config.mesh_size))
    return rows


COMMANDS = {
    "constant": cmd_constant,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "table": cmd_table,
}


# ---------------------------------------------------------------------------
# serialization

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        doc = row.to_dict()
        doc["trace"] = json.dumps(doc["trace"]) if doc["trace"] else ""
        writer.writerow([_fmt(doc[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(config: RunConfig, rows: list[ReportRow]) -> str:
    doc = {"schema": SCHEMA_VERSION, "config": config.to_dict(), "rows": [r.to_dict() for r in rows]}
    return json.dumps(doc, indent=2) + "\n"


def write_report(config: RunConfig, rows: list[ReportRow]) -> None:
    text = rows_to_csv(rows) if config.format == "csv" else rows_to_json(config, rows)
    if config.output_path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(config.output_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, config.output_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# argument parsing

def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip()) if text.strip() else ()


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip()) if text.strip() else ()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardycone",
        description="Sharp Hardy constants with mixed weights on cones: closed forms, "
        "spherical spectra, and numerical certification.",
        epilog="CSV columns: " + ", ".join(CSV_COLUMNS) + ". Cones: " + CONE_CHOICES + ".",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("constant", "closed form and numeric spherical minimum for one cone"),
        ("spectrum", "eigenvalue/minimizer details for one cone"),
        ("verify", "quotient traces in delta and cutoff energies in h"),
        ("sweep", "numeric constants over a parameter grid"),
        ("table", "reproduce the closed-form families over a grid"),
    ]:
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--d", type=_int_list, default=(3,), help="dimension(s), comma separated")
        cmd.add_argument("--k", type=_int_list, default=(1,), help="codimension parameter(s)")
        cmd.add_argument("--p", type=_float_list, default=(2.0,), help="integrability exponent(s)")
        cmd.add_argument("--a", type=_float_list, default=(0.0,), help="cylindrical weight exponent(s)")
        cmd.add_argument("--b", type=_float_list, default=(0.0,), help="spherical weight exponent(s)")
        cmd.add_argument("--cone", dest="cones", type=lambda t: tuple(t.split(",")),
                         default=("complement-sigma0",), help=f"cone(s): {CONE_CHOICES}")
        cmd.add_argument("--mesh", dest="mesh_size", type=int, default=512)
        cmd.add_argument("--deltas", dest="delta_list", type=_float_list, default=(0.2, 0.1, 0.05))
        cmd.add_argument("--hs", dest="h_list", type=_int_list, default=())
        cmd.add_argument("--cs-n", dest="cs_n", type=_int_list, default=(2, 3),
                         help="table: anchor dimensions n (d = n+1)")
        cmd.add_argument("--cs-s", dest="cs_s", type=_float_list, default=(0.25, 0.5, 0.75),
                         help="table: fractional orders s (a = 1-2s)")
        cmd.add_argument("--format", choices=("json", "csv"), default="json")
        cmd.add_argument("--out", dest="output_path", default=None)
        cmd.add_argument("--config", dest="config_path", default=None,
                         help="JSON file of defaults; explicit flags override it")
        cmd.add_argument("--jobs", type=int, default=1)
        cmd.add_argument("--tol", type=float, default=1e-3,
                         help="largest acceptable |numeric - closed| gap")
    return parser


def _apply_config_file(argv: list[str], namespace: argparse.Namespace) -> argparse.Namespace:
    if namespace.config_path is None:
        return namespace
    with open(namespace.config_path) as handle:
        defaults = json.load(handle)
    casts = {
        "d": lambda v: tuple(int(x) for x in v), "k": lambda v: tuple(int(x) for x in v),
        "p": lambda v: tuple(float(x) for x in v), "a": lambda v: tuple(float(x) for x in v),
        "b": lambda v: tuple(float(x) for x in v),
        "cones": tuple, "delta_list": lambda v: tuple(float(x) for x in v),
        "h_list": lambda v: tuple(int(x) for x in v),
        "cs_n": lambda v: tuple(int(x) for x in v), "cs_s": lambda v: tuple(float(x) for x in v),
        "mesh_size": int, "format": str, "output_path": str, "jobs": int, "tol": float,
    }
    given = {token.split("=")[0] for token in argv if token.startswith("--")}
    flag_of = {
        "d": "--d", "k": "--k", "p": "--p", "a": "--a", "b": "--b", "cones": "--cone",
        "mesh_size": "--mesh", "delta_list": "--deltas", "h_list": "--hs",
        "cs_n": "--cs-n", "cs_s": "--cs-s", "format": "--format",
        "output_path": "--out", "jobs": "--jobs", "tol": "--tol",
    }
    for key, value in defaults.items():
        if key not in casts:
            raise ValueError(f"unknown config key {key!r}")
        if flag_of[key] in given:
            continue  # explicit flag wins
        setattr(namespace, key, casts[key](value))
    return namespace


def config_from_args(argv: list[str], namespace: argparse.Namespace) -> RunConfig:
    namespace = _apply_config_file(argv, namespace)
    names = {f.name for f in fields(RunConfig)}
    values = {key: val for key, val in vars(namespace).items() if key in names}
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    namespace = parser.parse_args(argv)
    try:
        config = config_from_args(argv, namespace)
        rows = COMMANDS[config.command](config)
    except (AdmissibilityError, ValueError, OSError) as exc:
        error_doc = {"schema": SCHEMA_VERSION, "error": {"type": type(exc).__name__, "message": str(exc)}}
        sys.stderr.write(json.dumps(error_doc) + "\n")
        return 2
    write_report(config, rows)
    ok = all(row.status == "ok" or row.status == "no_closed_form" for row in rows)
    gaps_ok = all(abs(row.gap) <= config.tol for row in rows if row.gap is not None)
    return 0 if ok and gaps_ok else 1


if __name__ == "__main__":
    sys.exit(main())
