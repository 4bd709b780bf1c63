"""Command-line experiment harness.

Usage::

    python -m subfpt <command> [--config FILE] [--seed N] [--threads N] [--out FILE]

Commands
--------
fig2-left    relative errors of asymptotic approximations to E[T_N]
fig2-right   rescaled density of the fastest FPT against the Gumbel limit
sample       draws of tau (N = 1) or of the k-th fastest of N
survival     P(tau > t) on a time grid
asymptotics  short-time lift and Gumbel rescaling constants
msd-check    Monte Carlo mean squared displacement against the exact law

Config format
-------------
Plain text, one ``key = value`` per line, ``#`` starts a comment.  Keys
before any section header (or under ``[experiment]``) set the experiment;
a single ``[model]`` block selects the FPT model::

    alpha = 0.5
    N_grid = 1e2, 1e3, 1e4
    rel_tol = 1e-12

    [model]
    type = HalfLine
    x0 = 1
    K_alpha = 1

Experiment keys: ``alpha``, ``seed``, ``reps``, ``N``, ``N_grid``, ``k``,
``t_grid``, ``x_grid``, ``n_paths``, ``K_alpha`` (msd-check), ``method``
(sample: auto, direct or inverse_cdf), ``scheme`` (asymptotics: lambert
or loglog), ``output_path``, ``rel_tol``, ``abs_tol``.  Model keys are the
dataclass fields of the chosen type: HalfLine(x0, K_alpha),
PartialAbsorb(x0, K_alpha, kappa_alpha), DriftInterval(x0, L0, K_alpha,
V_alpha), NarrowEscapeSphere(L, K_alpha, eps), GenericShortTime(A1, p1,
C1, tail_rate), UniformInterval(L, K_alpha).  Unknown keys are errors.

Grids are comma-separated numbers or ``logspace(a, b, n)`` /
``linspace(a, b, n)``.

Output
------
UTF-8 CSV with LF line endings.  Leading ``#`` lines carry the tool
version, command, schema version, seed and a SHA-256 digest of the
effective config; floats are written with 17 significant digits.  Output
is assembled in memory and moved into place atomically, so a failed run
leaves no file behind.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import hashlib
import math
import os
import re
import sys
import tempfile
from typing import Optional

import numpy as np

from . import __version__
from .asymptotics import (
    finiteness_threshold,
    gumbel_density,
    gumbel_rescaling,
    lift_short_time,
)
from .errors import DomainError, UnsupportedModelError
from .extreme import (
    _model_callables,
    chunk_rng,
    mc_order_statistics,
    relative_error_curve,
    rescaled_density,
)
from .models import (
    HalfLine,
    SdeConfig,
    cdf_sf_subdiffusive,
    diffusive_tail_index,
    model_from_block,
    model_to_block,
    short_time_constants,
    simulate_subdiffusive_path,
    survival_halfline_closed_form,
)
from .special_functions import Accuracy, gamma
from .stable import check_alpha, default_path_step

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "main"]

COMMANDS = ("fig2-left", "fig2-right", "sample", "survival", "asymptotics", "msd-check")
SCHEMA_VERSION = 1

# experiment key -> kind
_KEYS = {
    "alpha": "real",
    "seed": "int",
    "reps": "int",
    "N": "int",
    "N_grid": "int_list",
    "k": "int",
    "t_grid": "real_list",
    "x_grid": "real_list",
    "n_paths": "int",
    "K_alpha": "real",
    "method": "text",
    "scheme": "text",
    "output_path": "text",
    "rel_tol": "real",
    "abs_tol": "real",
}

_GRID_RE = re.compile(r"^(logspace|linspace)\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


class ConfigError(DomainError):
    """Invalid configuration; ``line`` is 1-based or None."""

    def __init__(self, message, line=None, source="config"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass
class ExperimentConfig:
    """Parsed experiment settings.  ``None`` means the per-command default."""

    model: Optional[object] = None
    alpha: Optional[float] = None
    seed: int = 0
    reps: Optional[int] = None
    N: Optional[int] = None
    N_grid: Optional[list] = None
    k: int = 1
    t_grid: Optional[list] = None
    x_grid: Optional[list] = None
    n_paths: Optional[int] = None
    K_alpha: Optional[float] = None
    method: str = "auto"
    scheme: str = "lambert"
    output_path: Optional[str] = None
    rel_tol: Optional[float] = None
    abs_tol: Optional[float] = None
    lines: dict = field(default_factory=dict)

    @property
    def accuracy(self):
        kw = {}
        if self.rel_tol is not None:
            kw["rel_tol"] = self.rel_tol
        if self.abs_tol is not None:
            kw["abs_tol"] = self.abs_tol
        return Accuracy(**kw)

    def canonical(self):
        """Stable text rendering of the effective settings (output path excluded)."""
        out = []
        for key in sorted(_KEYS):
            if key == "output_path":
                continue
            val = getattr(self, key)
            if val is None:
                continue
            if isinstance(val, list):
                val = ", ".join(_fmt(v) for v in val)
            elif isinstance(val, float):
                val = _fmt(val)
            out.append(f"{key} = {val}")
        if self.model is not None:
            out.append(model_to_block(self.model).rstrip("\n"))
        return "\n".join(out) + "\n"

    def digest(self):
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _parse_real(text):
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"cannot parse {text!r} as a number") from None
    if not math.isfinite(v):
        raise ValueError(f"{text!r} is not finite")
    return v


def _parse_int(text):
    v = _parse_real(text)
    if not v.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _parse_list(text, conv):
    m = _GRID_RE.match(text.strip())
    if m:
        kind, a, b, n = m.groups()
        a, b, n = _parse_real(a), _parse_real(b), _parse_int(n)
        if n < 1:
            raise ValueError("grid needs at least one point")
        pts = np.logspace(a, b, n) if kind == "logspace" else np.linspace(a, b, n)
        vals = [float(p) for p in pts]
        if conv is _parse_int:
            vals = [int(round(p)) for p in vals]
        return vals
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return [conv(s) for s in items]


def _convert(kind, text):
    if kind == "real":
        return _parse_real(text)
    if kind == "int":
        return _parse_int(text)
    if kind == "int_list":
        return _parse_list(text, _parse_int)
    if kind == "real_list":
        return _parse_list(text, _parse_real)
    return text.strip()


def parse_config(text, source="config"):
    """Parse config text into an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        With the offending line number, on syntax errors, unknown or
        duplicate keys, unparsable values or invalid model parameters.
    """
    cfg = ExperimentConfig()
    section = "experiment"
    seen_model = False
    model_entries = {}
    model_line = None
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in ("experiment", "model"):
                raise ConfigError(f"unknown section [{name}]", lineno, source)
            if name == "model":
                if seen_model:
                    raise ConfigError("only one [model] block is allowed", lineno, source)
                seen_model = True
                model_line = lineno
            section = name
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError("missing key", lineno, source)
        tag = (section, key)
        if tag in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[tag]})", lineno,
                              source)
        seen[tag] = lineno
        if section == "model":
            model_entries[key] = value
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        try:
            setattr(cfg, key, _convert(_KEYS[key], value))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno, source) from None
        cfg.lines[key] = lineno
    if seen_model:
        try:
            cfg.model = model_from_block(model_entries)
        except DomainError as exc:
            # point at the offending key when the message names one
            line = model_line
            for key in model_entries:
                if re.search(rf"\b{re.escape(key)}\b", str(exc)):
                    line = seen[("model", key)]
                    break
            raise ConfigError(str(exc), line, source) from None
    _validate(cfg, source)
    return cfg


def _validate(cfg, source="config"):
    def fail(key, msg):
        raise ConfigError(msg, cfg.lines.get(key), source)

    if cfg.alpha is not None:
        try:
            check_alpha(cfg.alpha)
        except DomainError as exc:
            fail("alpha", str(exc))
    if cfg.seed < 0:
        fail("seed", "seed must be non-negative")
    for key in ("reps", "n_paths"):
        v = getattr(cfg, key)
        if v is not None and v < 1:
            fail(key, f"{key} must be at least 1")
    if cfg.N is not None and cfg.N < 1:
        fail("N", "N must be at least 1")
    if cfg.k < 1:
        fail("k", "k must be at least 1")
    if cfg.N is not None and cfg.k > cfg.N:
        fail("k", f"need k <= N, got k={cfg.k}, N={cfg.N}")
    if cfg.N_grid is not None and any(n < 2 for n in cfg.N_grid):
        fail("N_grid", "N_grid entries must be at least 2")
    if cfg.t_grid is not None and any(not t > 0 for t in cfg.t_grid):
        fail("t_grid", "t_grid entries must be positive")
    if cfg.K_alpha is not None and not cfg.K_alpha > 0:
        fail("K_alpha", "K_alpha must be positive")
    if cfg.method not in ("auto", "direct", "inverse_cdf"):
        fail("method", f"unknown method {cfg.method!r}")
    if cfg.scheme not in ("lambert", "loglog"):
        fail("scheme", f"unknown scheme {cfg.scheme!r}")
    try:
        cfg.accuracy
    except DomainError as exc:
        fail("rel_tol" if "rel" in str(exc) else "abs_tol", str(exc))


# ---------------------------------------------------------------------------
# Commands.  Each returns (schema columns, rows, extra header lines).
# ---------------------------------------------------------------------------

def _model(cfg):
    return cfg.model if cfg.model is not None else HalfLine(x0=1.0, K_alpha=1.0)


def _alpha(cfg):
    return 0.5 if cfg.alpha is None else cfg.alpha


def cmd_fig2_left(cfg, threads=1):
    """Columns N, E_TN_exact, err_leading, err_lambert, err_loglog."""
    model, alpha = _model(cfg), _alpha(cfg)
    grid = cfg.N_grid or [10 ** e for e in range(2, 11)]
    reports = relative_error_curve(model, alpha, grid, ("leading", "lambert", "loglog"),
                                   cfg.accuracy)
    cols = ["N", "E_TN_exact", "err_leading", "err_lambert", "err_loglog"]
    rows = [[N, reports[0].exact[i]] + [r.relative_errors[i] for r in reports]
            for i, N in enumerate(grid)]
    return cols, rows, [f"model: {type(model).__name__}", f"alpha: {_fmt(alpha)}"]


def cmd_fig2_right(cfg, threads=1):
    """Columns x, density_N<N> for each N, gumbel_density."""
    model, alpha = _model(cfg), _alpha(cfg)
    grid = cfg.N_grid or [100, 1000, 100000]
    x = np.asarray(cfg.x_grid if cfg.x_grid is not None else np.linspace(-6.0, 3.0, 181))
    sub = lift_short_time(alpha, short_time_constants(model))
    survival, cdf = _model_callables(model, alpha, cfg.accuracy)
    dens = [rescaled_density(survival, N, gumbel_rescaling(N, sub, "lambert"), x, cdf=cdf)
            for N in grid]
    g = gumbel_density(x)
    cols = ["x"] + [f"density_N{N}" for N in grid] + ["gumbel_density"]
    rows = [[x[i]] + [d[i] for d in dens] + [g[i]] for i in range(x.size)]
    sup = [float(np.max(np.abs(d - g))) for d in dens]
    extra = [f"model: {type(model).__name__}", f"alpha: {_fmt(alpha)}",
             "sup_norm: " + ", ".join(f"N{N}={_fmt(s)}" for N, s in zip(grid, sup))]
    return cols, rows, extra


def cmd_sample(cfg, threads=1):
    """Columns replication, value; value is tau (N = 1) or T_{k,N}."""
    model, alpha = _model(cfg), _alpha(cfg)
    N = cfg.N or 1
    reps = cfg.reps or 1000
    smp = mc_order_statistics(model, alpha, N, cfg.k, reps, cfg.seed, method=cfg.method,
                              threads=threads)
    what = "tau" if N == 1 else f"T_{{{cfg.k},{N}}}"
    rows = [[i, v] for i, v in enumerate(smp.values)]
    extra = [f"model: {type(model).__name__}", f"alpha: {_fmt(alpha)}", f"quantity: {what}",
             f"method: {smp.method}"]
    return ["replication", "value"], rows, extra


def cmd_survival(cfg, threads=1):
    """Columns t, survival, cdf; plus survival_closed_form for HalfLine at alpha = 1/2."""
    model, alpha = _model(cfg), _alpha(cfg)
    t = cfg.t_grid or [float(v) for v in np.logspace(-2.0, 2.0, 50)]
    acc = cfg.accuracy
    pairs = [cdf_sf_subdiffusive(model, alpha, v, acc) for v in t]
    cols = ["t", "survival", "cdf"]
    closed = isinstance(model, HalfLine) and alpha == 0.5
    if closed:
        cols.append("survival_closed_form")
        sc = survival_halfline_closed_form(np.asarray(t), model.x0, model.K_alpha)
    rows = []
    for i, v in enumerate(t):
        row = [v, pairs[i][1], pairs[i][0]]
        if closed:
            row.append(sc[i])
        rows.append(row)
    return cols, rows, [f"model: {type(model).__name__}", f"alpha: {_fmt(alpha)}"]


def cmd_asymptotics(cfg, threads=1):
    """One row per N with the lifted constants, t_alpha, a_N, b_N and N_min."""
    model, alpha = _model(cfg), _alpha(cfg)
    st = short_time_constants(model)
    sub = lift_short_time(alpha, st)
    try:
        r = diffusive_tail_index(model)
        n_min = finiteness_threshold(alpha, r)["N_min"]
    except UnsupportedModelError:
        n_min = math.nan
    t_alpha = sub.C ** (1.0 / sub.beta)
    grid = cfg.N_grid or [10 ** e for e in range(2, 11)]
    cols = ["N", "A1", "p1", "C1", "A", "p", "C", "beta", "t_alpha", "a_N", "b_N", "N_min"]
    rows = []
    for N in grid:
        g = gumbel_rescaling(N, sub, cfg.scheme)
        rows.append([N, st.A1, st.p1, st.C1, sub.A, sub.p, sub.C, sub.beta, t_alpha,
                     g.a_N, g.b_N, n_min])
    return cols, rows, [f"model: {type(model).__name__}", f"alpha: {_fmt(alpha)}",
                        f"scheme: {cfg.scheme}"]


MSD_CHUNK = 20_000


def cmd_msd_check(cfg, threads=1):
    """Columns t, MSD_mc, MSD_theory, ratio, std_error for free subdiffusion from 0."""
    if cfg.model is not None:
        raise UnsupportedModelError(
            "msd-check simulates free subdiffusion; set K_alpha and drop the [model] block"
        )
    alpha = _alpha(cfg)
    K = cfg.K_alpha or 1.0
    t = np.asarray(cfg.t_grid or [0.5, 1.0, 2.0], dtype=float)
    n = cfg.n_paths or 100_000
    sde = SdeConfig.pure_diffusion(K, step=1e-2)
    sizes = [min(MSD_CHUNK, n - s) for s in range(0, n, MSD_CHUNK)]

    def work(i, size):
        x = simulate_subdiffusive_path(sde, alpha, t, chunk_rng(cfg.seed, i), n_paths=size,
                                       ds=_msd_step(alpha, t, n, sde))
        return x * x

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(sizes)), sizes))
    else:
        parts = [work(i, s) for i, s in enumerate(sizes)]
    sq = np.concatenate(parts, axis=0)
    mc = sq.mean(axis=0)
    se = sq.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(t.size, math.nan)
    theory = 2.0 * K * t ** alpha / gamma(1.0 + alpha)
    rows = [[t[i], mc[i], theory[i], mc[i] / theory[i], se[i]] for i in range(t.size)]
    return (["t", "MSD_mc", "MSD_theory", "ratio", "std_error"], rows,
            [f"alpha: {_fmt(alpha)}", f"K_alpha: {_fmt(K)}", f"n_paths: {n}"])


def _msd_step(alpha, t, n, sde):
    # one step for all chunks keeps results independent of the chunking
    return min(sde.step, default_path_step(alpha, float(t[-1]), n))


_RUNNERS = {
    "fig2-left": cmd_fig2_left,
    "fig2-right": cmd_fig2_right,
    "sample": cmd_sample,
    "survival": cmd_survival,
    "asymptotics": cmd_asymptotics,
    "msd-check": cmd_msd_check,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def render_csv(command, cfg, cols, rows, extra=()):
    """CSV text with the ``#`` metadata header."""
    head = [
        f"# subfpt {__version__}",
        f"# command: {command}",
        f"# schema: {command}/{SCHEMA_VERSION}",
        f"# seed: {cfg.seed}",
        f"# config_sha256: {cfg.digest()}",
    ]
    head += [f"# {e}" for e in extra]
    lines = head + [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".subfpt-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(command, cfg, threads=1):
    """Run ``command`` and return the CSV text."""
    cols, rows, extra = _RUNNERS[command](cfg, threads=threads)
    return render_csv(command, cfg, cols, rows, extra)


def build_parser():
    p = argparse.ArgumentParser(prog="subfpt",
                                description="Extreme first passage times of subdiffusion.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="config file (key = value, [model] block)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--alpha", type=float, help="overrides the config alpha")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc.strerror}", source=args.config)
            cfg = parse_config(text, source=args.config)
        else:
            cfg = ExperimentConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.alpha is not None:
            cfg.alpha = args.alpha
        _validate(cfg, args.config or "config")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1", source="argv")
        out = args.out or cfg.output_path
        text = run(args.command, cfg, threads=args.threads)
    except UnsupportedModelError as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
