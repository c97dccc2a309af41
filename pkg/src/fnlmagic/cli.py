"""Command-line experiment runner.

Every subcommand validates its parameters, computes a list of flat records and
writes them atomically as CSV or JSON. Identical arguments give identical
data rows regardless of ``--threads``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure (the file
is still written; failed rows carry ``status`` other than ``ok``).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__, circuits, core, ensembles, lattice, oracle, quench, variational
from . import io as fio
from . import rng as rngmod
from .quadrature import QuadratureError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
THREADS_ENV = "FNLMAGIC_THREADS"
NUMERICAL_ERRORS = (ArithmeticError, QuadratureError, core.SpectrumError, core.CovarianceError,
                    lattice.CriticalPointError, np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# argument parsing helpers
# --------------------------------------------------------------------------

def _range(token: str, cast):
    parts = token.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range {token!r} must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ConfigError(f"range {token!r} needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [cast(start + i * step) for i in range(count)]


def parse_list(text, cast=float) -> list:
    """``"1,2,5"`` or ``"64:512:64"`` (stop inclusive) or a mix; ``""`` is the empty list."""
    if isinstance(text, list):
        return text
    out = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        try:
            out.extend(_range(token, cast) if ":" in token else [cast(float(token)) if cast is int else cast(token)])
        except ValueError as exc:
            raise ConfigError(f"cannot parse {token!r}: {exc}") from None
    if cast is int and any(not float(v).is_integer() for v in out):
        raise ConfigError(f"expected integers in {text!r}")
    return out


def _int(v) -> int:
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"{v} is not an integer")
    return int(f)


def int_list(text):
    return parse_list(text, _int)


def float_list(text):
    return parse_list(text, float)


def resolve_threads(value) -> int:
    if value in (None, ""):
        value = os.environ.get(THREADS_ENV, "1")
    if str(value) == "auto":
        return max(1, os.cpu_count() or 1)
    try:
        t = int(value)
    except ValueError:
        raise ConfigError(f"threads must be an integer or 'auto', got {value!r}") from None
    if t < 1:
        raise ConfigError("threads must be >= 1")
    return t


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys are flag names without dashes."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _seed(args) -> int:
    s = int(args.seed)
    if not 0 <= s < 1 << 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return s


def _alpha(args) -> int:
    a = _int(args.alpha)
    if a < 2:
        raise ConfigError("alpha must be an integer >= 2")
    return a


def _row_guard(func, nan_row: dict):
    try:
        row = func()
        row.setdefault("status", "ok")
        return row
    except NUMERICAL_ERRORS as exc:
        out = dict(nan_row)
        out["status"] = f"error: {type(exc).__name__}: {exc}".replace(",", ";")
        return out


def run_page_curve(args, threads: int):
    ns, alpha, seed = int_list(args.n), _alpha(args), _seed(args)
    samples = _int(args.samples)
    cols = ["N", "ell", "r", "fnl_exact_kernel", "fnl_montecarlo", "stderr", "fnl_asymptotic", "status"]
    if samples == 1 or samples < 0:
        raise ConfigError("samples must be 0 (no Monte Carlo) or >= 2")
    rows = []
    for n in ns:
        if n < 1:
            raise ConfigError("N must be >= 1")
        ells = int_list(args.ell) if args.ell else list(range(1, n // 2 + 1))
        for e in ells:
            if not 1 <= e <= n // 2:
                raise ConfigError(f"ell = {e} outside [1, N/2] for N = {n}")
        mc = ensembles.monte_carlo_page(n, ells, samples, alpha, seed, threads) if samples and ells else []
        for i, e in enumerate(ells):
            def one(e=e, i=i):
                p = ensembles.JacobiKernelParams(n, e, args.weight)
                return dict(N=n, ell=e, r=e / n,
                            fnl_exact_kernel=ensembles.page_curve_finite(p, alpha) / n,
                            fnl_montecarlo=mc[i].density if mc else math.nan,
                            stderr=mc[i].stderr if mc else math.nan,
                            fnl_asymptotic=ensembles.page_curve_asymptotic(e / n, alpha))
            rows.append(_row_guard(one, dict(N=n, ell=e, r=e / n, fnl_exact_kernel=math.nan,
                                             fnl_montecarlo=math.nan, stderr=math.nan,
                                             fnl_asymptotic=math.nan)))
    return cols, rows


def run_syk2(args, threads: int):
    ns, alpha, seed = int_list(args.n), _alpha(args), _seed(args)
    cols = ["N", "r", "fnl_density_mean", "stderr", "fnl_asymptotic", "status"]
    rows = []
    for n in ns:
        cfg = ensembles.Syk2Config(n, disorder_samples=_int(args.samples),
                                   eigenstates_per_sample=_int(args.eigenstates), seed=seed)
        ells = int_list(args.ell) if args.ell else [n // 2]
        for e in ells:
            if not 1 <= e <= n // 2:
                raise ConfigError(f"ell = {e} outside [1, N/2] for N = {n}")
        if not ells:
            continue
        try:
            pts = ensembles.syk2_page(cfg, ells, alpha, threads)
        except NUMERICAL_ERRORS as exc:
            rows.extend(dict(N=n, r=e / n, fnl_density_mean=math.nan, stderr=math.nan,
                             fnl_asymptotic=math.nan, status=f"error: {exc}") for e in ells)
            continue
        for p in pts:
            rows.append(dict(N=n, r=p.r, fnl_density_mean=p.density, stderr=p.stderr,
                             fnl_asymptotic=ensembles.page_curve_asymptotic(p.r, alpha), status="ok"))
    return cols, rows


def run_xy_ground(args, threads: int):
    mus, etas, ells, alpha = float_list(args.mu), float_list(args.eta), int_list(args.ell), _alpha(args)
    if any(e < 1 for e in ells):
        raise ConfigError("ell must be >= 1")
    if args.grid:
        cols = ["mu", "eta", "ell", "fnl_density", "method"]
        rows = []
        for e in ells:
            rows.extend(lattice.phase_diagram_scan(mus, etas, e, alpha, threads=threads))
        return cols, rows
    cols = ["mu", "eta", "ell", "fnl", "fnl_peschel", "beta_fit", "status"]
    rows = []
    for mu in mus:
        for eta in etas:
            try:
                pes = lattice.fnl_semi_infinite(mu, eta, alpha).block
            except (lattice.CriticalPointError, ArithmeticError):
                pes = math.nan
            group = []
            for e in ells:
                def one(e=e):
                    return dict(mu=mu, eta=eta, ell=e, fnl=lattice.block_fnl(e, mu, eta, alpha),
                                fnl_peschel=pes)
                group.append(_row_guard(one, dict(mu=mu, eta=eta, ell=e, fnl=math.nan, fnl_peschel=pes)))
            good = [(r["ell"], r["fnl"]) for r in group if r["status"] == "ok"]
            beta = lattice.fit_log_slope(*zip(*good))[0] if len({g[0] for g in good}) >= 2 else math.nan
            for r in group:
                r["beta_fit"] = beta
            rows.extend(group)
    return cols, rows


def run_quench(args, threads: int):
    mu0s, mus, ells, alpha = float_list(args.mu0), float_list(args.mu), int_list(args.ell), _alpha(args)
    times = float_list(args.times)
    cols = ["mu0", "mu", "ell", "t", "fnl_exact", "fnl_qp", "fnl_gge", "entropy_qp", "status"]
    rows = []
    for mu0 in mu0s:
        for mu in mus:
            for e in ells:
                qp = quench.QuenchParams(mu0, mu, e, tuple(times))
                if e < 1:
                    raise ConfigError("ell must be >= 1")
                gge = quench.stationary_fnl(e, qp, alpha)
                try:
                    exact = quench.exact_fnl_series(e, times, qp, alpha, threads=threads)
                    err = None
                except NUMERICAL_ERRORS as exc:
                    exact, err = [math.nan] * len(times), f"error: {exc}"
                for t, fx in zip(times, exact):
                    rows.append(dict(mu0=mu0, mu=mu, ell=e, t=t, fnl_exact=float(fx),
                                     fnl_qp=quench.quasiparticle_fnl(e, t, qp, alpha), fnl_gge=gge,
                                     entropy_qp=quench.quasiparticle_entropy(e, t, qp),
                                     status=err or "ok"))
    return cols, rows


def run_circuit(args, threads: int):
    ns, alpha, seed = int_list(args.n), _alpha(args), _seed(args)
    cols = ["N", "t", "sqrt_t_over_N", "fnl_mean", "fnl_stderr", "realizations"]
    rows = []
    for n in ns:
        layers = _int(args.layers) if args.layers not in (None, "") else n * n
        record = tuple(int_list(args.times)) if args.times else None
        cfg = circuits.CircuitConfig(n, layers, realizations=_int(args.samples), seed=seed,
                                     record=record, alpha=alpha)
        tr = circuits.circuit_fnl_trajectory(cfg, threads=threads)
        for t, m, s, u in zip(tr.times, tr.mean, tr.stderr, tr.sqrt_t_over_n):
            rows.append(dict(N=n, t=int(t), sqrt_t_over_N=float(u), fnl_mean=float(m),
                             fnl_stderr=float(s), realizations=cfg.realizations))
    return cols, rows


def _verify_states(args, seed: int):
    n = _int(args.n)
    if not 2 <= n <= 10:
        raise ConfigError("verify needs 2 <= N <= 10")
    for mu in float_list(args.mu):
        psi, _ = oracle.ising_ground_state_dense(n, mu, 1.0)
        yield f"ising_mu={mu:.17g}", psi
    for i in range(_int(args.samples)):
        o = ensembles.sample_haar_orthogonal(2 * n, rngmod.stream(seed, i))
        yield f"haar_{i}", oracle.gaussian_state(o)


def run_verify(args, threads: int):
    seed, alpha = _seed(args), _alpha(args)
    n = _int(args.n)
    ell = _int(args.ell) if args.ell not in (None, "") else n // 2
    if not 1 <= ell < n:
        raise ConfigError("ell must satisfy 1 <= ell < N")
    classes = [c.strip() for c in args.classes.split(",") if c.strip()]
    for c in classes:
        if c not in ("gaussian", "generic"):
            raise ConfigError(f"unknown unitary class {c!r}")
    cols = ["state_id", "fnl_formula", "min_gaussian", "min_generic", "gap_gaussian", "gap_generic",
            "converged", "status"]
    rows = []
    for k, (sid, psi) in enumerate(_verify_states(args, seed)):
        def one(sid=sid, psi=psi, k=k):
            fnl = core.fnl_magic(oracle.covariance_from_state(psi), list(range(ell)), alpha)
            row = dict(state_id=sid, fnl_formula=fnl, min_gaussian=math.nan, min_generic=math.nan,
                       gap_gaussian=math.nan, gap_generic=math.nan, converged=True)
            for c in classes:
                cfg = variational.OptimizerConfig(c, restarts=_int(args.restarts), alpha=alpha)
                res = variational.variational_min(psi, ell, cfg, seed=seed + k, threads=threads)
                row[f"min_{c}"] = res.value
                row[f"gap_{c}"] = res.value - fnl
                row["converged"] = row["converged"] and res.converged
            return row
        rows.append(_row_guard(one, dict(state_id=sid, fnl_formula=math.nan, min_gaussian=math.nan,
                                         min_generic=math.nan, gap_gaussian=math.nan,
                                         gap_generic=math.nan, converged=False)))
    return cols, rows


COMMANDS = {
    "page-curve": (run_page_curve, "finite-N kernel, Monte Carlo and asymptotic Page curve"),
    "syk2": (run_syk2, "SYK2 eigenstate FNL density"),
    "xy-ground": (run_xy_ground, "XY ground-state FNL sweeps, ladder values and log-slope fits"),
    "quench": (run_quench, "Ising quench: exact, quasiparticle and stationary FNL"),
    "circuit": (run_circuit, "random matchgate brickwork circuits"),
    "verify": (run_verify, "closed form against brute-force minimization"),
}

DEFAULTS = {
    "page-curve": dict(n="12", ell="", samples="200"),
    "syk2": dict(n="40", ell="", samples="20", eigenstates="10"),
    "xy-ground": dict(mu="1", eta="1", ell="8,16,32,64"),
    "quench": dict(mu0="inf", mu="1", ell="40", times="0:40:4"),
    "circuit": dict(n="20", samples="20", layers="", times=""),
    "verify": dict(n="8", ell="", mu="0.5,1,2", samples="0", restarts="3"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fnlmagic", description="Fermionic non-local magic experiments.")
    p.add_argument("--version", action="version", version=f"fnlmagic {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", help="key=value file; command-line flags take precedence")
        s.add_argument("--seed", default="0")
        s.add_argument("--alpha", default="2")
        s.add_argument("--out", default="-", help="output path ('-' for stdout)")
        s.add_argument("--format", default="csv", choices=["csv", "json"])
        s.add_argument("--threads", default=None, help=f"integer or 'auto' (default ${THREADS_ENV} or 1)")
        d = DEFAULTS[name]
        if name in ("page-curve", "syk2", "circuit", "verify"):
            s.add_argument("--n", default=d["n"])
        if name in ("page-curve", "syk2", "xy-ground", "quench", "verify"):
            s.add_argument("--ell", default=d["ell"])
        if name in ("xy-ground", "quench", "verify"):
            s.add_argument("--mu", default=d["mu"])
        if name == "xy-ground":
            s.add_argument("--eta", default=d["eta"])
            s.add_argument("--grid", action="store_true", help="emit the long-format (mu, eta) density scan")
        if name == "quench":
            s.add_argument("--mu0", default=d["mu0"], help="'inf' for the polarized start")
            s.add_argument("--times", default=d["times"])
        if name in ("page-curve", "syk2", "circuit", "verify"):
            s.add_argument("--samples", default=d["samples"])
        if name == "page-curve":
            s.add_argument("--weight", default="haar", choices=sorted(ensembles.WEIGHT_EXPONENT_OFFSET))
        if name == "syk2":
            s.add_argument("--eigenstates", default=d["eigenstates"])
        if name == "circuit":
            s.add_argument("--layers", default=d["layers"], help="default N^2")
            s.add_argument("--times", default=d["times"], help="layers to record (default all)")
        if name == "verify":
            s.add_argument("--restarts", default=d["restarts"])
            s.add_argument("--classes", default="gaussian,generic")
    return p


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config_file(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "grid" in values:
            values["grid"] = values["grid"].lower() in ("1", "true", "yes")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        threads = resolve_threads(args.threads)
        func = COMMANDS[args.command][0]
        cols, rows = func(args, threads)
    except SystemExit as exc:  # argparse usage errors already exit with 2
        return int(exc.code or 0)
    except NUMERICAL_ERRORS as exc:
        print(f"fnlmagic: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"fnlmagic: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    prov = fio.provenance_line(args.seed, args.command)
    text = fio.serialize(rows, cols, args.format, provenance=prov)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        fio.atomic_write(args.out, text)
    failed = [r for r in rows if str(r.get("status", "ok")) not in ("ok",)]
    if failed:
        print(f"fnlmagic: {len(failed)} row(s) failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
