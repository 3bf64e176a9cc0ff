"""Command line entry point: ``hecke-density {constants,zeros,density,verify,angles}``.

Exit status: 0 success, 1 verification or numerical failure, 2 configuration error.
A flat JSON file given with ``--config`` supplies defaults; explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import density as dens
from .errors import ConfigurationError, HeckeDensityError, SieveRangeError, SieveTooSmall
from .heckecoeff import (
    CoeffTable,
    build_coeffs,
    character_sum_bruteforce,
    dirichlet_kernel_sum,
    direct_coeff_arrays,
    enumerate_ideals,
)
from .lfunc import LSpec, ZeroSet, lambda_batch, zeros_with_growing_table
from .quadfield import HEEGNER, angle_bound_scan, make_field
from .testfn import fejer

log = logging.getLogger("hecke_density")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunConfig:
    d: int = 7
    N: int | None = None
    K: int = 40
    sigma: float = 0.6
    T_override: float | None = None
    eps: float = 1e-8
    sieve_bound: int = 10**6
    psi_T: float = 1e6
    output_dir: str = "hecke_out"
    threads: int = 1
    all_fields: bool = False

    def validate(self) -> None:
        if self.N is None:
            self.N = 6 if self.d == 3 else 2
        make_field(self.d, self.N)
        if self.K < 1:
            raise ConfigurationError("K must be positive")
        if not self.sigma > 0:
            raise ConfigurationError("sigma must be positive")
        if not 1e-12 <= self.eps <= 1e-4:
            raise ConfigurationError("eps must lie in [1e-12, 1e-4]")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if self.T_override is not None and self.T_override < 0:
            raise ConfigurationError("T must be nonnegative")

    def fields_to_run(self) -> list[int]:
        return list(HEEGNER) if self.all_fields else [self.d]

    def frequency_for(self, d: int) -> int:
        # with --field all each field runs at its own unit order unless N fits every field
        w = 6 if d == 3 else 2
        return self.N if self.N and self.N % w == 0 else w


_FLAG_TO_FIELD = {"d": "d", "N": "N", "K": "K", "sigma": "sigma", "T": "T_override", "eps": "eps",
                  "sieve": "sieve_bound", "psi_T": "psi_T", "out": "output_dir",
                  "threads": "threads"}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file with RunConfig keys")
    common.add_argument("--d", type=int)
    common.add_argument("--N", type=int)
    common.add_argument("--K", type=int)
    common.add_argument("--sigma", type=float)
    common.add_argument("--T", type=float, help="zero height (default: from the tail bound)")
    common.add_argument("--eps", type=float)
    common.add_argument("--sieve", type=int)
    common.add_argument("--psi-T", dest="psi_T", type=float)
    common.add_argument("--out")
    common.add_argument("--threads", type=int)
    common.add_argument("--field", choices=["all"], help="iterate over every supported field")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hecke-density", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="lower-order constants as JSON")
    sub.add_parser("zeros", parents=[common], help="critical-line zeros for k = 1..K")
    sub.add_parser("density", parents=[common], help="empirical density against predictions")
    verify = sub.add_parser("verify", parents=[common], help="invariant suite, pass/fail table")
    verify.add_argument("--quick", action="store_true", help="smaller oracle ranges")
    angles = sub.add_parser("angles", parents=[common], help="lattice angle bound scan")
    angles.add_argument("--R", type=float, nargs="+", default=[100.0, 200.0])
    angles.add_argument("--Q", type=int, default=1)
    angles.add_argument("--axes-only", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for flag, name in _FLAG_TO_FIELD.items():
        val = getattr(args, flag, None)
        if val is not None:
            values[name] = val
    if getattr(args, "field", None) == "all":
        values["all_fields"] = True
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _out(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- constants ------------------------------------------------------------

def cmd_constants(cfg: RunConfig) -> int:
    results = []
    for d in cfg.fields_to_run():
        field = make_field(d, cfg.frequency_for(d) if cfg.all_fields else cfg.N)
        bundle = dens.constants(field, psi_T=cfg.psi_T)
        (_out(cfg) / f"constants_d{d}_N{field.freq_mult}.json").write_text(bundle.to_json())
        results.append(asdict(bundle))
    print(json.dumps(results if cfg.all_fields else results[0], indent=2))
    return EXIT_OK


# -- zeros ----------------------------------------------------------------

def _zero_dir(cfg: RunConfig, d: int, N: int, T: float) -> Path:
    return _out(cfg) / "zeros" / f"d{d}_N{N}_T{T:.6g}_eps{cfg.eps:g}"


def _zero_job(args):
    d, N, k, T, eps = args
    zs, coeffs = zeros_with_growing_table(make_field(d, N), k, T, eps)
    return zs, coeffs


def _load_cached(directory: Path, k: int, d: int, N: int, T: float, eps: float) -> ZeroSet | None:
    manifest_path = directory / f"zeros_k{k}.json"
    csv_path = directory / f"zeros_k{k}.csv"
    if not (manifest_path.exists() and csv_path.exists()):
        return None
    try:
        manifest = json.loads(manifest_path.read_text())
        if (manifest["d"], manifest["N"], manifest["k"]) != (d, N, k):
            return None
        if not math.isclose(manifest["T"], T) or not math.isclose(manifest["eps"], eps):
            return None
        return ZeroSet.from_files(csv_path, manifest)
    except (OSError, KeyError, ValueError):
        return None


def family_zeros(cfg: RunConfig, d: int, N: int, T: float) -> list[ZeroSet]:
    """Zero sets for k = 1..K, served from the output cache when the manifest matches."""
    directory = _zero_dir(cfg, d, N, T)
    directory.mkdir(parents=True, exist_ok=True)
    cache = _out(cfg) / "cache"
    cache.mkdir(exist_ok=True)
    found: dict[int, ZeroSet] = {}
    todo = []
    for k in range(1, cfg.K + 1):
        cached = _load_cached(directory, k, d, N, T, cfg.eps)
        if cached is None:
            todo.append((d, N, k, T, cfg.eps))
        else:
            found[k] = cached
    if todo:
        log.info("computing %d zero sets (%d cached)", len(todo), len(found))
        if cfg.threads > 1:
            with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(_zero_job, todo))
        else:
            results = [_zero_job(job) for job in todo]
        for zs, coeffs in results:
            zs.write(directory)
            coeffs.save(cache / f"coeffs_d{d}_N{N}_k{zs.k}.npz")
            found[zs.k] = zs
    # ordered join keeps every downstream reduction deterministic
    return [found[k] for k in sorted(found)]


def _height(cfg: RunConfig, field) -> float:
    if cfg.T_override is not None:
        return cfg.T_override
    return round(dens.default_height(fejer(cfg.sigma), max(cfg.K, 2), field), 4)


def cmd_zeros(cfg: RunConfig) -> int:
    summary = []
    for d in cfg.fields_to_run():
        N = cfg.frequency_for(d) if cfg.all_fields else cfg.N
        field = make_field(d, N)
        T = _height(cfg, field)
        sets = family_zeros(cfg, d, N, T)
        manifest = {"d": d, "N": N, "K": cfg.K, "T": T, "eps": cfg.eps,
                    "sets": [zs.manifest() for zs in sets],
                    "complete_fraction": float(np.mean([zs.complete for zs in sets])) if sets else 1.0}
        (_zero_dir(cfg, d, N, T) / "manifest.json").write_text(json.dumps(manifest, indent=2))
        incomplete = [zs.k for zs in sets if not zs.complete]
        summary.append({"d": d, "N": N, "T": T, "zeros": sum(len(z.gammas) for z in sets),
                        "incomplete_k": incomplete})
    print(json.dumps(summary if cfg.all_fields else summary[0], indent=2))
    return EXIT_OK


# -- density --------------------------------------------------------------

def cmd_density(cfg: RunConfig) -> int:
    if cfg.K < 2:
        raise ConfigurationError("density needs K >= 2")
    tf = fejer(cfg.sigma)
    for d in cfg.fields_to_run():
        N = cfg.frequency_for(d) if cfg.all_fields else cfg.N
        field = make_field(d, N)
        T = _height(cfg, field)
        # cheap preconditions first, before any zeros are computed
        if cfg.sieve_bound < dens.required_sieve(tf, cfg.K):
            raise SieveTooSmall(f"--sieve {cfg.sieve_bound} < required {dens.required_sieve(tf, cfg.K)}")
        tail = dens.zero_tail_bound(tf, cfg.K, T, field)
        if tail > 0.01:
            print(f"error: TailTooLarge: zero tail bound {tail:.3g} at T={T:g} exceeds 0.01. "
                  f"Remedy: rerun with a larger --T (at least {dens.default_height(tf, cfg.K, field):.4g}).",
                  file=sys.stderr)
            return EXIT_CONFIG
        sets = family_zeros(cfg, d, N, T)
        consts = dens.constants(field, psi_T=cfg.psi_T, l1_blocks=0)
        report = dens.density_report(sets, tf, field, cfg.K, consts, sieve_bound=cfg.sieve_bound)
        report.write(_out(cfg) / f"density_d{d}_N{N}_K{cfg.K}_s{cfg.sigma:g}")
        print(f"d={d} N={N} K={cfg.K} {tf.label} T={T:g}")
        for name in ("empirical", "unconditional_prediction", "rc_prediction", "s_x_exact",
                     "s_inert", "s_split", "s_ram", "explicit_formula_residual",
                     "identity_residual", "tail_bound"):
            print(f"  {name:26s} {getattr(report, name): .10f}")
    return EXIT_OK


# -- verify ---------------------------------------------------------------

def _check(rows: list, name: str, value: float, limit: float, lower_is_better: bool = True) -> None:
    ok = value <= limit if lower_is_better else value > limit
    rows.append((name, ok, value, limit))


def verify_field(d: int, N: int, cache: Path | None, quick: bool, eps: float) -> list:
    rows: list = []
    field = make_field(d, N)
    n_max, k_max = (300, 2) if quick else (2000, 10)
    table = enumerate_ideals(field, n_max)
    worst = 0.0
    for k in range(1, k_max + 1):
        A, mu, c = direct_coeff_arrays(field, k, table)
        built = build_coeffs(field, k, n_max)
        worst = max(worst, *(float(np.max(np.abs(x[1:] - y[1:])))
                             for x, y in ((A, built.A), (mu, built.mu), (c, built.c))))
    _check(rows, f"d={d} coefficient oracle (n<={n_max}, k<={k_max})", worst, 1e-10)

    if cache is not None:
        for path in sorted(cache.glob(f"coeffs_d{d}_N{N}_k*.npz")):
            stored = CoeffTable.load(path)
            m = min(stored.n_max, n_max)
            A, mu, c = direct_coeff_arrays(field, stored.k, enumerate_ideals(field, m))
            err = max(float(np.max(np.abs(x[1:m + 1] - y[1:m + 1])))
                      for x, y in ((A, stored.A), (mu, stored.mu), (c, stored.c)))
            _check(rows, f"d={d} cached table {path.name}", err, 1e-10)

    rng = np.random.default_rng(2024)
    fe = 0.0
    for k in (1, 5) if quick else (1, 5, 20):
        spec = LSpec.of(field, k)
        coeffs = build_coeffs(field, k, 4000)
        t = rng.uniform(0, 15, 10)
        a = lambda_batch(spec, 0.5 + 1j * t, coeffs, eps)
        b = lambda_batch(spec, 0.5 - 1j * t, coeffs, eps, rotation=-0.5 * np.arctan2(t, 0.5 + spec.mu_shift))
        fe = max(fe, float(np.max(np.abs(a - b))))
    _check(rows, f"d={d} functional equation residual", fe, 2 * eps)

    kern = 0.0
    for _ in range(200):
        K, n, theta = int(rng.integers(1, 101)), int(rng.integers(1, 21)), float(rng.uniform(0, np.pi))
        kern = max(kern, abs(dirichlet_kernel_sum(K, n, theta, N) - character_sum_bruteforce(K, n, theta, N)))
    _check(rows, f"d={d} Dirichlet kernel identity", kern, 1e-10)

    consts = dens.constants(field, psi_T=1e5, inert_bound=10**6, l1_blocks=0)
    _check(rows, f"d={d} ell0 + ell1", abs(consts.ell0 + consts.ell1), 1e-12)
    _check(rows, f"d={d} Kronecker limit vs derivative oracle",
           abs(consts.lprime_ratio - dens.lprime_ratio_oracle(field)), 1e-4)
    _check(rows, f"d={d} angle bound (R=200, Q=1, axes) > 0",
           angle_bound_scan(field, N, 200.0, 1, axes_only=True), 0.0, lower_is_better=False)
    return rows


def cmd_verify(cfg: RunConfig, quick: bool = False) -> int:
    cache = Path(cfg.output_dir) / "cache"
    rows = [("psi integral at 1e6 within 0.02 of -1-gamma",
             abs(dens.psi_integral(cfg.psi_T) - dens.PSI_INTEGRAL_LIMIT) <= 0.02,
             abs(dens.psi_integral(cfg.psi_T) - dens.PSI_INTEGRAL_LIMIT), 0.02)]
    for d in cfg.fields_to_run():
        N = cfg.frequency_for(d) if cfg.all_fields else cfg.N
        rows += verify_field(d, N, cache if cache.exists() else None, quick, cfg.eps)
    width = max(len(r[0]) for r in rows)
    for name, ok, value, limit in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:{width}s}  value={value:.3e}  limit={limit:.1e}")
    return EXIT_OK if all(r[1] for r in rows) else EXIT_FAIL


# -- angles ---------------------------------------------------------------

def cmd_angles(cfg: RunConfig, radii: list[float], Q: int, axes_only: bool) -> int:
    out = []
    for d in cfg.fields_to_run():
        N = cfg.frequency_for(d) if cfg.all_fields else cfg.N
        field = make_field(d, N)
        for R in radii:
            out.append({"d": d, "N": N, "R": R, "Q": Q, "axes_only": axes_only,
                        "min_value": angle_bound_scan(field, N, R, Q, axes_only=axes_only)})
    path = _out(cfg) / "angles.csv"
    with open(path, "w") as fh:
        fh.write("d,N,R,Q,axes_only,min_value\n")
        for row in out:
            fh.write(",".join(str(row[k]) for k in ("d", "N", "R", "Q", "axes_only", "min_value")) + "\n")
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "constants":
            return cmd_constants(cfg)
        if args.command == "zeros":
            return cmd_zeros(cfg)
        if args.command == "density":
            return cmd_density(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, quick=args.quick)
        return cmd_angles(cfg, args.R, args.Q, args.axes_only)
    except (ConfigurationError, SieveRangeError, json.JSONDecodeError, TypeError) as exc:
        print(f"configuration error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HeckeDensityError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
