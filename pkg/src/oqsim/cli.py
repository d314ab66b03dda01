"""Scenario runner and report emitter.

Scenarios are described by INI-style config files with sections mirroring
the library modules; unknown sections or keys are hard errors so a config
always means what it says.  Numeric payloads go to CSV (17 significant
digits, byte-stable for a fixed config), and every run writes a JSON report
embedding the fully resolved config and the package version.

Exit codes: 0 success, 2 config error, 3 parameter validation error,
4 runtime (stability / boundary / domain) error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .domain import ElementaryComponent, Grid, PhysicalParams, validate_params
from .errors import ConfigError, OqsimError, ValidationError
from .integrator import IntegratorConfig, evolve_chi_numeric, pde_residual
from .profiles import GaussPolyProfile
from .propagator import (
    REDERIVED_FORMULA,
    coefficient_table,
    coefficients,
    evolve_component,
    longtime_weight_rate,
    write_coefficient_csv,
)
from .rotations import cg_table_rows, clebsch_gordan, tensor_operator_basis
from .states import (
    SpectralState,
    component_weight,
    evolve_state,
    gaussian_packet_state,
    gaussian_spread_state,
    momentum_expectation,
    norm,
    purity,
    synthesize,
)
from .symmetry import classify_symmetry

_SCHEMA: dict[str, set[str]] = {
    "params": {"m", "hbar", "nu", "xi", "d0", "d2", "f", "strict_positivity"},
    "grid": {"n", "length"},
    "xgrid": {"n", "length"},
    "component": {"q_re", "q_im", "profile", "alpha", "amplitude"},
    "state": {"kind", "dq", "q0", "alpha", "sigma", "k0", "amplitude"},
    "schedule": {"times"},
    "integrator": {"dt", "stencil", "boundary", "safety"},
    "scenario": {"name", "kind"},
    "rotations": {"lmax", "l_minus", "l_plus"},
    "residual": {"q_re", "q_im", "alpha", "t", "h_t_ladder", "spacing_ladder"},
}

_KINDS = (
    "component-decay",
    "oracle-diff",
    "evolve-state",
    "symmetry-scan",
    "rotations-table",
    "residual-check",
)


def load_config(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = _SCHEMA[section]
        values = dict(parser.items(section))
        unknown = set(values) - allowed
        if unknown:
            raise ConfigError(
                f"unknown keys in [{section}]: {', '.join(sorted(unknown))}"
            )
        out[section] = values
    return out


def _resolve_params(cfg: dict) -> PhysicalParams:
    section = cfg.get("params", {})
    p = PhysicalParams.from_mapping(section)
    strict = section.get("strict_positivity", "false").lower() in ("1", "true", "yes", "on")
    return validate_params(p, strict=strict)


def _resolve_grid(cfg: dict, section: str, default_n: int = 512, default_length: float = 32.0
                  ) -> Grid:
    sec = cfg.get(section, {})
    return Grid(int(sec.get("n", default_n)), float(sec.get("length", default_length)))


def _resolve_schedule(cfg: dict) -> list[float]:
    raw = cfg.get("schedule", {}).get("times", "").strip()
    if not raw:
        return []
    times = [float(tok) for tok in raw.split(",") if tok.strip()]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("schedule times must be strictly increasing")
    return times


def _resolve_integrator(cfg: dict) -> IntegratorConfig:
    sec = cfg.get("integrator", {})
    dt_raw = sec.get("dt", "auto").strip().lower()
    stencil_raw = sec.get("stencil", "4").strip().lower()
    stencil: int | str = "spectral" if stencil_raw == "spectral" else int(stencil_raw)
    try:
        return IntegratorConfig(
            dt=None if dt_raw in ("auto", "") else float(dt_raw),
            stencil=stencil,
            boundary=sec.get("boundary", "clamped-decay").strip(),
            safety=float(sec.get("safety", "0.4")),
        )
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve_component(cfg: dict, grid: Grid) -> ElementaryComponent:
    sec = cfg.get("component", {})
    q = complex(float(sec.get("q_re", "0")), float(sec.get("q_im", "0")))
    shape = sec.get("profile", "gaussian").strip()
    amp = float(sec.get("amplitude", "1"))
    if shape == "gaussian":
        profile = GaussPolyProfile.gaussian(float(sec.get("alpha", "0.25")), amplitude=amp)
    elif shape == "constant":
        profile = GaussPolyProfile.constant(amp)
    else:
        raise ConfigError(f"unknown component profile {shape!r}")
    return ElementaryComponent(q=q, profile=profile, grid=grid)


def _resolve_state(cfg: dict, x_grid: Grid, xd_grid: Grid) -> SpectralState:
    sec = cfg.get("state", {})
    kind = sec.get("kind", "spread").strip()
    if kind == "packet":
        return gaussian_packet_state(
            x_grid, xd_grid, sigma=float(sec.get("sigma", "1")), k0=float(sec.get("k0", "0"))
        )
    if kind == "spread":
        return gaussian_spread_state(
            x_grid,
            xd_grid,
            dq=float(sec.get("dq", "0.5")),
            q0=float(sec.get("q0", "0")),
            alpha=float(sec.get("alpha", "0.25")),
            amplitude=float(sec.get("amplitude", "1")),
        )
    raise ConfigError(f"unknown state kind {kind!r}")


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _write_report(out_dir: Path, command: str, cfg: dict, results: dict, quiet: bool) -> Path:
    report = {
        "version": __version__,
        "command": command,
        "config": cfg,
        "results": results,
    }
    path = out_dir / "report.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    if not quiet:
        print(f"report: {path}")
    return path


# -- scenario implementations ---------------------------------------------------


def _run_component_decay(cfg, out_dir, args) -> dict:
    p = _resolve_params(cfg)
    grid = _resolve_grid(cfg, "grid")
    comp = _resolve_component(cfg, grid)
    times = _resolve_schedule(cfg)

    rows = []
    for t in [0.0] + times:
        ev = evolve_component(comp, p, t)
        weight = complex(ev.profile(np.array([0.0]))[0])
        co = coefficients(p, complex(comp.q), t)
        rows.append((t, abs(weight), abs(weight) ** 2, complex(co.a).real, complex(co.a).imag))
    _write_csv(out_dir / "decay.csv", ("t", "weight", "weight_sq", "re_a", "im_a"), rows)
    write_coefficient_csv(
        out_dir / "coefficients.csv", coefficient_table(p, complex(comp.q), [0.0] + times)
    )

    results: dict = {"initial_weight": rows[0][1]}
    if len(times) >= 3:
        tail = [r for r in rows if r[0] >= times[-1] / 2.0 and r[2] > 0.0]
        ts = np.array([r[0] for r in tail])
        logw = np.log(np.array([r[2] for r in tail]))
        fitted = float(np.polyfit(ts, logw, 1)[0])
        expected = 2.0 * complex(longtime_weight_rate(p, complex(comp.q))).real
        results.update(
            fitted_rate=fitted,
            expected_rate=expected,
            rate_rel_err=abs(fitted - expected) / max(abs(expected), 1e-300),
        )
    return results


def _run_oracle_diff(cfg, out_dir, args) -> dict:
    p = _resolve_params(cfg)
    grid = _resolve_grid(cfg, "grid")
    comp = _resolve_component(cfg, grid)
    times = _resolve_schedule(cfg)
    icfg = _resolve_integrator(cfg)

    chi0 = comp.chi
    rows = []
    worst = 0.0
    for t in times:
        analytic = evolve_component(comp, p, t).chi
        numeric = evolve_chi_numeric(chi0, p, complex(comp.q), t, grid, icfg)
        rel = float(np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric))
        worst = max(worst, rel)
        rows.append((t, rel))
    _write_csv(out_dir / "oracle_diff.csv", ("t", "rel_l2"), rows)
    return {"max_rel_l2": worst, "n_times": len(times)}


def _run_evolve_state(cfg, out_dir, args) -> dict:
    p = _resolve_params(cfg)
    xd_grid = _resolve_grid(cfg, "grid")
    x_grid = _resolve_grid(cfg, "xgrid", default_n=256, default_length=64.0)
    state = _resolve_state(cfg, x_grid, xd_grid)
    times = _resolve_schedule(cfg)

    rows = []
    for t in [0.0] + times:
        st = evolve_state(state, p, t, threads=args.threads) if t > 0 else state
        rho = synthesize(st)
        n = norm(rho)
        rows.append((t, n.real, n.imag, component_weight(rho), purity(rho)))
    _write_csv(
        out_dir / "observables.csv",
        ("t", "norm_re", "norm_im", "component_weight", "purity"),
        rows,
    )
    final_rho = synthesize(evolve_state(state, p, times[-1], threads=args.threads)) \
        if times else synthesize(state)
    results = {
        "final_norm_re": norm(final_rho).real,
        "final_component_weight": component_weight(final_rho),
        "weight_ratio": rows[-1][3] / rows[0][3] if rows[0][3] else float("nan"),
    }
    try:
        results["final_momentum"] = momentum_expectation(final_rho, hbar=p.hbar)
    except OqsimError:
        results["final_momentum"] = None
    return results


def _run_symmetry_scan(cfg, out_dir, args) -> dict:
    p = _resolve_params(cfg)
    report = classify_symmetry(p)
    (out_dir / "symmetry.json").write_text(report.to_json() + "\n")
    _write_csv(
        out_dir / "defects.csv",
        ("a_plus", "a_minus", "t", "value"),
        [(d["a_plus"], d["a_minus"], d["t"], d["value"]) for d in report.defects],
    )
    return {"classification": report.classification,
            "defects": [d["value"] for d in report.defects]}


def _run_rotations_table(cfg, out_dir, args) -> dict:
    lmax = int(args.lmax if args.lmax is not None else cfg.get("rotations", {}).get("lmax", 2))
    rows = cg_table_rows(lmax)
    _write_csv(out_dir / "cg_table.csv", ("l1", "m1", "l2", "m2", "l", "m", "value"), rows)

    # orthogonality self-check: sum_{m1,m2} C(..|l m) C(..|l' m') = delta delta
    worst = 0.0
    for l1 in range(lmax + 1):
        for l2 in range(lmax + 1):
            ls = range(abs(l1 - l2), l1 + l2 + 1)
            for la in ls:
                for lb in ls:
                    for ma in range(-la, la + 1):
                        for mb in range(-lb, lb + 1):
                            acc = 0.0
                            for m1 in range(-l1, l1 + 1):
                                m2a = ma - m1
                                if abs(m2a) > l2 or m2a != mb - m1:
                                    continue
                                acc += clebsch_gordan(l1, m1, l2, m2a, la, ma) * \
                                    clebsch_gordan(l1, m1, l2, m2a, lb, mb)
                            target = 1.0 if (la, ma) == (lb, mb) else 0.0
                            worst = max(worst, abs(acc - target))
    sec = cfg.get("rotations", {})
    basis_defect = None
    if "l_minus" in sec or "l_plus" in sec:
        basis = tensor_operator_basis(float(sec.get("l_minus", 1)), float(sec.get("l_plus", 1)))
        basis_defect = basis.gram_defect()
    return {"lmax": lmax, "n_rows": len(rows), "orthogonality_defect": worst,
            "basis_gram_defect": basis_defect}


def _run_residual_check(cfg, out_dir, args) -> dict:
    p = _resolve_params(cfg)
    sec = cfg.get("residual", {})
    q = complex(float(sec.get("q_re", "1")), float(sec.get("q_im", "0")))
    alpha = float(sec.get("alpha", "0.25"))
    t0 = float(sec.get("t", "0.8"))
    h_ts = [float(v) for v in sec.get("h_t_ladder", "1e-2,5e-3,2.5e-3").split(",")]
    spacings = [float(v) for v in sec.get("spacing_ladder", "0.25,0.125,0.0625").split(",")]

    profile = GaussPolyProfile.gaussian(alpha)

    def evaluator(t, x):
        co = coefficients(p, q, t)
        decay = float(np.exp(-p.nu * t))
        return profile(x * decay + co.shift) * np.exp(co.a + 1j * co.k * x - co.width * x * x)

    rows = []
    fine = Grid(2048, 32.0)
    for h_t in h_ts:
        r = pde_residual(p, q, evaluator, [t0], fine, h_t=h_t,
                         cfg=IntegratorConfig(stencil="spectral", boundary="periodic"))
        rows.append(("time", h_t, fine.spacing, r))
    for spacing in spacings:
        grid = Grid(int(round(32.0 / spacing)), 32.0)
        r = pde_residual(p, q, evaluator, [t0], grid, h_t=1e-6,
                         cfg=IntegratorConfig(stencil=4, boundary="clamped-decay"))
        rows.append(("space", 1e-6, grid.spacing, r))
    _write_csv(out_dir / "residuals.csv", ("scan", "h_t", "spacing", "residual"), rows)

    def order(pairs):
        (h1, r1), (h2, r2) = pairs[-2], pairs[-1]
        return float(np.log(r1 / r2) / np.log(h1 / h2))

    t_rows = [(r[1], r[3]) for r in rows if r[0] == "time"]
    s_rows = [(r[2], r[3]) for r in rows if r[0] == "space"]
    return {
        "time_order": order(t_rows) if len(t_rows) >= 2 else None,
        "space_order": order(s_rows) if len(s_rows) >= 2 else None,
        "min_residual": min(r[3] for r in rows),
    }


_RUNNERS = {
    "component-decay": _run_component_decay,
    "oracle-diff": _run_oracle_diff,
    "evolve-state": _run_evolve_state,
    "symmetry-scan": _run_symmetry_scan,
    "rotations-table": _run_rotations_table,
    "residual-check": _run_residual_check,
}


def _execute(kind: str, cfg: dict, args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _RUNNERS[kind](cfg, out_dir, args)
    _write_report(out_dir, kind, cfg, results, args.quiet)
    if not args.quiet:
        for key, value in sorted(results.items()):
            print(f"  {key}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oqsim",
        description="Elementary-component simulator for translation-invariant "
        "open quantum dynamics",
    )
    parser.add_argument("--version", action="version", version=f"oqsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=False, default=None, help="INI scenario config")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--quiet", action="store_true")
        sp.add_argument("--threads", type=int, default=1)

    run = sub.add_parser("run", help="run the scenario described by the config")
    common(run)

    for kind in _KINDS:
        sp = sub.add_parser(kind, help=f"run a {kind} scenario")
        common(sp)
        if kind == "rotations-table":
            sp.add_argument("--lmax", type=int, default=None)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "lmax"):
        args.lmax = None
    try:
        cfg = load_config(args.config) if args.config else {}
        if args.command == "run":
            kind = cfg.get("scenario", {}).get("kind", "")
            if kind not in _RUNNERS:
                raise ConfigError(
                    f"[scenario] kind must be one of {sorted(_RUNNERS)}, got {kind!r}"
                )
        else:
            kind = args.command
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _execute(kind, cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except OqsimError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
