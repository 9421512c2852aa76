"""Experiment orchestration CLI.

One JSON config file describes one experiment; subcommands run the pipelines
and emit CSV/JSON artifacts plus a run manifest. Numbers are serialized with
17 significant digits so identical (config, seed) pairs reproduce outputs
byte-for-byte regardless of thread count.

Exit codes: 0 success, 2 config error, 3 numeric error (including reference
tolerance violations), 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import jsonschema

from . import __version__
from .asymptotics import (
    fit_gamma_kappa,
    gamma_aloha,
    gamma_aloha_beamforming,
    gamma_aloha_nakagami,
    gamma_csma_rayleigh_closed,
    gamma_kappa_csma,
    kappa_bounds_check,
    noise_taylor,
)
from .capacity import (
    condition_diagnostics,
    success_prob_bounds,
    tc_asymptotic,
    tc_bounds,
    tc_simulated,
)
from .channel import FadingModel, LinkConfig, PathLossModel
from .outage import Scenario, estimate_ps, truncation_radius
from .patterns import Window, dump_pattern
from .pointproc import (
    ClusterSpec,
    MaternSpec,
    ProductDensityModel,
    RejectionCapExceeded,
    matern_radius_for_density,
    palm_scenario_sample,
    sample_matern_hardcore,
    sample_ppp,
    sample_thomas_cluster,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


FADING_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["rayleigh", "nakagami", "beamforming", "deterministic"]},
        "m": {"type": "number", "minimum": 1},
        "M_r": {"type": "integer", "minimum": 1},
    },
    "required": ["kind"],
}

CLUSTER_SCHEMA = {
    "type": "object",
    "properties": {
        "parent_density": {"type": "number", "exclusiveMinimum": 0},
        "mean_cluster_size": {"type": "number", "minimum": 0},
        "spread": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["parent_density", "mean_cluster_size", "spread"],
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "link": {
            "type": "object",
            "properties": {
                "theta": {"type": "number", "exclusiveMinimum": 0},
                "R": {"type": "number", "exclusiveMinimum": 0},
                "pathloss": {
                    "type": "object",
                    "properties": {
                        "kind": {"enum": ["bounded", "unbounded"]},
                        "alpha": {"type": "number", "exclusiveMinimum": 2},
                    },
                    "required": ["kind", "alpha"],
                },
                "sd_fading": FADING_SCHEMA,
                "interferer_fading": FADING_SCHEMA,
                "noise_N": {"type": "number", "minimum": 0},
            },
            "required": ["theta", "R", "pathloss"],
        },
        "scenario": {
            "type": "object",
            "properties": {
                "process": {
                    "enum": [
                        "PPP_ALOHA",
                        "MATERN_CSMA",
                        "THOMAS_ALOHA",
                        "CLUSTER_MAC",
                        "PPP",
                        "MATERN",
                        "THOMAS",
                    ]
                },
                "p": {"type": "number", "minimum": 0, "maximum": 1},
                "q": {"type": "number", "minimum": 0, "maximum": 1},
                "a": {"type": "number", "exclusiveMinimum": 0},
                "density": {"type": "number", "minimum": 0},
                "cluster": CLUSTER_SCHEMA,
                "truncation_radius": {"type": "number", "exclusiveMinimum": 0},
                "truncation_tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["process"],
        },
        "window": {
            "type": "object",
            "properties": {
                "shape": {"enum": ["disc", "square"]},
                "center": {"type": "array", "items": {"type": "number"}},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "half_side": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["shape"],
        },
        "sweep": {
            "type": "object",
            "properties": {
                "eta_grid": {"type": "array", "items": {"type": "number"}},
                "epsilon_grid": {"type": "array", "items": {"type": "number"}},
            },
        },
        "budget": {
            "type": "object",
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "threads": {"type": "integer", "minimum": 1},
                "simulate_tc": {"type": "boolean"},
                "bounds": {"type": "boolean"},
            },
        },
        "gamma": {
            "type": "object",
            "properties": {
                "mac": {"enum": ["aloha", "csma"]},
                "rho2": {"type": "object"},
            },
            "required": ["mac"],
        },
        "tolerances": {"type": "object"},
        "outputs": {"type": "object"},
    },
    "required": ["seed"],
}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: line {e.lineno}: {e.msg}")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        path_str = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config field {path_str}: {e.message}")
    return cfg


def _link_from_config(cfg: dict) -> LinkConfig:
    link = cfg.get("link")
    if link is None:
        raise ConfigError("config requires a 'link' block for this command")
    return LinkConfig(
        theta=float(link["theta"]),
        R=float(link["R"]),
        pathloss=PathLossModel.from_json(link["pathloss"]),
        sd_fading=FadingModel.from_json(link.get("sd_fading", {"kind": "rayleigh"})),
        interferer_fading=FadingModel.from_json(
            link.get("interferer_fading", {"kind": "rayleigh"})
        ),
        noise_N=float(link.get("noise_N", 0.0)),
    )


def _cluster_from_config(block: dict) -> ClusterSpec:
    return ClusterSpec(
        parent_density=float(block["parent_density"]),
        mean_cluster_size=float(block["mean_cluster_size"]),
        spread=float(block["spread"]),
    )


def _scenario_params(cfg_sc: dict, eta: float | None = None) -> tuple[str, dict]:
    process = cfg_sc["process"]
    if process == "PPP_ALOHA":
        p = eta if eta is not None else cfg_sc.get("p")
        if p is None:
            raise ConfigError("scenario/p (or an eta sweep) is required for PPP_ALOHA")
        return process, {"p": float(p)}
    if process == "MATERN_CSMA":
        if eta is not None:
            return process, {"a": matern_radius_for_density(eta)}
        if "a" not in cfg_sc:
            raise ConfigError("scenario/a (or an eta sweep) is required for MATERN_CSMA")
        return process, {"a": float(cfg_sc["a"])}
    if process in ("THOMAS_ALOHA", "CLUSTER_MAC"):
        if "cluster" not in cfg_sc:
            raise ConfigError(f"scenario/cluster is required for {process}")
        spec = _cluster_from_config(cfg_sc["cluster"])
        if process == "THOMAS_ALOHA":
            p = eta / spec.density if eta is not None else cfg_sc.get("p")
            if p is None:
                raise ConfigError("scenario/p (or an eta sweep) is required")
            return process, {"spec": spec, "p": float(p)}
        q = eta / spec.density if eta is not None else cfg_sc.get("q")
        if q is None:
            raise ConfigError("scenario/q (or an eta sweep) is required")
        return process, {"spec": spec, "q": float(q)}
    raise ConfigError(f"process {process!r} is not valid for this command")


def _eta_grid(cfg: dict) -> list[float]:
    sweep = cfg.get("sweep", {})
    grid = sweep.get("eta_grid")
    if not grid:
        raise ConfigError("sweep/eta_grid must be a non-empty sorted array")
    if sorted(grid) != list(grid):
        raise ConfigError("sweep/eta_grid must be sorted ascending")
    return [float(g) for g in grid]


def _threads(args, cfg) -> int:
    if args.threads:
        return args.threads
    if cfg.get("budget", {}).get("threads"):
        return int(cfg["budget"]["threads"])
    env = os.environ.get("SIRASYM_THREADS")
    return int(env) if env else 1


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_manifest(out_dir: Path, cfg_path: str, cfg: dict, t0: float, rows: list):
    digest = hashlib.sha256(Path(cfg_path).read_bytes()).hexdigest()
    manifest = {
        "config_sha256": digest,
        "tool_version": __version__,
        "wall_clock_s": time.time() - t0,
        "seed": cfg.get("seed"),
        "row_seeds": rows,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _row_seed(base: int, i: int) -> int:
    return base * 1_000_003 + i


def _scenario_for(
    cfg: dict, link: LinkConfig, process: str, params: dict, samples: int, seed: int
) -> Scenario:
    sc_cfg = cfg.get("scenario", {})
    if "truncation_radius" in sc_cfg:
        r_max = float(sc_cfg["truncation_radius"])
    else:
        tol = float(sc_cfg.get("truncation_tol", 1e-4))
        r_max = truncation_radius(process, params, link, tol)
    return Scenario(process, params, link, truncation_radius=r_max, samples=samples, seed=seed)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_sample(cfg, args, out_dir: Path) -> int:
    seed = int(cfg["seed"])
    sc = cfg.get("scenario")
    if sc is None:
        raise ConfigError("sample requires a 'scenario' block")
    wcfg = cfg.get("window")
    if wcfg is None:
        raise ConfigError("sample requires a 'window' block")
    window = Window.from_json(wcfg)
    process = sc["process"]
    if process == "PPP":
        pattern = sample_ppp(float(sc.get("density", 1.0)), window, seed)
    elif process == "MATERN":
        pattern = sample_matern_hardcore(MaternSpec(float(sc["a"])), window, seed)
    elif process == "THOMAS":
        pattern = sample_thomas_cluster(_cluster_from_config(sc["cluster"]), window, seed)
    else:
        link = _link_from_config(cfg)
        proc, params = _scenario_params(sc)
        if proc == "THOMAS_ALOHA":
            params = {"spec": params["spec"], "p": params["p"]}
        pattern = palm_scenario_sample(proc, params, window, seed)
    dump_pattern(pattern, out_dir / "pattern.csv")
    print(f"wrote {len(pattern)} points to {out_dir / 'pattern.csv'}")
    return EXIT_OK


def cmd_simulate_outage(cfg, args, out_dir: Path) -> int:
    link = _link_from_config(cfg)
    seed = int(cfg["seed"])
    samples = int(cfg.get("budget", {}).get("samples", 100_000))
    threads = _threads(args, cfg)
    grid = _eta_grid(cfg)
    rows, seeds = [], []
    for i, eta in enumerate(grid):
        process, params = _scenario_params(cfg["scenario"], eta)
        rs = _row_seed(seed, i)
        sc = _scenario_for(cfg, link, process, params, samples, rs)
        est = estimate_ps(sc, workers=threads)
        param_str = ";".join(f"{k}={_fmt(float(v))}" for k, v in params.items() if k != "spec")
        rows.append(
            [
                process,
                param_str,
                est.eta,
                link.theta,
                link.pathloss.alpha,
                link.R,
                link.noise_N,
                est.p_success,
                est.std_error,
                est.truncation_bias_bound,
                est.samples_used,
                rs,
            ]
        )
        seeds.append(rs)
    _write_csv(
        out_dir / "outage.csv",
        ["process", "params", "eta", "theta", "alpha", "R", "N", "ps", "se", "bias_bound", "samples", "seed"],
        rows,
    )
    return EXIT_OK


def _rho2_from_config(block: dict) -> ProductDensityModel:
    kind = block.get("kind", "ppp")
    if kind == "ppp":
        return ProductDensityModel.ppp(float(block.get("density", 1.0)))
    if kind == "thomas":
        return ProductDensityModel.thomas(_cluster_from_config(block["cluster"]))
    if kind == "matern":
        return ProductDensityModel.matern(float(block["a"]))
    raise ConfigError(f"unknown rho2 kind {kind!r}")


def cmd_gamma(cfg, args, out_dir: Path) -> int:
    link = _link_from_config(cfg)
    gcfg = cfg.get("gamma")
    if gcfg is None:
        raise ConfigError("gamma requires a 'gamma' block with a 'mac' field")
    if gcfg["mac"] == "aloha":
        rho2 = _rho2_from_config(gcfg.get("rho2", {"kind": "ppp"}))
        res = gamma_aloha(rho2, link)
    else:
        res = gamma_kappa_csma(link)
    payload = {
        "gamma": res.gamma,
        "kappa": res.kappa,
        "method": res.method,
        "inputs": {"link": link.to_json(), "mac": gcfg["mac"]},
    }
    (out_dir / "gamma.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(json.dumps(payload))
    return EXIT_OK


def cmd_fit_kappa(cfg, args, out_dir: Path) -> int:
    link = _link_from_config(cfg)
    seed = int(cfg["seed"])
    samples = int(cfg.get("budget", {}).get("samples", 50_000))
    threads = _threads(args, cfg)
    grid = _eta_grid(cfg)
    ests, rows, seeds = [], [], []
    for i, eta in enumerate(grid):
        process, params = _scenario_params(cfg["scenario"], eta)
        rs = _row_seed(seed, i)
        sc = _scenario_for(cfg, link, process, params, samples, rs)
        est = estimate_ps(sc, workers=threads)
        ests.append(est)
        rows.append([eta, est.p_success, est.std_error, est.truncation_bias_bound, rs])
        seeds.append(rs)
    fit = fit_gamma_kappa(grid, ests)
    nu = 1 if link.sd_fading.kind == "deterministic" else link.sd_fading.nu
    check = kappa_bounds_check(link.pathloss.alpha, nu, fit.kappa, fit.kappa_se or 0.0)
    payload = {
        "gamma": fit.gamma,
        "kappa": fit.kappa,
        "gamma_se": fit.gamma_se,
        "kappa_se": fit.kappa_se,
        "method": fit.method,
        "diagnostics": fit.diagnostics,
        "bounds_check": {
            "ok": check.ok,
            "lower": check.lower,
            "upper": check.upper,
            "message": check.message,
        },
    }
    _write_csv(out_dir / "sweep.csv", ["eta", "ps", "se", "bias_bound", "seed"], rows)
    (out_dir / "fit.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(json.dumps({"gamma": fit.gamma, "kappa": fit.kappa}))
    return EXIT_OK


def cmd_tc(cfg, args, out_dir: Path) -> int:
    link = _link_from_config(cfg)
    seed = int(cfg["seed"])
    threads = _threads(args, cfg)
    sweep = cfg.get("sweep", {})
    eps_grid = sweep.get("epsilon_grid")
    if not eps_grid:
        raise ConfigError("sweep/epsilon_grid must be a non-empty array")
    process, params = _scenario_params(cfg["scenario"], 0.5)
    base_params = params
    simulate = bool(cfg.get("budget", {}).get("simulate_tc", True))
    with_bounds = bool(cfg.get("budget", {}).get("bounds", True))
    if process == "PPP_ALOHA" and link.sd_fading.kind == "rayleigh":
        from .asymptotics import gamma_aloha as _ga

        res = _ga(ProductDensityModel.ppp(1.0), link)
        gamma, kappa = res.gamma, res.kappa
    else:
        res = gamma_kappa_csma(link)
        gamma, kappa = res.gamma, res.kappa
    rows = []
    for i, eps in enumerate(eps_grid):
        eps = float(eps)
        tasym = tc_asymptotic(gamma, kappa, eps)
        tsim, tci = float("nan"), float("nan")
        if simulate:
            sim = tc_simulated(
                process, base_params, link, eps, seed=_row_seed(seed, i), workers=threads
            )
            tsim, tci = sim.tc, sim.ci
        tcl = tcu = float("nan")
        if with_bounds and link.sd_fading.kind == "rayleigh":
            b = tc_bounds(eps, process, base_params, link, seed=_row_seed(seed, 100 + i))
            tcl, tcu = b.tcl, b.tcu
        rows.append([eps, tasym, tsim, tci, tcl, tcu])
    _write_csv(out_dir / "tc.csv", ["epsilon", "tc_asym", "tc_sim", "tc_sim_ci", "tcl", "tcu"], rows)
    return EXIT_OK


def cmd_bounds(cfg, args, out_dir: Path) -> int:
    link = _link_from_config(cfg)
    seed = int(cfg["seed"])
    samples = int(cfg.get("budget", {}).get("samples", 20_000))
    threads = _threads(args, cfg)
    grid = _eta_grid(cfg)
    rows = []
    for i, eta in enumerate(grid):
        process, params = _scenario_params(cfg["scenario"], eta)
        rs = _row_seed(seed, i)
        sb = success_prob_bounds(process, params, link, mc_samples=samples, seed=rs)
        sc = _scenario_for(cfg, link, process, params, samples, rs)
        est = estimate_ps(sc, workers=threads)
        rows.append([eta, sb.lower, sb.upper, sb.mu, sb.sigma, est.p_success, est.std_error])
    _write_csv(
        out_dir / "bounds.csv", ["eta", "lower", "upper", "mu", "sigma", "ps", "se"], rows
    )
    return EXIT_OK


def cmd_diagnostics(cfg, args, out_dir: Path) -> int:
    link = _link_from_config(cfg)
    seed = int(cfg["seed"])
    samples = int(cfg.get("budget", {}).get("samples", 20_000))
    grid = _eta_grid(cfg)
    process, params = _scenario_params(cfg["scenario"], grid[0])
    base = {"spec": params["spec"]} if "spec" in params else {}
    report = condition_diagnostics(
        process, base, link, grid, samples=samples, seed=seed
    )
    payload = {
        "process": report.process,
        "b1_growth": report.b1_growth,
        "b1_bounded": report.b1_bounded,
        "b2_positive": report.b2_positive,
        "c1_ok": report.c1_ok,
        "c2_vanishing": report.c2_vanishing,
        "ps_plateau": report.ps_plateau,
        "rows": [
            {
                "eta": r.eta,
                "b1_sup": r.b1_sup,
                "b2": r.b2,
                "c1_ratio": r.c1_ratio,
                "c2_ratio": r.c2_ratio,
                "ps": r.p_success,
                "ps_se": r.p_success_se,
            }
            for r in report.rows
        ],
    }
    (out_dir / "diagnostics.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(json.dumps({k: payload[k] for k in ("b1_bounded", "b2_positive", "ps_plateau")}))
    return EXIT_OK


def cmd_reference_suite(cfg, args, out_dir: Path) -> int:
    """Canonical comparison tables: closed forms vs quadratures, noise
    factorization, the PPP oracle, and a TC curve with bounds."""
    link_cfg = cfg.get("link") or {
        "theta": 1.0,
        "R": 1.0,
        "pathloss": {"kind": "unbounded", "alpha": 4.0},
    }
    cfg = dict(cfg)
    cfg["link"] = link_cfg
    seed = int(cfg["seed"])
    threads = _threads(args, cfg)
    samples = int(cfg.get("budget", {}).get("samples", 20_000))
    tol = {
        "aloha_gamma_rel": 1e-6,
        "csma_gamma_rel": 1e-4,
        "noise_c0_abs": 1e-12,
        "oracle_sigmas": 3.0,
    }
    tol.update(cfg.get("tolerances", {}))
    failures = []

    # ALOHA gamma: quadrature vs closed forms
    rows = []
    for alpha in (3.0, 4.0):
        pl = PathLossModel("unbounded", alpha)
        for m in (1, 2, 4):
            link = LinkConfig(1.0, 1.0, pl, FadingModel("nakagami", m=m), FadingModel("nakagami", m=m))
            quad = gamma_aloha(ProductDensityModel.ppp(1.0), link).gamma
            closed = gamma_aloha_nakagami(m, 1.0, alpha, 1.0)
            rel = abs(quad - closed) / closed
            rows.append(["nakagami", alpha, m, quad, closed, rel])
            if rel > tol["aloha_gamma_rel"]:
                failures.append(f"aloha nakagami m={m} alpha={alpha}: rel={rel:.2e}")
        for M in (1, 2, 4):
            link = LinkConfig(1.0, 1.0, pl, FadingModel("beamforming", M_r=M), FadingModel("rayleigh"))
            quad = gamma_aloha(ProductDensityModel.ppp(1.0), link).gamma
            closed = gamma_aloha_beamforming(M, 1.0, alpha, 1.0)
            rel = abs(quad - closed) / closed
            rows.append(["beamforming", alpha, M, quad, closed, rel])
            if rel > tol["aloha_gamma_rel"]:
                failures.append(f"aloha beamforming M={M} alpha={alpha}: rel={rel:.2e}")
    _write_csv(
        out_dir / "aloha_gamma.csv",
        ["fading", "alpha", "order", "gamma_quadrature", "gamma_closed", "rel_error"],
        rows,
    )

    # CSMA gamma: closed form vs partition-sum assembly
    rows = []
    for alpha in (3.0, 4.0, 5.0):
        pl = PathLossModel("unbounded", alpha)
        link = LinkConfig(1.0, 1.0, pl)
        assembled = gamma_kappa_csma(link).gamma
        closed = gamma_csma_rayleigh_closed(1.0, alpha, 1.0)
        rel = abs(assembled - closed) / closed
        rows.append([alpha, assembled, closed, rel])
        if rel > tol["csma_gamma_rel"]:
            failures.append(f"csma alpha={alpha}: rel={rel:.2e}")
    _write_csv(
        out_dir / "csma_gamma.csv",
        ["alpha", "gamma_assembled", "gamma_closed", "rel_error"],
        rows,
    )

    # noise Taylor coefficient
    rows = []
    for N in (0.1, 0.5):
        nu, c0 = noise_taylor(FadingModel("rayleigh"), N)
        err = abs(c0 - math.exp(-N))
        rows.append([N, nu, c0, math.exp(-N), err])
        if err > tol["noise_c0_abs"]:
            failures.append(f"noise c0 at N={N}: err={err:.2e}")
    _write_csv(out_dir / "noise_c0.csv", ["N", "nu", "c0", "exp_minus_N", "abs_error"], rows)

    # PPP-ALOHA-Rayleigh oracle
    link = LinkConfig(1.0, 1.0, PathLossModel("unbounded", 4.0))
    rows = []
    for i, eta in enumerate((0.005, 0.01, 0.05, 0.1)):
        params = {"p": eta}
        sc = Scenario(
            "PPP_ALOHA", params, link,
            truncation_radius=truncation_radius("PPP_ALOHA", params, link, 1e-5),
            samples=samples, seed=_row_seed(seed, i),
        )
        est = estimate_ps(sc, workers=threads)
        exact = math.exp(-eta * math.pi**2 / 2.0)
        z = abs(est.p_success - exact) / est.std_error
        rows.append([eta, est.p_success, est.std_error, exact, z])
        if z > tol["oracle_sigmas"]:
            failures.append(f"ppp oracle eta={eta}: z={z:.2f}")
    _write_csv(out_dir / "ppp_oracle.csv", ["eta", "ps", "se", "exact", "z_score"], rows)

    # TC curve with bounds (asymptotic + TCL/TCU; simulation optional)
    res = gamma_aloha(ProductDensityModel.ppp(1.0), link)
    rows = []
    for eps in (0.05, 0.1):
        b = tc_bounds(eps, "PPP_ALOHA", {}, link)
        rows.append([eps, tc_asymptotic(res.gamma, res.kappa, eps), b.tcl, b.tcu])
        if not b.tcl <= b.tcu:
            failures.append(f"tc bounds ordering at eps={eps}")
    _write_csv(out_dir / "tc_reference.csv", ["epsilon", "tc_asym", "tcl", "tcu"], rows)

    (out_dir / "reference_summary.json").write_text(
        json.dumps({"failures": failures, "tolerances": tol}, indent=2) + "\n"
    )
    if failures:
        print("reference suite FAILED:", *failures, sep="\n  ")
        return EXIT_NUMERIC
    print("reference suite passed; tables written to", out_dir)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "simulate-outage": cmd_simulate_outage,
    "gamma": cmd_gamma,
    "fit-kappa": cmd_fit_kappa,
    "tc": cmd_tc,
    "bounds": cmd_bounds,
    "diagnostics": cmd_diagnostics,
    "reference-suite": cmd_reference_suite,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sirasym",
        description="Low-density SIR outage asymptotics and transmission capacity",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment JSON config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--threads", type=int, default=None, help="worker processes")
    args = parser.parse_args(argv)

    t0 = time.time()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        code = COMMANDS[args.command](cfg, args, out_dir)
        _write_manifest(out_dir, args.config, cfg, t0, [])
        return code
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RejectionCapExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
