"""Command-line front end producing plot-ready tables.

Commands
--------
smile        expansion, exact and competitor implied vols over a strike grid
error-grid   relative error of the expansion over (maturity, strike)
convergence  error against maturity and fitted log-log slopes per order
price        single-point diagnostic

Exit codes: 0 success, 2 configuration error, 3 at least one oracle failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import opalgebra
from .blackscholes import BsDomainError, BsQuote, bs_otm_price, implied_vol_otm
from .ivexpansion import ExpansionDomainError, QueryPoint, expand
from .models import CEV, SABR, ConstantVol, Heston, ModelParameterError, ThreeHalves, model_from_dict
from .reference.cev import cev_exact_otm
from .reference.competitors import CompetitorDomainError, fjl_iv, hagan_woodward_iv, hklw_iv
from .reference.fourier import FourierContour, heston_pricer, three_halves_pricer
from .reference.montecarlo import mc_price
from .reference.sabr import sabr_time_value_rho0

EXIT_OK, EXIT_CONFIG, EXIT_ORACLE = 0, 2, 3
ERROR_FLOOR = 1e-13
OUT_ENV = "LSVA_OUT_DIR"


class ConfigError(ValueError):
    """Invalid run configuration."""


DEFAULT_CONFIGS: Dict[str, Dict[str, Any]] = {
    "cev": {
        "model": {"variant": "cev", "beta": 0.3, "delta": 0.2},
        "query": {"x": 0.0, "y": 0.0, "maturities": [0.1, 1.0, 5.0, 10.0],
                  "strikes": {"min": -0.4, "max": 0.4, "count": 41}},
    },
    "heston": {
        "model": {"variant": "heston", "kappa": 1.15, "theta": 0.04, "delta": 0.2, "rho": -0.4},
        "query": {"x": 0.0, "y": 0.04, "maturities": [0.1, 1.0, 5.0, 10.0],
                  "strikes": {"min": -0.4, "max": 0.4, "count": 41}},
    },
    "three_halves": {
        "model": {"variant": "three_halves", "kappa": 0.25, "theta": 0.1, "delta": 0.8,
                  "rho": -0.85},
        "query": {"x": 0.0, "y": math.log(0.1), "maturities": [0.1, 1.0, 3.0, 5.0],
                  "strikes": {"min": -0.6, "max": 0.6, "count": 41}},
    },
    "sabr": {
        "model": {"variant": "sabr", "beta": 0.4, "delta": 0.25, "rho": 0.0},
        "query": {"x": 0.0, "y": -1.3, "maturities": [0.1, 1.0, 5.0, 10.0],
                  "strikes": {"min": -0.4, "max": 0.4, "count": 41}},
    },
    "constant": {
        "model": {"variant": "constant", "sigma": 0.2},
        "query": {"x": 0.0, "y": 0.0, "maturities": [0.1, 1.0, 5.0, 10.0],
                  "strikes": {"min": -0.4, "max": 0.4, "count": 41}},
    },
}

COMMON_DEFAULTS: Dict[str, Any] = {
    "expansion": {"N": 3, "competitors": True},
    "oracle": {"kind": "auto", "paths": 200_000, "steps": 200, "quad_tol": 1e-10,
               "lambda_i": -1.5},
    "convergence": {"orders": [1, 2, 3], "tau_min": 0.01, "tau_max": 0.5, "count": 8,
                    "lambda": 1.0},
    "output": {"format": "csv", "path": None},
    "seed": 0,
    "threads": 1,
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass
class RunConfig:
    model: Any
    model_block: Dict[str, Any]
    x: float
    y: float
    maturities: List[float]
    strikes: List[float]
    order: int
    competitors: bool
    oracle: Dict[str, Any]
    convergence: Dict[str, Any]
    fmt: str
    out: Optional[str]
    seed: int
    threads: int
    raw: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "RunConfig":
        try:
            model_block = dict(d["model"])
            model = model_from_dict(model_block)
            q = d["query"]
            x, y = float(q.get("x", 0.0)), float(q.get("y", 0.0))
            maturities = [float(t) for t in q.get("maturities", [q.get("t", 1.0)])]
            st = q.get("strikes", {})
            if isinstance(st, list):
                strikes = [float(s) for s in st]
            else:
                count = int(st.get("count", 0))
                strikes = ([] if count == 0 else
                           [float(v) for v in np.linspace(float(st["min"]), float(st["max"]), count)])
            exp = d.get("expansion", {})
            order = int(exp.get("N", 3))
            oracle = dict(d.get("oracle", {}))
            conv = dict(d.get("convergence", {}))
            out = d.get("output", {})
            fmt = str(out.get("format", "csv")).lower()
            cfg = cls(model, model_block, x, y, maturities, strikes, order,
                      bool(exp.get("competitors", True)), oracle, conv, fmt, out.get("path"),
                      int(d.get("seed", 0)), int(d.get("threads", 1)), d)
        except ModelParameterError as exc:
            raise ConfigError(str(exc)) from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed configuration: {exc!r}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if any(b <= a for a, b in zip(self.strikes, self.strikes[1:])):
            raise ConfigError("strike grid must be strictly increasing")
        if any(not t > 0 for t in self.maturities):
            raise ConfigError("maturities must be positive")
        if not 0 <= self.order <= opalgebra.DEFAULT_MAX_ORDER:
            raise ConfigError(f"order must lie in [0, {opalgebra.DEFAULT_MAX_ORDER}]")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        kind = self.oracle.get("kind", "auto")
        if kind not in ("auto", "exact", "mc"):
            raise ConfigError("oracle kind must be auto, exact or mc")
        if kind == "exact" and isinstance(self.model, SABR) and self.model.rho != 0.0:
            raise ConfigError("the exact SABR oracle requires rho = 0")
        if kind == "exact" and isinstance(self.model, CEV) and not self.model.beta < 1:
            raise ConfigError("the exact CEV oracle requires beta < 1")


# -- oracles ------------------------------------------------------------------------

class OracleFailure(RuntimeError):
    pass


class Oracle:
    """Exact (or simulated) call prices for one maturity."""

    def __init__(self, cfg: RunConfig, t: float, index: int):
        self.cfg, self.t = cfg, t
        m = cfg.model
        kind = cfg.oracle.get("kind", "auto")
        exact_ok = not (isinstance(m, SABR) and (m.rho != 0.0 or not m.beta < 1)) and not (
            isinstance(m, CEV) and not m.beta < 1)
        if isinstance(m, ConstantVol) and m.sigma == 0.0:
            exact_ok = True
        self.use_mc = kind == "mc" or not exact_ok
        self.index = index
        self._pricer = None
        if not self.use_mc:
            contour = FourierContour(lambda_i=float(cfg.oracle.get("lambda_i", -1.5)))
            if isinstance(m, Heston):
                self._pricer = heston_pricer(m, t, cfg.x, cfg.y, contour)
            elif isinstance(m, ThreeHalves):
                self._pricer = three_halves_pricer(m, t, cfg.x, cfg.y, contour)

    def otm_price(self, k: float, j: int) -> float:
        """Put for ``k < x``, call otherwise."""
        cfg, m, t = self.cfg, self.cfg.model, self.t
        x = cfg.x
        if self.use_mc:
            seed = int(np.random.SeedSequence([cfg.seed, self.index, j]).generate_state(1)[0])
            p, _ = mc_price(m, t, x, cfg.y, k, paths=int(cfg.oracle.get("paths", 200_000)),
                            steps=int(cfg.oracle.get("steps", 200)), seed=seed)
            return p - max(math.exp(x) - math.exp(k), 0.0)
        if self._pricer is not None:
            return self._pricer.otm(x, k)
        if isinstance(m, ConstantVol):
            if m.sigma == 0.0:
                return 0.0
            return bs_otm_price(BsQuote(m.sigma, t, x, k))
        if isinstance(m, CEV):
            return cev_exact_otm(m, t, x, k)
        if isinstance(m, SABR):
            return sabr_time_value_rho0(m, t, x, cfg.y, k, float(cfg.oracle.get("quad_tol", 1e-10)))
        raise OracleFailure(f"no oracle for {type(m).__name__}")

    def price(self, k: float, j: int) -> float:
        """Call price."""
        return self.otm_price(k, j) + max(math.exp(self.cfg.x) - math.exp(k), 0.0)

    def implied_vol(self, k: float, j: int) -> float:
        return implied_vol_otm(self.otm_price(k, j), self.t, self.cfg.x, k)


def _competitor(cfg: RunConfig, t: float, k: float):
    m = cfg.model
    if isinstance(m, CEV):
        return "sigma_hw", hagan_woodward_iv(m, t, cfg.x, k)
    if isinstance(m, Heston):
        return "sigma_fjl", fjl_iv(m, t, cfg.x, math.log(cfg.y), k)
    if isinstance(m, SABR):
        return "sigma_hklw", hklw_iv(m, t, cfg.x, cfg.y, k)
    return None, None


def _competitor_name(model) -> Optional[str]:
    return {CEV: "sigma_hw", Heston: "sigma_fjl", SABR: "sigma_hklw"}.get(type(model))


# -- row producers ------------------------------------------------------------------

def _maturity_rows(cfg: RunConfig, i: int, t: float) -> List[Dict[str, Any]]:
    rows = []
    try:
        oracle: Optional[Oracle] = Oracle(cfg, t, i)
        setup_error = None
    except Exception as exc:  # oracle construction failed for this maturity
        oracle, setup_error = None, exc
    comp = _competitor_name(cfg.model) if cfg.competitors else None
    for j, kx in enumerate(cfg.strikes):
        k = cfg.x + kx
        row: Dict[str, Any] = {"t": t, "k_minus_x": kx, "sigma0": math.nan,
                               "sigma_bar": math.nan, "sigma_exact": math.nan}
        if comp:
            row[comp] = math.nan
        row["rel_error"] = math.nan
        status = "ok"
        try:
            e = expand(cfg.model, QueryPoint(t, cfg.x, cfg.y, k), cfg.order)
            row["sigma0"], row["sigma_bar"] = e.sigma0, e.total
        except (ExpansionDomainError, BsDomainError, ArithmeticError) as exc:
            status = f"expansion_error:{type(exc).__name__}"
        try:
            if oracle is None:
                raise OracleFailure(str(setup_error))
            row["sigma_exact"] = oracle.implied_vol(k, j)
        except Exception as exc:
            status = f"oracle_error:{type(exc).__name__}"
        if comp:
            try:
                row[comp] = _competitor(cfg, t, k)[1]
            except (CompetitorDomainError, ValueError, OverflowError):
                pass
        if math.isfinite(row["sigma_bar"]) and math.isfinite(row["sigma_exact"]):
            row["rel_error"] = abs(row["sigma_bar"] - row["sigma_exact"]) / row["sigma_exact"]
        row["status"] = status
        rows.append(row)
    return rows


def _run_grid(cfg: RunConfig) -> List[Dict[str, Any]]:
    jobs = list(enumerate(cfg.maturities))
    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda a: _maturity_rows(cfg, *a), jobs))
    else:
        parts = [_maturity_rows(cfg, i, t) for i, t in jobs]
    # pool.map preserves submission order; rows are emitted maturity-major
    return [row for part in parts for row in part]


def cmd_smile(cfg: RunConfig) -> List[Dict[str, Any]]:
    return _run_grid(cfg)


def cmd_error_grid(cfg: RunConfig) -> List[Dict[str, Any]]:
    keep = ("t", "k_minus_x", "sigma_bar", "sigma_exact", "rel_error", "status")
    return [{k: r[k] for k in keep} for r in _run_grid(cfg)]


def _fit_slope(taus, errs) -> float:
    pts = [(math.log(t), math.log(e)) for t, e in zip(taus, errs)
           if math.isfinite(e) and e > ERROR_FLOOR]
    if len(pts) < 2:
        return math.nan
    a = np.array(pts)
    return float(np.polyfit(a[:, 0], a[:, 1], 1)[0])


def cmd_convergence(cfg: RunConfig) -> List[Dict[str, Any]]:
    conv = cfg.convergence
    orders = [int(n) for n in conv.get("orders", [1, 2, 3])]
    lam = float(conv.get("lambda", 1.0))
    taus = [float(v) for v in np.geomspace(float(conv.get("tau_min", 0.01)),
                                           float(conv.get("tau_max", 0.5)),
                                           int(conv.get("count", 8)))]
    if any(not 0 <= n <= opalgebra.DEFAULT_MAX_ORDER for n in orders):
        raise ConfigError("convergence orders outside the supported range")

    def one(i_tau):
        i, tau = i_tau
        kx = 0.5 * lam * math.sqrt(tau)
        k = cfg.x + kx
        out = {"status": "ok", "exact": math.nan, "approx": {}}
        try:
            out["exact"] = Oracle(cfg, tau, i).implied_vol(k, 0)
        except Exception as exc:
            out["status"] = f"oracle_error:{type(exc).__name__}"
        try:
            e = expand(cfg.model, QueryPoint(tau, cfg.x, cfg.y, k), max(orders))
            out["approx"] = {n: e.partial(n) for n in orders}
        except (ExpansionDomainError, BsDomainError, ArithmeticError) as exc:
            out["status"] = f"expansion_error:{type(exc).__name__}"
        return kx, out

    jobs = list(enumerate(taus))
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    rows = []
    for n in orders:
        errs = [abs(r["approx"].get(n, math.nan) - r["exact"]) for _, r in results]
        slope = _fit_slope(taus, errs)
        for tau, (kx, r), err in zip(taus, results, errs):
            rows.append({"N": n, "tau": tau, "k_minus_x": kx,
                         "sigma_bar": r["approx"].get(n, math.nan), "sigma_exact": r["exact"],
                         "abs_error": err, "slope": slope, "status": r["status"]})
    return rows


def cmd_price(cfg: RunConfig) -> List[Dict[str, Any]]:
    """One row per (maturity, strike) with prices as well as vols."""
    rows = []
    for i, t in enumerate(cfg.maturities):
        oracle = Oracle(cfg, t, i)
        for j, kx in enumerate(cfg.strikes):
            k = cfg.x + kx
            row: Dict[str, Any] = {"t": t, "k_minus_x": kx}
            e = expand(cfg.model, QueryPoint(t, cfg.x, cfg.y, k), cfg.order)
            row["price_bar"] = e.price_total
            row["sigma_bar"] = e.total
            status = "ok"
            try:
                p = oracle.otm_price(k, j)
                row["price_exact"] = p + max(math.exp(cfg.x) - math.exp(k), 0.0)
                row["sigma_exact"] = implied_vol_otm(p, t, cfg.x, k)
            except Exception as exc:
                row.setdefault("price_exact", math.nan)
                row["sigma_exact"] = math.nan
                status = f"oracle_error:{type(exc).__name__}"
            for n, s in enumerate(e.corrections, start=1):
                row[f"sigma_{n}"] = s
            row["status"] = status
            rows.append(row)
    return rows


COMMANDS = {
    "smile": cmd_smile,
    "error-grid": cmd_error_grid,
    "convergence": cmd_convergence,
    "price": cmd_price,
}


# -- emission -----------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def rows_to_csv(rows: List[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    header = list(rows[0].keys())
    if "status" in header:
        header.remove("status")
        header.append("status")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(h, "")) for h in header])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    return v


def rows_to_json(rows: List[Dict[str, Any]]) -> str:
    return json.dumps([{k: _json_value(v) for k, v in r.items()} for r in rows], indent=1) + "\n"


def _output_path(cfg: RunConfig, command: str) -> Optional[str]:
    if cfg.out:
        return cfg.out
    base = os.environ.get(OUT_ENV)
    if base:
        name = f"{command}_{cfg.model.name}.{cfg.fmt}"
        return os.path.join(base, name)
    return None


def build_config(args) -> RunConfig:
    variant = (args.model or "cev").lower()
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        if args.model is None:
            variant = str(user.get("model", {}).get("variant", "cev")).lower()
    else:
        user = {}
    if variant not in DEFAULT_CONFIGS:
        raise ConfigError(f"unknown model {variant!r}")
    d = _merge(_merge(COMMON_DEFAULTS, DEFAULT_CONFIGS[variant]), user)
    if args.order is not None:
        d["expansion"]["N"] = args.order
    if args.format is not None:
        d["output"]["format"] = args.format
    if args.out is not None:
        d["output"]["path"] = args.out
    if args.seed is not None:
        d["seed"] = args.seed
    if args.threads is not None:
        d["threads"] = args.threads
    return RunConfig.from_dict(d)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lsva", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--model", choices=sorted(DEFAULT_CONFIGS),
                   help="use this model's default configuration")
    p.add_argument("--order", type=int, help="expansion order N")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="output file (default: stdout or $LSVA_OUT_DIR)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        rows = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except opalgebra.OrderCapError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    text = rows_to_csv(rows) if cfg.fmt == "csv" else rows_to_json(rows)
    path = _output_path(cfg, args.command)
    if path:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = any(str(r.get("status", "ok")).startswith("oracle_error") for r in rows)
    return EXIT_ORACLE if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
