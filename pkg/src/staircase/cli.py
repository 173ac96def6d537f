"""Command-line verification harness.

Subcommands
-----------
    staircase verify <suite>      run a property suite and write a JSON report
    staircase ili-or              closed-form check of the triple contraction
                                  of the orientation cocycle
    staircase primitive <name>    build a primitive, verify it, estimate its sup
    staircase convergence <t>     emit a CSV residual ladder

All subcommands accept --config PATH, --seed U64, --samples N, --out PATH.
The config file is flat ``key = value`` text; ``#`` starts a comment.
Reports are JSON ``{schema: 1, command, config_echo, reports: [...]}`` and are
byte-identical for identical config and seed apart from the timestamp field.
Exit codes: 0 all residuals within budget, 1 residual failure, 2 bad config.

The environment variable STAIRCASE_THREADS caps evaluation parallelism
(report content does not depend on it).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from .boundary_functions import (cup, k_extend, k_reduce, orientation_cocycle,
                                 weight_deviation)
from .cochain_ops import (FdSpec, QuadratureSpec, UNIFORM_TRAPEZOID, cauchy_L,
                          coboundary, commutator_residuals, contraction_I,
                          frobenius_Q)
from .errors import ConfigError
from .families import invariant_trig_poly, trig_poly
from .group_core import (act_angle, cartan, circle_dist, compose, inverse,
                         iwasawa, map_triple, one_param, proj_distance,
                         random_element, recompose_cartan, recompose_iwasawa)
from .pde_solvers import (BasepointScheme, LineIntegralSpec, TailSpec,
                          solve_cauchy_R, solve_frobenius_S)
from .primitive import (StaircaseConfig, VerificationReport, estimate_sup,
                        eval_rows, named_cocycle, staircase_chain, verify_primitive)
from .rng import TWO_PI, Xorshift64Star, config_points

SCHEMA = 1

_DEFAULTS = {
    "seed": 20240801,
    "samples": 100,
    "margin": 0.1,
    "quad_nodes": 96,
    "quad_rule": "panel-midpoint",
    "fd_h": 1e-4,
    "tail_t_max": 40.0,
    "tail_nodes": 400,
    "tail_profile": True,
    "line_nodes_per_unit": 32.0,
    "line_min_nodes": 64,
    "basepoint_margin": 1e-6,
    "out": "",
    "csv": "",
}

_TYPES = {
    "seed": int, "samples": int, "quad_nodes": int, "tail_nodes": int,
    "line_min_nodes": int,
    "margin": float, "fd_h": float, "tail_t_max": float,
    "line_nodes_per_unit": float, "basepoint_margin": float,
    "tail_profile": bool,
    "quad_rule": str, "out": str, "csv": str,
}


class RunConfig:
    def __init__(self, values: dict):
        self.values = dict(_DEFAULTS)
        for key, raw in values.items():
            if key not in _TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            typ = _TYPES[key]
            try:
                if typ is bool and isinstance(raw, str):
                    self.values[key] = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    self.values[key] = typ(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        self._validate()

    def _validate(self):
        v = self.values
        if v["samples"] < 1:
            raise ConfigError("samples must be >= 1")
        if v["seed"] < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not 0.0 < v["margin"] < np.pi:
            raise ConfigError("margin must lie in (0, pi)")
        if v["quad_nodes"] < 8:
            raise ConfigError("quad_nodes must be >= 8")
        if not 0.0 < v["fd_h"] < 1.0:
            raise ConfigError("fd_h must lie in (0, 1)")
        if v["tail_nodes"] < 8 or v["tail_t_max"] <= 0:
            raise ConfigError("tail_nodes must be >= 8 and tail_t_max > 0")
        if v["line_min_nodes"] < 2 or v["line_nodes_per_unit"] <= 0:
            raise ConfigError("line integral spec out of range")

    def __getitem__(self, key):
        return self.values[key]

    def staircase_config(self) -> StaircaseConfig:
        return StaircaseConfig(
            quad=QuadratureSpec(self["quad_nodes"], self["quad_rule"]),
            fd=FdSpec(self["fd_h"]),
            tail=TailSpec(t_max=self["tail_t_max"], nodes=self["tail_nodes"],
                          profile=self["tail_profile"]),
            line=LineIntegralSpec(nodes_per_unit=self["line_nodes_per_unit"],
                                  min_nodes=self["line_min_nodes"]),
            scheme=BasepointScheme(margin=self["basepoint_margin"]),
        )

    def echo(self) -> dict:
        return {k: self.values[k] for k in sorted(self.values) if k not in ("out", "csv")}


def parse_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = text.split("=", 1)
            values[key.strip()] = raw.strip()
    return values


def load_config(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for key in ("seed", "samples", "out"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return RunConfig(values)


def _report(name, residuals, seed, cfg: RunConfig, budget, extras=None) -> VerificationReport:
    res = np.abs(np.asarray(residuals))
    extras = dict(extras or {})
    extras["budget"] = budget
    return VerificationReport(
        identity_name=name, samples=int(res.size),
        sup_residual=float(res.max()), mean_residual=float(res.mean()),
        seed=seed, config_echo=cfg.echo(), extras=extras)


# --- verify suites ---------------------------------------------------------------


def suite_group(cfg: RunConfig):
    seed = cfg["seed"]
    rng = Xorshift64Star(seed)
    n = max(10, cfg["samples"])
    r_iw, r_ca, r_nrm, r_hom, r_map = [], [], [], [], []
    for _ in range(n):
        g = random_element(rng)
        r_iw.append(proj_distance(recompose_iwasawa(iwasawa(g)), g))
        r_ca.append(proj_distance(recompose_cartan(cartan(g)), g))
        s, t = rng.uniform(-3, 3), rng.uniform(-3, 3)
        lhs = compose(one_param("A", s), compose(one_param("N", t), inverse(one_param("A", s))))
        r_nrm.append(proj_distance(lhs, one_param("N", float(np.exp(-s) * t))))
        h = random_element(rng)
        th = rng.uniform(0, TWO_PI)
        r_hom.append(float(circle_dist(act_angle(compose(g, h), th),
                                       act_angle(g, act_angle(h, th)))))
        src = config_points(rng, 1, 3, 1e-2)[0]
        dst = act_angle(g, src)
        gm = map_triple(src, dst)
        r_map.append(float(np.max(circle_dist(act_angle(gm, src), dst))))
    return [
        _report("iwasawa-recomposition", r_iw, seed, cfg, 1e-10),
        _report("cartan-recomposition", r_ca, seed, cfg, 1e-10),
        _report("dilation-normalizes-shear", r_nrm, seed, cfg, 1e-10),
        _report("action-homomorphism", r_hom, seed, cfg, 1e-10),
        _report("triple-map-roundtrip", r_map, seed, cfg, 1e-9),
    ]


def suite_contraction(cfg: RunConfig):
    seed = cfg["seed"]
    rng = Xorshift64Star(seed)
    samples = cfg["samples"]
    out = []
    f = trig_poly(3, seed=seed + 1, degree=2)
    quad = QuadratureSpec(max(cfg["quad_nodes"], 256), cfg["quad_rule"])
    rows = config_points(rng, samples, 3, cfg["margin"])
    lhs = (contraction_I(coboundary(f), quad).eval_batch(rows)
           + coboundary(contraction_I(f, quad)).eval_batch(rows))
    out.append(_report("contraction-identity-smooth",
                       lhs - f.eval_batch(rows), seed, cfg, 2e-6))
    orc = orientation_cocycle()
    quad_or = QuadratureSpec(max(cfg["quad_nodes"], 1024), cfg["quad_rule"])
    rows = config_points(rng, samples, 3, cfg["margin"])
    lhs = (contraction_I(coboundary(orc), quad_or).eval_batch(rows)
           + coboundary(contraction_I(orc, quad_or)).eval_batch(rows))
    out.append(_report("contraction-identity-orientation",
                       lhs - orc.eval_batch(rows), seed, cfg, 2e-2))
    return out


def suite_commutators(cfg: RunConfig):
    seed = cfg["seed"]
    rng = Xorshift64Star(seed)
    fd = FdSpec(max(cfg["fd_h"], 1e-3))
    rows = config_points(rng, cfg["samples"], 2, cfg["margin"])
    f = trig_poly(2, seed=seed + 2, degree=1)
    res = {"KA": [], "KN": [], "AN": [], "complex": []}
    for z in rows:
        for key, val in commutator_residuals(f, z, fd).items():
            res[key].append(val)
    return [
        _report("commutator-rotation-dilation", res["KA"], seed, cfg, 1e-5),
        _report("commutator-rotation-shear", res["KN"], seed, cfg, 1e-5),
        _report("commutator-dilation-shear", res["AN"], seed, cfg, 1e-5),
        _report("commutator-complexified", res["complex"], seed, cfg, 5e-5),
    ]


def suite_cup(cfg: RunConfig):
    seed = cfg["seed"]
    rng = Xorshift64Star(seed)
    samples = cfg["samples"]
    quad = QuadratureSpec(cfg["quad_nodes"], cfg["quad_rule"])
    fd = FdSpec(cfg["fd_h"])
    orc = orientation_cocycle()
    out = []

    f, g, h = (trig_poly(2, seed=seed + i, degree=2) for i in (3, 4, 5))
    rows = config_points(rng, samples, 4, cfg["margin"])
    assoc = cup(cup(f, g), h).eval_batch(rows) - cup(f, cup(g, h)).eval_batch(rows)
    out.append(_report("cup-associativity", assoc, seed, cfg, 1e-12))

    rows = config_points(rng, samples, 3, cfg["margin"])
    orv = orc.eval_batch(rows)
    inv = []
    for _ in range(10):
        gg = random_element(rng)
        inv.append(np.abs(orc.eval_batch(act_angle(gg, rows)) - orv).max())
    out.append(_report("orientation-action-invariance", inv, seed, cfg, 0.0))

    fi = invariant_trig_poly(2, seed=seed + 6, degree=2)
    gi = invariant_trig_poly(2, seed=seed + 7, degree=2)
    rows = config_points(rng, samples, 3, cfg["margin"])
    lhs = cauchy_L(cup(fi, gi), fd).eval_batch(rows)
    rhs = (cup(cauchy_L(fi, fd), gi).eval_batch(rows)
           + cup(fi, cauchy_L(gi, fd)).eval_batch(rows))
    out.append(_report("cup-derivative-leibniz", lhs - rhs, seed, cfg, 1e-6))

    rows = config_points(rng, samples, 3, cfg["margin"])
    lhs = contraction_I(cup(orc, gi), quad).eval_batch(rows)
    rhs = cup(contraction_I(orc, quad), gi).eval_batch(rows)
    out.append(_report("cup-contraction-compatibility", lhs - rhs, seed, cfg, 1e-10))

    rows = config_points(rng, samples, 2, cfg["margin"])
    lhs = k_reduce(cup(fi, gi)).eval_batch(rows)
    rhs = cup(k_reduce(fi), gi).eval_batch(rows)
    out.append(_report("cup-reduction-compatibility", lhs - rhs, seed, cfg, 1e-12))

    wf = k_extend(trig_poly(2, seed=seed + 8, degree=2), 1)
    out.append(_report("weight-tag-soundness",
                       [weight_deviation(wf, rng, samples=20, margin=cfg["margin"])],
                       seed, cfg, 1e-10))
    return out


def suite_solvers(cfg: RunConfig):
    seed = cfg["seed"]
    rng = Xorshift64Star(seed)
    samples = max(10, cfg["samples"] // 2)
    fd = FdSpec(cfg["fd_h"])
    sc = cfg.staircase_config()
    out = []

    psi = invariant_trig_poly(2, seed=seed + 9, degree=2)
    sp = solve_frobenius_S(psi, sc.tail)
    rows = config_points(rng, samples, 2, cfg["margin"])
    out.append(_report("frobenius-right-inverse",
                       frobenius_Q(sp, fd).eval_batch(rows) - psi.eval_batch(rows),
                       seed, cfg, 1e-5))

    f = invariant_trig_poly(3, seed=seed + 10, degree=2)
    u = cauchy_L(f, fd)
    r = solve_cauchy_R(u, sc.scheme, sc.line)
    rows = config_points(rng, samples, 3, cfg["margin"])
    out.append(_report("cauchy-right-inverse",
                       cauchy_L(r, fd).eval_batch(rows) - u.eval_batch(rows),
                       seed, cfg, 1e-4))

    kinv = []
    for z in rows[:10]:
        v0 = r(z)
        t = rng.uniform(0, TWO_PI)
        kinv.append(abs(r(np.mod(z + t, TWO_PI)) - v0))
    out.append(_report("cauchy-solution-rotation-invariance", kinv, seed, cfg, 1e-6))

    tame = []
    red = k_reduce(psi)
    grid = np.linspace(0, TWO_PI, 512, endpoint=False)[:, None]
    norm = float(np.abs(red.eval_batch(grid)).max())
    from .pde_solvers import _gl
    for _ in range(samples):
        T = rng.uniform(-20.0, 20.0)
        z = config_points(rng, 1, 2, cfg["margin"])[0]
        x, w = _gl(96)
        ts = 0.5 * T * (x + 1.0)
        ws = 0.5 * T * w
        from .pde_solvers import _dilation_flow_many
        pts = _dilation_flow_many(ts, z[None, :])[0]
        vals = sp.eval_batch(pts).real
        tame.append(max(0.0, abs(float(vals @ ws)) - np.pi * norm))
    out.append(_report("tameness-line-integral-bound", tame, seed, cfg, 1e-3,
                       extras={"sup_norm_reduced": norm}))
    return out


def suite_staircase(cfg: RunConfig):
    seed = cfg["seed"]
    sc = cfg.staircase_config()
    c = named_cocycle("or_cup_or")
    chain = staircase_chain(c, sc)
    samples = min(cfg["samples"], 50)
    rep = verify_primitive(c, chain["p"], samples, seed, max(cfg["margin"], 0.15), sc)
    rep.extras["budget"] = 0.05
    rep.identity_name = "staircase-cohomological-equation"
    return [rep]


_SUITES = {
    "group": suite_group,
    "contraction": suite_contraction,
    "commutators": suite_commutators,
    "cup": suite_cup,
    "solvers": suite_solvers,
    "staircase": suite_staircase,
}


# --- commands --------------------------------------------------------------------


def write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def finish(cfg: RunConfig, command: str, reports, extra_payload=None) -> int:
    payload = {
        "schema": SCHEMA,
        "command": command,
        "config_echo": cfg.echo(),
        "reports": [r.to_dict() for r in reports],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra_payload:
        payload.update(extra_payload)
    write_json(cfg["out"], payload)
    ok = all(r.sup_residual <= r.extras.get("budget", np.inf) for r in reports)
    for r in reports:
        status = "pass" if r.sup_residual <= r.extras.get("budget", np.inf) else "FAIL"
        print(f"[{status}] {r.identity_name}: sup={r.sup_residual:.3e} "
              f"budget={r.extras.get('budget')}", file=sys.stderr)
    return 0 if ok else 1


def ili_or_error(quad_nodes: int, rule: str, fd_h: float, angles: np.ndarray) -> float:
    orc = orientation_cocycle()
    quad = QuadratureSpec(quad_nodes, rule)
    ili = contraction_I(cauchy_L(contraction_I(orc, quad), FdSpec(fd_h)), quad)
    vals = ili.eval_batch(angles[:, None])
    return float(np.abs(vals - (1j / np.pi) * np.exp(1j * angles)).max())


def cmd_ili_or(cfg: RunConfig) -> int:
    seed = cfg["seed"]
    n_angles = min(cfg["samples"], 256)
    angles = Xorshift64Star(seed).angles(n_angles)
    err = ili_or_error(max(cfg["quad_nodes"], 1024), cfg["quad_rule"], cfg["fd_h"], angles)
    rep = _report("triple-contraction-closed-form", [err], seed, cfg, 5e-3,
                  extras={"angles": n_angles, "value_at_zero_imag": 1.0 / np.pi})
    return finish(cfg, "ili-or", [rep])


def cmd_primitive(name: str, cfg: RunConfig) -> int:
    sc = cfg.staircase_config()
    c = named_cocycle(name)
    chain = staircase_chain(c, sc)
    p = chain["p"]
    seed = cfg["seed"]
    margin = max(cfg["margin"], 0.15)
    rep = verify_primitive(c, p, cfg["samples"], seed, margin, sc)
    rep.identity_name = f"primitive-{name}-cohomological-equation"
    rep.extras["budget"] = 0.05 if name == "or_cup_or" else 0.1
    sup = estimate_sup(p, max(cfg["samples"], 100), seed + 1, 0.05)
    sup_rep = VerificationReport(
        identity_name=f"primitive-{name}-sup-witness", samples=max(cfg["samples"], 100),
        sup_residual=sup, mean_residual=0.0, seed=seed + 1, config_echo=cfg.echo(),
        extras={"budget": float("inf"), "note": "sampled sup of the primitive"})
    if cfg["csv"]:
        rng = Xorshift64Star(seed)
        rows = config_points(rng, cfg["samples"], c.arity, margin)
        dp = coboundary(p)
        pv = eval_rows(p, rows[:, 1:])
        res = np.abs(eval_rows(dp, rows) - eval_rows(c, rows))
        with open(cfg["csv"], "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh)
            wr.writerow([f"theta{i}" for i in range(c.arity)] + ["p_value", "residual"])
            for i in range(rows.shape[0]):
                wr.writerow([f"{x:.12g}" for x in rows[i]]
                            + [f"{pv[i]:.12g}", f"{res[i]:.12g}"])
    return finish(cfg, f"primitive {name}", [rep, sup_rep])


def cmd_convergence(target: str, cfg: RunConfig) -> int:
    seed = cfg["seed"]
    rows_out = []
    if target == "contraction":
        # discretization error of the averaging operator itself, measured
        # against the closed arc-measure form of the contracted orientation
        # cocycle (the contraction *identity* is exact under any fixed node
        # set and cannot carry a ladder)
        rng = Xorshift64Star(seed)
        orc = orientation_cocycle()
        rows = config_points(rng, min(cfg["samples"], 50), 2, cfg["margin"])
        exact = ((rows[:, 0] - rows[:, 1]) % TWO_PI) / np.pi - 1.0
        for n in (64, 128, 256, 512):
            quad = QuadratureSpec(n, UNIFORM_TRAPEZOID)
            vals = contraction_I(orc, quad).eval_batch(rows)
            rows_out.append((n, float(np.abs(vals - exact).max())))
    elif target == "ili_or":
        angles = Xorshift64Star(seed).angles(min(cfg["samples"], 64))
        for n in (128, 256, 512, 1024):
            rows_out.append((n, ili_or_error(n, UNIFORM_TRAPEZOID, cfg["fd_h"], angles)))
    elif target == "primitive":
        # the equation residual sits at the cancellation floor at every
        # budget, so the ladder tracks the max of the equation and
        # flow-invariance residuals
        c = named_cocycle("or_cup_or")
        rng = Xorshift64Star(seed)
        pts = config_points(rng, min(cfg["samples"], 12), 5, 0.2)
        lp_pts = config_points(rng, min(cfg["samples"], 8), 4, 0.2)
        cv = c.eval_batch(pts)
        for n in (24, 48, 96):
            sc = StaircaseConfig(
                quad=QuadratureSpec(n),
                fd=FdSpec(cfg["fd_h"]),
                tail=TailSpec(nodes=max(64, cfg["tail_nodes"] // 4)),
                line=LineIntegralSpec(nodes_per_unit=8, min_nodes=24),
                scheme=BasepointScheme())
            p = staircase_chain(c, sc)["p"]
            res = float(np.abs(eval_rows(coboundary(p), pts) - cv).max())
            linv = float(np.abs(eval_rows(cauchy_L(p, sc.fd), lp_pts)).max())
            rows_out.append((n, max(res, linv)))
    else:
        raise ConfigError(f"unknown convergence target {target!r}")
    buf = io.StringIO()
    wr = csv.writer(buf)
    wr.writerow(["parameter", "residual"])
    for nval, res in rows_out:
        wr.writerow([nval, f"{res:.12g}"])
    text = buf.getvalue()
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(suite: str, cfg: RunConfig) -> int:
    if suite == "all":
        names = list(_SUITES)
    elif suite in _SUITES:
        names = [suite]
    else:
        raise ConfigError(f"unknown suite {suite!r}")
    reports = []
    for name in names:
        reports.extend(_SUITES[name](cfg))
    return finish(cfg, f"verify {suite}", reports)


def build_parser():
    ap = argparse.ArgumentParser(prog="staircase",
                                 description="verification harness for the "
                                             "circle-boundary operator calculus")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--out", default=None)

    pv = sub.add_parser("verify", help="run a property suite")
    pv.add_argument("suite", choices=sorted(_SUITES) + ["all"])
    common(pv)
    pi = sub.add_parser("ili-or", help="closed-form triple-contraction check")
    common(pi)
    pp = sub.add_parser("primitive", help="build and verify a primitive")
    pp.add_argument("cocycle", choices=["or_cup_or", "or_cup_or_cup_or"])
    common(pp)
    pc = sub.add_parser("convergence", help="emit a residual ladder as CSV")
    pc.add_argument("target", choices=["contraction", "ili_or", "primitive"])
    common(pc)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "verify":
            return cmd_verify(args.suite, cfg)
        if args.command == "ili-or":
            return cmd_ili_or(cfg)
        if args.command == "primitive":
            return cmd_primitive(args.cocycle, cfg)
        if args.command == "convergence":
            return cmd_convergence(args.target, cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
