"""Config-driven runner for the verification case registry.

Subcommands: ``run``, ``list-cases``, ``describe-case``.  Runs are
deterministic given (config, seed): randomized cases seed their generators
from the global seed and the case id, rows are assembled in case-id order,
and report.json carries no timing data.

Exit codes: 0 all cases passed; 1 at least one case failed its tolerance;
2 configuration problem (bad file, unknown key, unresolved case); 3 a
solver diagnostic failure (collocation residual above the hard threshold).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from .cases import Case, CaseSettings, build_registry, suites
from .greens import GreensAccuracyError
from .report import write_reports

EXIT_OK = 0
EXIT_CASE_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

CONFIG_KEYS = {"suite", "cases", "seed", "workers", "out_dir", "overrides",
               "custom_liouville", "custom_hadamard"}
OVERRIDE_KEYS = {"m", "n_charges"}


class ConfigError(ValueError):
    pass


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as handle:
            cfg = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    overrides = cfg.get("overrides", {})
    bad = set(overrides) - OVERRIDE_KEYS
    if bad:
        raise ConfigError(f"unknown override keys: {sorted(bad)}")
    return cfg


def _custom_liouville_cases(specs) -> list[Case]:
    """Assemble user-declared derivative cases from config dictionaries."""
    from . import geometry as geo
    from . import liouville as lv
    from . import perturbation as pert
    from .integrands import IntegrandSpec, VectorIntegrandSpec

    ops = {"first_volume": lv.first_volume, "second_volume": lv.second_volume,
           "first_area": lv.first_area, "second_area": lv.second_area,
           "flux_first": lv.boundary_flux_first,
           "flux_second": lv.boundary_flux_second}
    out = []
    for spec in specs:
        try:
            case_id = spec["id"]
            op = ops[spec["kind"]]
            curve = geo.make_curve(spec["domain"]["name"],
                                   **{k: v for k, v in spec["domain"].items()
                                      if k != "name"})
            fam_spec = spec["family"]
            tolerance = float(spec.get("tolerance", 1e-4))
            ladder = tuple(spec["ladder"]) if "ladder" in spec else None
        except KeyError as exc:
            raise ConfigError(f"custom case missing key {exc}") from exc

        def runner(st, case, op=op, curve=curve, fam_spec=fam_spec,
                   spec=spec, ladder=ladder):
            from .cases import _report_from_variation
            domain = geo.Domain(curve, m=st.m)
            field = pert.make_field(fam_spec["field"]["name"],
                                    **{k: v for k, v in fam_spec["field"].items()
                                       if k != "name"})
            if fam_spec.get("kind", "flow") == "flow":
                family = pert.FlowFamily(field)
            else:
                r_field = None
                if "r_field" in fam_spec:
                    r_field = pert.make_field(fam_spec["r_field"]["name"],
                                              **{k: v for k, v in fam_spec["r_field"].items()
                                                 if k != "name"})
                family = pert.TaylorFamily(field, r_field)
            if spec["kind"].startswith("flux"):
                integrand = VectorIntegrandSpec.from_expressions(*spec["integrand"])
            else:
                integrand = IntegrandSpec.from_expression(spec["integrand"])
            rep = op(domain, family, integrand, ladder=ladder)
            return _report_from_variation(rep)

        out.append(Case(case_id, "liouville", "config-declared derivative case",
                        tolerance, runner,
                        description=f"user case {case_id} ({spec['kind']})"))
    return out


def _family_from_config(fam_spec):
    from . import perturbation as pert

    field = pert.make_field(fam_spec["field"]["name"],
                            **{k: v for k, v in fam_spec["field"].items()
                               if k != "name"})
    if fam_spec.get("kind", "flow") == "flow":
        return pert.FlowFamily(field)
    r_field = None
    if "r_field" in fam_spec:
        r_field = pert.make_field(fam_spec["r_field"]["name"],
                                  **{k: v for k, v in fam_spec["r_field"].items()
                                     if k != "name"})
    return pert.TaylorFamily(field, r_field)


def _custom_hadamard_cases(specs) -> list[Case]:
    """Assemble user-declared variation route-agreement cases."""
    import numpy as np

    from . import geometry as geo
    from . import hadamard as hd

    out = []
    for spec in specs:
        try:
            case_id = spec["id"]
            curve = geo.make_curve(spec["domain"]["name"],
                                   **{k: v for k, v in spec["domain"].items()
                                      if k != "name"})
            mixed = geo.MixedBoundary(tuple(spec["mixed"]))
            probes = [np.asarray(p, dtype=float) for p in spec["probes"]]
            variation = spec.get("variation", "first")
            tolerance = float(spec.get("tolerance",
                                       1e-3 if variation == "first" else 1e-2))
            ladder = tuple(spec["ladder"]) if "ladder" in spec else None
        except KeyError as exc:
            raise ConfigError(f"custom case missing key {exc}") from exc
        if len(probes) != 2:
            raise ConfigError(f"custom case {case_id}: exactly two probes required")

        def runner(st, case, curve=curve, mixed=mixed, probes=probes,
                   spec=spec, variation=variation, ladder=ladder):
            domain = geo.Domain(curve, m=st.m)
            family = _family_from_config(spec["family"])
            routes = hd.delta_n_routes if variation == "first" else hd.delta2_n_routes
            kwargs = {"ladder": ladder} if ladder else {}
            tri = routes(domain, mixed, family, probes[0], probes[1],
                         st.greens_config(), **kwargs)
            return tri.formula, {"bvp": tri.bvp, "fd": tri.fd}, tri.max_pairwise

        out.append(Case(case_id, "hadamard", "config-declared variation case",
                        tolerance, runner,
                        description=f"user case {case_id} ({variation} variation)"))
    return out


def resolve_cases(registry: list[Case], suite: str | None,
                  wanted: list[str]) -> list[Case]:
    by_id = {c.case_id: c for c in registry}
    if wanted:
        missing = [w for w in wanted if w not in by_id]
        if missing:
            raise ConfigError(f"unresolved case ids: {missing}")
        return [by_id[w] for w in wanted]
    if suite in (None, "all"):
        return list(registry)
    if suite not in suites():
        raise ConfigError(f"unknown suite {suite!r}; choose from {suites() + ['all']}")
    return [c for c in registry if c.suite == suite]


def run_cases(cases: list[Case], settings: CaseSettings, workers: int = 1):
    if workers <= 1:
        rows = [c.run(settings) for c in cases]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: c.run(settings), cases))
    return sorted(rows, key=lambda r: r.case_id)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        overrides = dict(cfg.get("overrides", {}))
        for item in args.override or []:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            key, value = item.split("=", 1)
            if key not in OVERRIDE_KEYS:
                raise ConfigError(f"unknown override key {key!r}")
            overrides[key] = int(value)
        registry = build_registry()
        registry += _custom_liouville_cases(cfg.get("custom_liouville", []))
        registry += _custom_hadamard_cases(cfg.get("custom_hadamard", []))
        suite = args.suite or cfg.get("suite")
        wanted = list(args.case or []) or list(cfg.get("cases", []))
        cases = resolve_cases(registry, suite, wanted)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    workers = args.workers if args.workers is not None else int(cfg.get("workers", 1))
    out_dir = args.out_dir or cfg.get("out_dir", "reports")

    settings = CaseSettings(seed=seed,
                            m=int(overrides.get("m", 128)),
                            n_charges=int(overrides.get("n_charges", 96)),
                            overrides=overrides)
    rows = run_cases(cases, settings, workers=workers)
    payload = write_reports(rows, out_dir, seed, overrides)

    width = max(len(r.case_id) for r in rows)
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        extra = f"  [{r.error}]" if r.error else ""
        print(f"{status}  {r.case_id:<{width}}  err={r.err:.3e}  "
              f"tol{'>=' if r.mode == 'ge' else '<='}{r.tolerance:g}  "
              f"({r.wall_time_s:.2f}s){extra}")
    n_fail = sum(not r.passed for r in rows)
    print(f"{len(rows) - n_fail}/{len(rows)} cases passed; reports in {out_dir}/")
    if any(r.error and "GreensAccuracyError" in r.error for r in rows):
        return EXIT_SOLVER
    return EXIT_OK if payload["all_passed"] else EXIT_CASE_FAILED


def cmd_list(args) -> int:
    registry = build_registry()
    width = max(len(c.case_id) for c in registry)
    for c in registry:
        bound = f"slope >= {c.tolerance:g}" if c.mode == "ge" else f"err <= {c.tolerance:g}"
        print(f"{c.case_id:<{width}}  [{c.suite:9s}]  {bound:<16s}  {c.formula}")
    print(f"{len(registry)} cases")
    return EXIT_OK


def cmd_describe(args) -> int:
    registry = {c.case_id: c for c in build_registry()}
    case = registry.get(args.case_id)
    if case is None:
        print(f"config error: unknown case {args.case_id!r}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"id:         {case.case_id}")
    print(f"suite:      {case.suite}")
    print(f"formula:    {case.formula}")
    bound = ">=" if case.mode == "ge" else "<="
    print(f"tolerance:  err {bound} {case.tolerance:g}")
    print(f"about:      {case.description}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shapelab",
        description="Cross-verification suites for moving-domain integral "
                    "derivatives and Green's-function variations.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run verification cases")
    run_p.add_argument("--suite", choices=suites() + ["all"], default=None)
    run_p.add_argument("--case", action="append", help="case id (repeatable)")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--workers", type=int, default=None)
    run_p.add_argument("--out-dir", default=None)
    run_p.add_argument("--config", default=None, help="JSON config file")
    run_p.add_argument("--override", action="append",
                       help="key=value discretization override (m, n_charges)")
    run_p.set_defaults(func=cmd_run)

    list_p = sub.add_parser("list-cases", help="list the built-in registry")
    list_p.set_defaults(func=cmd_list)

    desc_p = sub.add_parser("describe-case", help="show one case in detail")
    desc_p.add_argument("case_id")
    desc_p.set_defaults(func=cmd_describe)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
