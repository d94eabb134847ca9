"""Command-line entry point.

Exit codes: 0 success, 1 bad input or crash, 2 violation or mismatch
detected, 3 replay unavailable, 4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import yaml

from . import kernels
from .analysis import (
    REPORT_SCHEMA,
    BacklogConfig,
    ObserverModel,
    ScarcityConfig,
    ScarcityScenario,
    audit_governability,
    check_task_causation,
    collision_guaranteed,
    find_observer_collision,
    simulate_backlog,
    simulate_scarcity,
    trace_bound,
    uniform_arrivals,
)
from .errors import (
    GovKernelError,
    LedgerError,
    ReplayMismatch,
    ReplayUnavailable,
    ResourceBudgetError,
    ScenarioError,
)
from .ledger import Ledger, replay, verify_chain
from .membrane import inject_violation, run_scenario
from .reach import (
    DEFAULT_BUDGET,
    Budget,
    delta_expand,
    enumerate_reach,
    expansion_flag,
    proxy_reach_measure,
    risk_weighted_reach,
)
from .scenario import INJECTION_KINDS, dump_scenario, load_scenario

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_UNAVAILABLE, EXIT_BUDGET = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _report(kind: str, body: dict) -> dict:
    return {"schema": REPORT_SCHEMA, "kind": kind, **body}


def _emit(report: dict, path):
    text = _json(report)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def _budget(args) -> Budget:
    if getattr(args, "budget", None) is None:
        return DEFAULT_BUDGET
    if args.budget < 1:
        raise InputError("--budget must be positive")
    return Budget(max_strategies=args.budget, max_nodes=args.budget * 25)


def _frac(text, name):
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{name}: not a rational number: {text!r}") from None


def _yaml(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{path}: no such file")
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a mapping")
    return doc


def _scenario(path):
    if not Path(path).is_file():
        raise InputError(f"{path}: no such file")
    return load_scenario(path)


# ------------------------------------------------------------------ commands


def cmd_run(args) -> int:
    sc = _scenario(args.scenario)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    res = run_scenario(sc, seed=args.seed, horizon=args.horizon, budget=_budget(args))
    res.log.save(out / "run.jsonl")
    res.ledger.save(out / "ledger.bin")
    (out / "ledger.json").write_text(_json(res.ledger.export_json()))
    audit = audit_governability(res.log, res.ledger, sc.policies, res.executor.incidents)
    body = audit.to_json()
    body.pop("schema")
    body.pop("kind")
    body["scenario"] = sc.name
    body["seed"] = res.log.header["seed"]
    body["horizon"] = res.log.header["horizon"]
    body["steps"] = [
        {k: r.get(k) for k in ("step", "kind", "act", "decision", "tags", "commit_pi", "commit_ext", "witness_seq")}
        for r in res.log.records
    ]
    if sc.flags.get("task_causation"):
        body["task_causation"] = check_task_causation(res.log).to_json()
    report = _report("run", body)
    _emit(report, args.report or out / "report.json")
    print(f"{sc.name}: {audit.verdict}, {len(res.log.records)} transitions, "
          f"{len(res.ledger)} witnesses, {audit.violation_count} findings")
    for law in audit.laws_violated():
        for f in audit.findings[law]:
            print(f"  {law} at step {f['step']}: {f['detail']}")
    causation_bad = "task_causation" in body and not body["task_causation"]["passed"]
    if causation_bad:
        for b in body["task_causation"]["breaches"]:
            print(f"  task-causation breach (assumption {b['assumption']}) at step {b['step']}: {b['detail']}")
    return EXIT_VIOLATION if audit.violation_count or causation_bad else EXIT_OK


def _load_ledger(path) -> Ledger:
    if not Path(path).is_file():
        raise InputError(f"{path}: no such file")
    return Ledger.load(path)


def cmd_verify(args) -> int:
    ledger = _load_ledger(args.ledger)
    rep = verify_chain(ledger)
    if args.report:
        _emit(_report("verify", rep.to_json()), args.report)
    if rep.ok:
        print(f"ok: {rep.checked} records verified")
        return EXIT_OK
    print(f"tampered: first bad seq {rep.first_bad_seq} ({rep.reason})")
    return EXIT_VIOLATION


def cmd_replay(args) -> int:
    ledger = _load_ledger(args.ledger)
    sc = _scenario(args.scenario)
    ver = verify_chain(ledger)
    if not ver.ok:
        print(f"tampered: first bad seq {ver.first_bad_seq} ({ver.reason})")
        return EXIT_VIOLATION
    mismatches, unavailable = [], []
    for w in ledger.records:
        try:
            replay(w, sc.policies, ledger.contexts, args.policy_version)
        except ReplayMismatch as exc:
            mismatches.append({"seq": exc.seq, "stored": exc.stored, "replayed": exc.replayed})
        except ReplayUnavailable as exc:
            unavailable.append({"seq": w.seq, "detail": str(exc)})
    if args.report:
        _emit(_report("replay", {"records": len(ledger), "mismatches": mismatches,
                                 "unavailable": unavailable}), args.report)
    for m in mismatches:
        print(f"mismatch at seq {m['seq']}: stored {m['stored']}, replayed {m['replayed']}")
    for u in unavailable:
        print(f"unavailable: {u['detail']}")
    if mismatches:
        return EXIT_VIOLATION
    if unavailable:
        return EXIT_UNAVAILABLE
    print(f"ok: {len(ledger)} records replayed")
    return EXIT_OK


def cmd_inject(args) -> int:
    sc = _scenario(args.scenario)
    bad = inject_violation(args.kind, sc, at_step=args.at_step)
    Path(args.output).write_text(dump_scenario(bad))
    print(f"wrote {args.output}: {args.kind} armed from round {args.at_step}")
    return EXIT_OK


# ------------------------------------------------------------------ analyses


def analyze_reach(args) -> int:
    sc = _scenario(args.scenario)
    s = sc.initial_state
    prof = s.adm if args.version is None else s.adm.with_version(args.version)
    if prof.policy_version not in sc.policies:
        raise InputError(f"unknown policy version {prof.policy_version!r}")
    start = args.node or s.loc
    caps = sc.caps_of(s)
    budget = _budget(args)
    reach = enumerate_reach(sc, start, prof, caps, budget)
    mu = risk_weighted_reach(sc, start, prof, caps=caps, budget=budget)
    report = _report("reach", {
        "scenario": sc.name,
        "start": start,
        "policy_version": prof.policy_version,
        "horizon_H": prof.horizon_H,
        "memory_bound": prof.strategy_class.memory_bound,
        "L": sc.approximation.L,
        "reach": reach.to_json(),
        "mu_hat": str(mu),
        "backend": kernels.BACKEND,
    })
    _emit(report, args.report)
    print(f"|Reach_{prof.horizon_H}| = {len(reach.traces)}, mu_hat = {mu}")
    return EXIT_OK


def analyze_expand(args) -> int:
    before, after = _scenario(args.before), _scenario(args.after)
    budget = _budget(args)
    if args.proxy:
        mu_b = proxy_reach_measure(before.capability_graph, before.h_cap, before.risk)
        mu_a = proxy_reach_measure(after.capability_graph, after.h_cap, after.risk)
    else:
        sb, sa = before.initial_state, after.initial_state
        mu_b = risk_weighted_reach(before, sb.loc, sb.adm, caps=before.caps_of(sb), budget=budget)
        mu_a = risk_weighted_reach(after, sa.loc, sa.adm, caps=after.caps_of(sa), budget=budget)
    d = delta_expand(mu_b, mu_a)
    eps = before.approximation.epsilon_expand_norm
    flag = expansion_flag(d, eps)
    report = _report("expand", {
        "measure": "proxy" if args.proxy else "mu_hat",
        "before": str(mu_b),
        "after": str(mu_a),
        "delta_expand": str(d),
        "epsilon_expand_norm": str(eps),
        "flag": flag,
    })
    _emit(report, args.report)
    print(f"delta_expand = {d} ({'over' if flag else 'within'} threshold {eps})")
    return EXIT_OK


def _scarcity_inputs(args):
    doc = _yaml(args.config) if args.config else {}
    for key in ("lambda_ext", "mu_internal", "halt_window", "horizon", "stimulate_every", "seed"):
        v = getattr(args, key)
        if v is not None:
            doc[key] = v
    try:
        cfg = ScarcityConfig(
            lambda_ext=_frac(doc.get("lambda_ext", 0), "lambda_ext"),
            mu_internal=_frac(doc.get("mu_internal", 1), "mu_internal"),
            halt_window=int(doc.get("halt_window", 10)),
            policy_fixed=bool(doc.get("policy_fixed", True)),
            horizon=int(doc.get("horizon", 100)),
            scarcity_ratio=int(doc.get("scarcity_ratio", 10)),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    scen = ScarcityScenario(
        stimulate_every=doc.get("stimulate_every"),
        stimulated_steps=frozenset(doc.get("stimulated_steps") or ()),
        internal_progress_visible=bool(doc.get("internal_progress_visible", False)),
        absorbing_halt=bool(doc.get("absorbing_halt", True)),
    )
    return cfg, scen, int(doc.get("seed", 0))


def analyze_scarcity(args) -> int:
    cfg, scen, seed = _scarcity_inputs(args)
    trace = simulate_scarcity(cfg, scen, seed)
    body = trace.to_json()
    body.pop("kind")
    body["seed"] = seed
    _emit(_report("scarcity", body), args.report)
    if trace.survived:
        print(f"survived {cfg.horizon} steps with {trace.stimulated_count} stimulated acts")
    else:
        print(f"HALTED at step {trace.halt_step}")
    for d in trace.diagnostics:
        print(f"breach: {d['detail']}")
    return EXIT_VIOLATION if trace.diagnostics else EXIT_OK


def analyze_backlog(args) -> int:
    doc = _yaml(args.config) if args.config else {}
    if args.arrival is not None:
        doc["arrivals"] = args.arrival
    if args.r_obs is not None:
        doc["r_obs"] = args.r_obs
    if args.horizon is not None:
        doc["horizon"] = args.horizon
    if args.uniform is not None:
        doc["arrivals"] = {"uniform": args.uniform, "seed": args.seed or 0}
    try:
        cfg = BacklogConfig(
            r_obs=_frac(doc.get("r_obs", 1), "r_obs"),
            alpha=_frac(doc.get("alpha", 1), "alpha"),
            beta=_frac(doc.get("beta", 0), "beta"),
            k=_frac(doc.get("k", 1), "k"),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    horizon = int(doc.get("horizon", 10))
    arr = doc.get("arrivals", 0)
    if isinstance(arr, dict):
        low, high = arr["uniform"]
        arrivals = uniform_arrivals(int(arr.get("seed", 0)), int(low), int(high))
    elif isinstance(arr, list):
        arrivals = [_frac(a, "arrivals") for a in arr]
    else:
        const = _frac(arr, "arrivals")
        arrivals = [const] * horizon
    try:
        rep = simulate_backlog(cfg, arrivals, horizon, doc.get("x_risk"), doc.get("capacity"))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    body = rep.to_json()
    body.pop("kind")
    body["r_obs"] = str(cfg.r_obs)
    _emit(_report("backlog", body), args.report)
    print(f"B_{horizon} = {rep.final} ({'stable' if rep.stable else 'unstable'}: "
          f"mean arrival {rep.mean_arrival} vs service {rep.mean_service})")
    return EXIT_VIOLATION if rep.h1_violations else EXIT_OK


def analyze_collision(args) -> int:
    doc = _yaml(args.config)
    try:
        sigma = tuple(str(s) for s in doc["sigma_b"])
        kappa = int(doc["kappa"])
        t = int(doc["t"])
        model = ObserverModel(sigma, kappa, float(doc["R"])) if "R" in doc else ObserverModel.full_rate(sigma, kappa)
        machines = [[[str(s) for s in step] for step in m] for m in doc["machines"]]
        hit = find_observer_collision(model, t, machines)
        guaranteed = collision_guaranteed(model, t, machines)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{args.config}: bad collision input: {exc}") from None
    report = _report("collision", {
        "machines": len(machines),
        "t": t,
        "kappa": kappa,
        "alphabet_size": len(sigma),
        "trace_bound": trace_bound(model, t),
        "guaranteed": guaranteed,
        "collision": None if hit is None else {
            "first": hit.first, "second": hit.second, "trace": [list(s) for s in hit.trace],
        },
    })
    _emit(report, args.report)
    if hit is None:
        print("no collision")
    else:
        print(f"collision: machines {hit.first} and {hit.second} emit {[''.join(s) for s in hit.trace]}")
    return EXIT_OK


ANALYSES = {
    "reach": analyze_reach,
    "expand": analyze_expand,
    "scarcity": analyze_scarcity,
    "backlog": analyze_backlog,
    "collision": analyze_collision,
}


# -------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not detected violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="govkernel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute a scenario through the membrane and audit it")
    r.add_argument("scenario")
    r.add_argument("--seed", type=int)
    r.add_argument("--horizon", type=int)
    r.add_argument("--report")
    r.add_argument("--budget", type=int, help="max strategy tables per reach query")
    r.add_argument("--out", "-o", help="directory for run.jsonl, ledger.bin, report.json")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="verify a ledger's hash chain")
    v.add_argument("ledger")
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    rp = sub.add_parser("replay", help="re-adjudicate every witness against a scenario's policies")
    rp.add_argument("ledger")
    rp.add_argument("scenario")
    rp.add_argument("--policy-version", help="replay under this version instead of the pinned one")
    rp.add_argument("--report")
    rp.set_defaults(func=cmd_replay)

    a = sub.add_parser("analyze", help="reach, expansion, scarcity, backlog and collision analyses")
    asub = a.add_subparsers(dest="analysis", required=True, parser_class=_Parser)

    ar = asub.add_parser("reach")
    ar.add_argument("scenario")
    ar.add_argument("--node")
    ar.add_argument("--version")

    ae = asub.add_parser("expand")
    ae.add_argument("before")
    ae.add_argument("after")
    ae.add_argument("--proxy", action="store_true", help="compare capability-graph proxy measures")

    asc = asub.add_parser("scarcity")
    asc.add_argument("config", nargs="?")
    asc.add_argument("--lambda-ext", dest="lambda_ext")
    asc.add_argument("--mu-internal", dest="mu_internal")
    asc.add_argument("--halt-window", dest="halt_window", type=int)
    asc.add_argument("--stimulate-every", dest="stimulate_every", type=int)

    ab = asub.add_parser("backlog")
    ab.add_argument("config", nargs="?")
    ab.add_argument("--arrival", help="constant arrival per step")
    ab.add_argument("--uniform", nargs=2, type=int, metavar=("LOW", "HIGH"),
                    help="seeded integer arrivals uniform on [LOW, HIGH]")
    ab.add_argument("--r-obs", dest="r_obs")

    ac = asub.add_parser("collision")
    ac.add_argument("config")

    for name, sp in (("reach", ar), ("expand", ae), ("scarcity", asc), ("backlog", ab), ("collision", ac)):
        sp.add_argument("--report")
        sp.add_argument("--budget", type=int)
        if name in ("scarcity", "backlog"):
            sp.add_argument("--seed", type=int)
            sp.add_argument("--horizon", type=int)
        sp.set_defaults(func=ANALYSES[name])

    inj = sub.add_parser("inject", help="write a scenario variant that commits one violation")
    inj.add_argument("kind", choices=INJECTION_KINDS)
    inj.add_argument("scenario")
    inj.add_argument("--output", "-o", required=True)
    inj.add_argument("--at-step", type=int, default=0)
    inj.set_defaults(func=cmd_inject)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceBudgetError as exc:
        print(f"resource budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, LedgerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GovKernelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
