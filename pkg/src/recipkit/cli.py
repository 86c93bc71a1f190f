"""Command line front end.

Every subcommand resolves a system either from the built-in model registry
(--model, extended through the RECIPKIT_MODEL_PATH environment variable) or
from a JSON description (--input), runs one analysis and writes a
deterministic report.json into --out.  Exit codes: 0 success, 1 a check
came back negative, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Optional

import numpy as np

from .core import (
    AssumptionError,
    BoxDomain,
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    MetricField,
    NonlinearSystem,
    RecipkitError,
    SchemaError,
    SingularMatrixError,
    as_vector,
)
from .dynamics import (
    NotRelaxationError,
    Trajectory,
    certify_relaxation,
    dissipation_monitor,
    integrate_implicit_midpoint,
    ph_to_hessian_pseudo_gradient,
    simulate_port_hamiltonian,
    simulate_pseudo_gradient,
)
from .geometry import (
    external_reciprocity_test,
    flatness_check,
    hessian_christoffel,
    levi_civita,
)
from .legendre import homogeneity_check, make_legendre_pair
from .linear import (
    PastInput,
    check_linear_reciprocity,
    compatible_storage_fixed_point,
    impulse_response_symmetry,
    kernel_invariance_check,
    lmi_residual,
    recover_metric_hankel,
)
from .models import ModelBundle, field_registry, model_registry
from .reciprocity import (
    check_reciprocity_affine,
    check_reciprocity_hessian,
)
from .schema import load_registry_extras, load_system_file, parse_field

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# deterministic report emission


def _emit_json(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if f != f or f in (float("inf"), float("-inf")):
            return "null"
        return "%.17g" % f
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_emit_json(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(json.dumps(str(k)) + ":" + _emit_json(v)
                              for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(value).__name__} into the report")


def write_report(out_dir: str, payload: dict, filename: str = "report.json") -> str:
    os.makedirs(out_dir, exist_ok=True)
    text = _emit_json(payload) + "\n"
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".report-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        target = os.path.join(out_dir, filename)
        os.replace(tmp, target)  # atomic on POSIX
        return target
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# argument plumbing


def _parse_tols(pairs) -> dict:
    tols = {}
    for item in pairs or []:
        if "=" not in item:
            raise SchemaError(f"--tol expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            tols[key.strip()] = float(raw)
        except ValueError as exc:
            raise SchemaError(f"--tol {key}: {raw!r} is not a number") from exc
    return tols


def _registry() -> dict:
    builtin = model_registry()
    extras = load_registry_extras()
    for name in extras:
        if name in builtin:
            raise SchemaError(f"model {name!r} from RECIPKIT_MODEL_PATH "
                              "shadows a built-in model")
    builtin.update(extras)
    return builtin


def _resolve_bundle(args) -> ModelBundle:
    if getattr(args, "input", None):
        if getattr(args, "model", None):
            raise SchemaError("pass either --model or --input, not both")
        return load_system_file(args.input)
    name = getattr(args, "model", None)
    if not name:
        raise SchemaError("one of --model or --input is required")
    reg = _registry()
    if name not in reg:
        raise SchemaError(f"unknown model {name!r}; try the list-models command")
    return reg[name]


def _resolve_field(args):
    if getattr(args, "input", None):
        with open(args.input) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{args.input}: invalid JSON: {exc}") from exc
        if isinstance(doc, dict) and "field" in doc:
            doc = doc["field"]
        return parse_field(doc, args.input)
    name = getattr(args, "field", None)
    if not name:
        raise SchemaError("one of --field or --input is required")
    reg = field_registry()
    if name not in reg:
        raise SchemaError(f"unknown field {name!r} (have: {', '.join(sorted(reg))})")
    return reg[name]


def _parse_vector(text: Optional[str], dim: int, what: str) -> Optional[np.ndarray]:
    if text is None:
        return None
    try:
        vals = np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise SchemaError(f"{what}: expected comma separated numbers") from exc
    if len(vals) == 1 and dim > 1:
        vals = np.full(dim, vals[0])
    if len(vals) != dim:
        raise SchemaError(f"{what}: expected {dim} values, got {len(vals)}")
    return vals


def _input_signal(args, m: int):
    const = _parse_vector(getattr(args, "u_const", None), m, "--u-const")
    if const is None:
        const = np.zeros(m)
    sin_spec = getattr(args, "u_sin", None)
    if sin_spec is not None:
        parts = sin_spec.split(",")
        if len(parts) != 2:
            raise SchemaError("--u-sin expects AMP,FREQ")
        try:
            amp, freq = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise SchemaError("--u-sin expects numbers") from exc

        def u(t):
            return const + amp * np.sin(2.0 * np.pi * freq * t) * np.ones(m)
    else:
        def u(t):
            return const.copy()
    return u


def _default_state(domain: BoxDomain) -> np.ndarray:
    return domain.center + 0.25 * (domain.upper - domain.center)


def _hpg_nonlinear_facade(hpg) -> NonlinearSystem:
    def F(x, u):
        return np.linalg.solve(hpg.K.hess(x), -hpg.V_x(x, u))

    def H(x, u):
        return hpg.output(x, u)

    return NonlinearSystem(hpg.nx, hpg.nu, F, H, hpg.domain)


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (exit_code, payload or None)


def cmd_list_models(args, tols):
    reg = _registry()
    rows = []
    for name in sorted(reg):
        b = reg[name]
        print(f"{name:20s} {b.kind:16s} {b.description}")
        rows.append({"name": name, "kind": b.kind, "description": b.description})
    fields = sorted(field_registry())
    print("fields: " + ", ".join(fields))
    return EXIT_OK, {"command": "list-models", "models": rows, "fields": fields}


def cmd_check_reciprocity(args, tols):
    bundle = _resolve_bundle(args)
    tol = tols.get("reciprocity", 1e-6)
    payload = {"command": "check-reciprocity", "model": bundle.name, "tol": tol}
    if bundle.kind == "linear":
        if bundle.G_lin is None:
            raise SchemaError(f"model {bundle.name!r} carries no metric G")
        res = check_linear_reciprocity(bundle.linear, bundle.G_lin, bundle.sigma,
                                       tol=tol)
        times = np.linspace(0.1, args.horizon or 3.0, 12)
        imp = impulse_response_symmetry(bundle.linear, bundle.sigma, times, tol=tol)
        payload.update({"reciprocal": res.reciprocal, "residual": res.residual,
                        "impulse_symmetric": imp.symmetric,
                        "impulse_residual": imp.max_residual})
        ok = res.reciprocal and imp.symmetric
    elif bundle.kind == "affine":
        rep = check_reciprocity_affine(bundle.affine, bundle.metric, bundle.sigma,
                                       tol=tol, n_samples=args.samples, seed=args.seed)
        payload.update({"reciprocal": rep.reciprocal,
                        "residual_state": rep.residual_state,
                        "residual_output": rep.residual_output,
                        "residual_cross": rep.residual_cross,
                        "points": rep.points_tested})
        ok = rep.reciprocal
    elif bundle.kind == "hessian_pg":
        hpg = bundle.hpg
        rep = check_reciprocity_hessian(_hpg_nonlinear_facade(hpg), hpg.K, hpg.sigma,
                                        tol=tol, u_box=bundle.u_box,
                                        n_samples=args.samples, seed=args.seed)
        payload.update({"reciprocal": rep.reciprocal,
                        "residual_state": rep.residual_state,
                        "residual_output": rep.residual_output,
                        "residual_cross": rep.residual_cross,
                        "points": rep.points_tested})
        ok = rep.reciprocal
    else:
        raise SchemaError("reciprocity check expects a linear, nonlinear or "
                          "pseudo-gradient model; run convert-ph first for "
                          "port-Hamiltonian systems")
    payload["ok"] = bool(ok)
    print(f"reciprocity[{bundle.name}]: {'ok' if ok else 'FAILED'}")
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), payload


def _pick_q0(args, bundle, n):
    choice = getattr(args, "q0", "auto")
    if choice == "identity":
        return np.eye(n)
    if choice == "auto":
        return bundle.Q0 if bundle.Q0 is not None else np.eye(n)
    raise SchemaError(f"--q0 must be 'auto' or 'identity', got {choice!r}")


def cmd_check_passivity(args, tols):
    bundle = _resolve_bundle(args)
    if bundle.kind != "linear":
        raise SchemaError("passivity LMI check applies to linear models")
    tol = tols.get("lmi", 1e-9)
    Q = _pick_q0(args, bundle, bundle.linear.n)
    rep = lmi_residual(bundle.linear, Q, tol=tol)
    payload = {"command": "check-passivity", "model": bundle.name,
               "passive": rep.passive, "min_eigenvalue": rep.min_eigenvalue,
               "kernel_dimension": rep.kernel_dimension, "tol": tol,
               "ok": rep.passive}
    if rep.passive:
        inv = kernel_invariance_check(bundle.linear, Q)
        payload["kernel_invariance"] = inv
    print(f"passivity[{bundle.name}]: {'ok' if rep.passive else 'FAILED'} "
          f"(min LMI eigenvalue {rep.min_eigenvalue:.3e})")
    return (EXIT_OK if rep.passive else EXIT_CHECK_FAILED), payload


def cmd_compatible_q(args, tols):
    bundle = _resolve_bundle(args)
    if bundle.kind != "linear" or bundle.G_lin is None:
        raise SchemaError("compatible-q needs a linear model with a metric G")
    Q0 = _pick_q0(args, bundle, bundle.linear.n)
    res = compatible_storage_fixed_point(
        bundle.linear, bundle.G_lin, Q0,
        tol=tols.get("fixed_point", 1e-11), lmi_tol=tols.get("lmi", 1e-8),
        sigma=bundle.sigma)
    payload = {"command": "compatible-q", "model": bundle.name,
               "Q": res["Q"], "iterations": res["iterations"],
               "compatibility_gap": res["compatibility_gap"],
               "lmi_min_eigenvalue": res["lmi_min_eigenvalue"], "ok": True}
    print(f"compatible-q[{bundle.name}]: gap {res['compatibility_gap']:.3e} "
          f"after {res['iterations']} iterations")
    return EXIT_OK, payload


def default_past_inputs(sys, rng: np.random.Generator, count: Optional[int] = None):
    """Exponentially decaying past inputs with distinct rates.

    u_i(s) = exp(beta_i s) v_i on s <= 0 gives reachable states that are
    generically independent; log-spaced rates keep the reachable-state
    matrix well conditioned.
    """
    n, m = sys.n, sys.m
    count = count if count is not None else 2 * n + 2
    betas = np.exp(np.linspace(np.log(0.4), np.log(4.0), count))
    inputs = []
    for beta in betas:
        v = rng.standard_normal(m)
        v /= max(1.0, float(np.linalg.norm(v)))
        inputs.append(PastInput(signal=lambda s, b=beta, v=v: np.exp(b * s) * v,
                                duration=30.0 / beta))
    return inputs


def cmd_recover_g(args, tols):
    bundle = _resolve_bundle(args)
    if bundle.kind != "linear":
        raise SchemaError("recover-g applies to linear models")
    rng = np.random.default_rng(args.seed)
    past = default_past_inputs(bundle.linear, rng)
    G_hat = recover_metric_hankel(bundle.linear, bundle.sigma,
                                  horizon=args.horizon or 30.0, past_inputs=past)
    payload = {"command": "recover-g", "model": bundle.name, "G": G_hat, "ok": True}
    code = EXIT_OK
    if bundle.G_lin is not None:
        ref = bundle.G_lin
        rel = float(np.linalg.norm(G_hat - ref) / np.linalg.norm(ref))
        payload["reference_relative_error"] = rel
        tol = tols.get("recover", 1e-4)
        payload["ok"] = rel <= tol
        if rel > tol:
            code = EXIT_CHECK_FAILED
        print(f"recover-g[{bundle.name}]: relative error {rel:.3e}")
    else:
        print(f"recover-g[{bundle.name}]: recovered {bundle.linear.n}x{bundle.linear.n} metric")
    return code, payload


def cmd_legendre(args, tols):
    fld = _resolve_field(args)
    pair = make_legendre_pair(fld, samples=args.samples, seed=args.seed,
                              round_trip_tol=tols.get("round_trip", 1e-8),
                              biconjugate_tol=tols.get("biconjugate", 1e-8),
                              hessian_tol=tols.get("hessian", 1e-6))
    hom = homogeneity_check(fld, tol=tols.get("homogeneity", 1e-8),
                            samples=min(args.samples, 100), seed=args.seed)
    # re-measure the invariants for the report
    xs = fld.domain.shrink(0.9).sample(min(args.samples, 100), seed=args.seed + 1)
    rt = hs = 0.0
    for x in xs:
        z = pair.forward(x)
        rt = max(rt, float(np.max(np.abs(pair.inverse(z) - x))))
        hs = max(hs, float(np.max(np.abs(fld.hess(x) @ pair.Kstar.hess(z) - np.eye(fld.dim)))))
    payload = {"command": "legendre", "field_dim": fld.dim,
               "round_trip_gap": rt, "hessian_inverse_gap": hs,
               "homogeneous_degree_two": hom.degree2,
               "conjugacy_equals_value": hom.equal,
               "max_conjugacy_gap": hom.max_conjugacy_gap,
               "max_scaling_gap": hom.max_scaling_gap, "ok": True}
    print(f"legendre: round-trip {rt:.3e}, hessian-inverse {hs:.3e}, "
          f"degree-2 {hom.degree2}")
    return EXIT_OK, payload


def cmd_christoffel(args, tols):
    fld = _resolve_field(args)
    G = MetricField.from_hessian(fld)
    xs = fld.domain.shrink(0.8).sample(min(args.samples, 10), seed=args.seed)
    gap = 0.0
    for x in xs:
        gap = max(gap, float(np.max(np.abs(hessian_christoffel(fld, x)
                                           - levi_civita(G, x)))))
    flat = flatness_check(fld, tol=tols.get("flat", 1e-8),
                          n_samples=min(args.samples, 10), seed=args.seed)
    payload = {"command": "christoffel", "field_dim": fld.dim,
               "cross_oracle_gap": gap, "flat": flat, "ok": True}
    print(f"christoffel: cross-oracle gap {gap:.3e}, flat={flat}")
    return EXIT_OK, payload


def cmd_variational_test(args, tols):
    bundle = _resolve_bundle(args)
    if bundle.kind != "affine" or bundle.metric is None:
        raise SchemaError("variational-test needs a nonlinear model with a metric")
    sys_a = bundle.affine
    horizon = args.horizon or 2.0
    step = args.step or 1e-3
    x0 = _parse_vector(args.x0, sys_a.nx, "--x0")
    if x0 is None:
        x0 = _default_state(sys_a.domain)
    u = _input_signal(args, sys_a.nu)

    def rhs(t, x):
        return sys_a.f(x) + np.asarray(sys_a.g(x)) @ u(t)

    times, states = integrate_implicit_midpoint(rhs, x0, (0.0, horizon), step,
                                                domain=sys_a.domain)
    inputs = np.stack([u(t) for t in times])
    outputs = np.stack([as_vector(sys_a.h(states[i]), sys_a.nu)
                        + np.asarray(sys_a.k(states[i])) @ inputs[i]
                        for i in range(len(times))])
    nominal = Trajectory(times, states, inputs, outputs)
    rep = external_reciprocity_test(sys_a, bundle.metric, nominal,
                                    tol=tols.get("match", 1e-5),
                                    u_signal=u, sigma=bundle.sigma)
    payload = {"command": "variational-test", "model": bundle.name,
               "match": rep.match, "max_output_gap": rep.max_output_gap,
               "max_state_gap": rep.max_state_gap, "probes": rep.probes,
               "ok": rep.match}
    print(f"variational-test[{bundle.name}]: "
          f"{'ok' if rep.match else 'FAILED'} (output gap {rep.max_output_gap:.3e})")
    return (EXIT_OK if rep.match else EXIT_CHECK_FAILED), payload


def _simulate_bundle(bundle, args):
    horizon = args.horizon or 10.0
    step = args.step or 1e-2
    if bundle.kind == "hessian_pg":
        sys_h = bundle.hpg
        u = _input_signal(args, sys_h.nu)
        x0 = _parse_vector(args.x0, sys_h.nx, "--x0")
        if x0 is None:
            x0 = _default_state(sys_h.domain)
        traj = simulate_pseudo_gradient(sys_h, x0, u, (0.0, horizon), step)
    elif bundle.kind == "port_hamiltonian":
        sys_p = bundle.ph
        u = _input_signal(args, sys_p.nu)
        x0 = _parse_vector(args.x0, sys_p.n, "--x0")
        if x0 is None:
            x0 = _default_state(sys_p.domain)
        traj = simulate_port_hamiltonian(sys_p, x0, u, (0.0, horizon), step)
    else:
        raise SchemaError("simulate expects a pseudo-gradient or port-Hamiltonian model")
    return traj


def cmd_simulate(args, tols):
    bundle = _resolve_bundle(args)
    traj = _simulate_bundle(bundle, args)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "trajectory.csv")
    traj.to_csv(csv_path)
    payload = {"command": "simulate", "model": bundle.name,
               "steps": len(traj.times) - 1, "t_final": float(traj.times[-1]),
               "final_state": traj.states[-1], "csv": "trajectory.csv", "ok": True}
    if "S" in traj.monitors:
        mon = dissipation_monitor(traj, tol=tols.get("dissipation", 1e-8))
        payload.update({"max_dissipation_violation": mon.max_violation,
                        "passive_along": mon.passive_along,
                        "supply_scale": mon.supply_scale})
    print(f"simulate[{bundle.name}]: {len(traj.times) - 1} steps -> {csv_path}")
    return EXIT_OK, payload


def cmd_certify_relaxation(args, tols):
    bundle = _resolve_bundle(args)
    if bundle.kind != "hessian_pg":
        raise SchemaError("certify-relaxation expects a pseudo-gradient model")
    sys_h = bundle.hpg
    try:
        cert = certify_relaxation(sys_h, tol=tols.get("inequality", 1e-9),
                                  u_box=bundle.u_box, n_samples=args.samples,
                                  seed=args.seed)
    except NotRelaxationError as exc:
        payload = {"command": "certify-relaxation", "model": bundle.name,
                   "relaxation": False, "reason": str(exc), "ok": False}
        print(f"certify-relaxation[{bundle.name}]: FAILED ({exc})")
        return EXIT_CHECK_FAILED, payload
    payload = {"command": "certify-relaxation", "model": bundle.name,
               "relaxation": cert.relaxation, "mode": cert.mode,
               "min_metric_eigenvalue": cert.min_metric_eigenvalue,
               "worst_inequality": cert.worst_inequality,
               "storage_floor_ok": cert.storage_floor_ok, "ok": cert.relaxation}
    if cert.relaxation and (args.horizon or 0) > 0:
        traj = simulate_pseudo_gradient(sys_h, _default_state(sys_h.domain),
                                        _input_signal(args, sys_h.nu),
                                        (0.0, args.horizon), args.step or 1e-2,
                                        storage=cert.storage)
        mon = dissipation_monitor(traj, tol=tols.get("dissipation", 1e-8))
        payload.update({"trajectory_max_violation": mon.max_violation,
                        "trajectory_passive": mon.passive_along})
    ok = cert.relaxation
    print(f"certify-relaxation[{bundle.name}]: {'ok' if ok else 'FAILED'} "
          f"(worst inequality {cert.worst_inequality:.3e})")
    return (EXIT_OK if ok else EXIT_CHECK_FAILED), payload


def cmd_convert_ph(args, tols):
    bundle = _resolve_bundle(args)
    if bundle.kind != "port_hamiltonian" or bundle.ph is None:
        raise SchemaError("convert-ph expects a port-Hamiltonian model")
    if bundle.split is None:
        raise SchemaError(f"model {bundle.name!r} does not declare a conversion split")
    try:
        result = ph_to_hessian_pseudo_gradient(bundle.ph, bundle.split,
                                               tol=tols.get("structure", 1e-8),
                                               seed=args.seed, u_box=bundle.u_box)
    except AssumptionError as exc:
        payload = {"command": "convert-ph", "model": bundle.name, "ok": False,
                   "failed_assumption": exc.name, "reason": str(exc),
                   "report": exc.report or {}}
        print(f"convert-ph[{bundle.name}]: FAILED (assumption {exc.name})")
        return EXIT_CHECK_FAILED, payload
    payload = {"command": "convert-ph", "model": bundle.name, "ok": True,
               "report": result.report}
    horizon = args.horizon if args.horizon is not None else 1.0
    if horizon > 0:
        step = args.step or 1e-3
        split = result.split
        u = _input_signal(args, bundle.ph.nu)
        z0 = _parse_vector(args.x0, bundle.ph.n, "--x0")
        if z0 is None:
            z0 = _default_state(bundle.ph.domain)
        ph_traj = simulate_port_hamiltonian(bundle.ph, z0, u, (0.0, horizon), step)
        perm = np.array(split.idx1 + split.idx2)
        k1 = len(split.idx1)

        def to_x(z):
            zp = z[perm]
            return np.concatenate([split.H1.grad(zp[:k1]), split.H2.grad(zp[k1:])])

        hpg_traj = simulate_pseudo_gradient(result.system, to_x(z0), u,
                                            (0.0, horizon), step,
                                            enforce_domain=False)
        gap = max(float(np.max(np.abs(to_x(ph_traj.states[i]) - hpg_traj.states[i])))
                  for i in range(len(ph_traj.times)))
        tol = tols.get("trajectory", 1e-4)
        payload["trajectory_gap"] = gap
        payload["trajectory_match"] = bool(gap <= tol)
        if gap > tol:
            payload["ok"] = False
            print(f"convert-ph[{bundle.name}]: FAILED (trajectory gap {gap:.3e})")
            return EXIT_CHECK_FAILED, payload
    print(f"convert-ph[{bundle.name}]: ok")
    return EXIT_OK, payload


HANDLERS = {
    "list-models": cmd_list_models,
    "check-reciprocity": cmd_check_reciprocity,
    "check-passivity": cmd_check_passivity,
    "compatible-q": cmd_compatible_q,
    "recover-g": cmd_recover_g,
    "legendre": cmd_legendre,
    "christoffel": cmd_christoffel,
    "variational-test": cmd_variational_test,
    "simulate": cmd_simulate,
    "certify-relaxation": cmd_certify_relaxation,
    "convert-ph": cmd_convert_ph,
}


def _add_common(sp, model: bool = True, fieldarg: bool = False):
    if model:
        sp.add_argument("--model", help="name from the model registry")
        sp.add_argument("--input", help="path to a JSON system description")
    if fieldarg:
        sp.add_argument("--field", help="name from the field registry")
        sp.add_argument("--input", help="path to a JSON field description")
    sp.add_argument("--out", default=".", help="directory for report.json")
    sp.add_argument("--tol", action="append", metavar="KEY=VALUE",
                    help="override a tolerance (repeatable)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--step", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recipkit",
        description="reciprocity, passivity and relaxation analysis of "
                    "pseudo-gradient and port-Hamiltonian systems")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("list-models", help="print the model and field registries")
    sp.add_argument("--out", default=None, help="directory for report.json")

    sp = sub.add_parser("check-reciprocity", help="sampled reciprocity residuals")
    _add_common(sp)

    sp = sub.add_parser("check-passivity", help="passivity LMI for linear models")
    _add_common(sp)
    sp.add_argument("--q0", default="auto", help="'auto' or 'identity'")

    sp = sub.add_parser("compatible-q", help="storage compatible with the metric")
    _add_common(sp)
    sp.add_argument("--q0", default="auto", help="'auto' or 'identity'")

    sp = sub.add_parser("recover-g", help="recover the metric from past inputs")
    _add_common(sp)

    sp = sub.add_parser("legendre", help="conjugate pair diagnostics for a field")
    _add_common(sp, model=False, fieldarg=True)

    sp = sub.add_parser("christoffel", help="connection coefficients cross-check")
    _add_common(sp, model=False, fieldarg=True)

    sp = sub.add_parser("variational-test", help="variational duality along a nominal")
    _add_common(sp)
    sp.add_argument("--x0", help="initial state, comma separated")
    sp.add_argument("--u-const", dest="u_const", help="constant input")
    sp.add_argument("--u-sin", dest="u_sin", help="sinusoid AMP,FREQ")

    sp = sub.add_parser("simulate", help="integrate and write trajectory.csv")
    _add_common(sp)
    sp.add_argument("--x0", help="initial state, comma separated")
    sp.add_argument("--u-const", dest="u_const", help="constant input")
    sp.add_argument("--u-sin", dest="u_sin", help="sinusoid AMP,FREQ")

    sp = sub.add_parser("certify-relaxation", help="relaxation certificate")
    _add_common(sp)
    sp.add_argument("--x0", help="initial state, comma separated")
    sp.add_argument("--u-const", dest="u_const", help="constant input")
    sp.add_argument("--u-sin", dest="u_sin", help="sinusoid AMP,FREQ")

    sp = sub.add_parser("convert-ph", help="port-Hamiltonian to pseudo-gradient")
    _add_common(sp)
    sp.add_argument("--x0", help="initial port-Hamiltonian state")
    sp.add_argument("--u-const", dest="u_const", help="constant input")
    sp.add_argument("--u-sin", dest="u_sin", help="sinusoid AMP,FREQ")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tols = _parse_tols(getattr(args, "tol", None))
        code, payload = HANDLERS[args.command](args, tols)
        out = getattr(args, "out", None)
        if payload is not None and out:
            path = write_report(out, payload)
            print(f"report: {path}")
        return code
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotRelaxationError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except AssumptionError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (ConvergenceError, SingularMatrixError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RecipkitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
