"""Command-line front end: ``qnetsim <command> [--config FILE] [flags]``.

Each command reads its section of a YAML scenario file, lets flags override
individual keys, runs the computation and writes one record per row as CSV or
JSON lines. Field names are listed in docs/schema.md.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys

import numpy as np

from . import __version__, channels, config as cfgmod, linalg as la, photonics, reproduce
from .entangled import (
    CHSH_PRESETS,
    BellLabel,
    ChshSetting,
    bell_density,
    bell_label,
    chsh_correlators,
    chsh_from_counts,
    chsh_value,
    correlators_from_counts,
    sample_chsh_counts,
)
from .errors import ConfigError, QnetError, SimulationFailure
from .linklayer import LinkSpec, link_cost, link_timing, herald_probability, run_link
from .network import LinkEntry, NodeSpec, Request, Topology, end_to_end, multiplex, route
from .protocols import (
    Bb84Config,
    E91Config,
    bb84,
    bitflip_pair,
    chsh_game,
    e91,
    entanglement_swap,
    purify,
    teleport,
)
from .protocols.purify import fidelity_to_phi_plus, iterate, recurrence
from .qstate import OBSERVABLES, PureState, apply_gate, basis, expectation, fidelity, measure, rotation_gate
from .rng import SEED_ENV_VAR, make_rng, spawn

RANDOMIZED = {"state", "chsh", "teleport", "bb84", "e91", "swap", "purify", "link", "net", "reproduce"}

# bb84 records list kept round indices only for runs this short
KEPT_INDEX_LIMIT = 256

# keys that only make sense inside a config file
_FILE_ONLY = {"resource_noise", "channel", "topology", "request", "requests", "signs"}


# Helpers -----------------------------------------------------------------------------


def _channel(spec):
    if spec is None:
        return None
    return channels.NoiseChannel(spec["kind"], spec["p"], spec["t"], spec["T"])


def _fmt_path(path):
    return "-".join(path)


_GATE_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9]*)\s*(?:\(([^)]*)\))?\s*@\s*([\d,\s]+)$")


def _parse_gate(text: str):
    m = _GATE_RE.match(text)
    if not m:
        raise cfgmod.ConfigFieldError("state.gates", f"cannot parse gate {text!r}; expected NAME@t or RX(theta)@t")
    name, arg, targets = m.group(1).upper(), m.group(2), m.group(3)
    tg = tuple(int(t) for t in targets.split(",") if t.strip())
    if name in ("RX", "RY", "RZ"):
        if arg is None:
            raise cfgmod.ConfigFieldError("state.gates", f"{name} needs an angle, e.g. {name}(1.5708)@0")
        axis = {"RX": (1, 0, 0), "RY": (0, 1, 0), "RZ": (0, 0, 1)}[name]
        return rotation_gate(axis, float(arg)), tg
    if name not in la.GATES or arg is not None:
        raise cfgmod.ConfigFieldError("state.gates", f"unknown gate {text!r}")
    return la.GATES[name], tg


def _parse_measure(text: str):
    label, _, target = text.rpartition("@")
    if not label or label not in OBSERVABLES or not target.strip().isdigit():
        raise cfgmod.ConfigFieldError("state.measure", f"cannot parse measurement {text!r}; expected BASIS@t")
    return basis(label, int(target))


def _input_state(text: str) -> PureState:
    if "," in text:
        theta, phi = (float(x) for x in text.split(","))
        return PureState.from_bloch(theta, phi)
    return PureState.from_label(text)


def _topology(section) -> Topology:
    node_specs = section["nodes"]
    ids = [n["id"] for n in node_specs]
    for link in section["links"]:
        for end in (link["a"], link["b"]):
            if not node_specs and end not in ids:
                ids.append(end)
    nodes = [NodeSpec(**n) for n in node_specs] or [NodeSpec(i) for i in ids]
    links = []
    for link in section["links"]:
        fields = {k: v for k, v in link.items() if k not in ("a", "b", "cost")}
        links.append(LinkEntry(link["a"], link["b"], LinkSpec(**fields), link["cost"]))
    return Topology(nodes, links)


def _request(r) -> Request:
    return Request(r["src"], r["dst"], r["pairs_wanted"], r["F_min"])


# Commands ----------------------------------------------------------------------------


def cmd_state(c, rng):
    st = PureState.from_label(c["initial"])
    for g in c["gates"]:
        gate, targets = _parse_gate(g)
        st = apply_gate(st, gate, targets)
    out = []
    for label, amp in zip(la.basis_strings(st.n_qubits), st.vec):
        out.append({"record": "amplitude", "basis": label, "re": float(amp.real),
                    "im": float(amp.imag), "probability": float(abs(amp) ** 2)})
    obs = [_parse_measure(m) for m in c["measure"]]
    for text, o in zip(c["measure"], obs):
        out.append({"record": "expectation", "observable": text, "value": expectation(st, o)})
    if obs:
        for shot, r in enumerate(spawn(rng, c["shots"])):
            s, results = st, []
            for o in obs:
                rec = measure(s, o, r)
                s = rec.post_state
                results.append(f"{rec.outcome:+d}")
            out.append({"record": "shot", "shot": shot, "outcomes": ";".join(results)})
    return out


def cmd_chsh(c, rng):
    label = bell_label(c["state"])
    rho = bell_density(label)
    preset = CHSH_PRESETS[label]
    setting = ChshSetting(preset.alice, preset.bob, tuple(c["signs"])) if c["signs"] else preset
    out = []
    corr = chsh_correlators(rho, setting)
    for (a, b), v in zip(setting.pairs(), corr):
        out.append({"record": "correlator", "alice": a, "bob": b, "value": v, "source": "analytic"})
    out.append({"record": "chsh", "source": "analytic", "rounds": 0, "S": chsh_value(rho, setting)})
    if c["rounds"] > 0:
        counts = sample_chsh_counts(rho, setting, c["rounds"], rng)
        for (a, b), v, row in zip(setting.pairs(), correlators_from_counts(counts), counts):
            out.append({"record": "correlator", "alice": a, "bob": b, "value": float(v), "source": "sampled",
                        "n_pp": int(row[0]), "n_pm": int(row[1]), "n_mp": int(row[2]), "n_mm": int(row[3])})
        out.append({"record": "chsh", "source": "sampled", "rounds": c["rounds"],
                    "S": chsh_from_counts(counts, setting.signs)})
    if c["game_strategy"]:
        g = c["game_strategy"]
        out.append({"record": "game", "strategy": g, "source": "analytic", "rounds": 0, "win_rate": chsh_game(g)})
        if c["rounds"] > 0:
            out.append({"record": "game", "strategy": g, "source": "sampled", "rounds": c["rounds"],
                        "win_rate": chsh_game(g, c["rounds"], rng)})
    return out


def cmd_teleport(c, rng):
    inp = _input_state(c["input"])
    if inp.n_qubits != 1:
        raise cfgmod.ConfigFieldError("teleport.input", "input must be a single qubit")
    resource = bell_density(c["resource"])
    noise = _channel(c["resource_noise"])
    if noise is not None:
        resource = channels.apply_channel(resource, noise, 1)
    out, fids, labels = [], [], {b.value: 0 for b in BellLabel}
    for trial, r in enumerate(spawn(rng, c["trials"])):
        res = teleport(inp, resource, r, message_latency_s=c["message_latency_s"])
        f = fidelity(res.bob_state, inp)
        fids.append(f)
        labels[res.bsm_label.value] += 1
        out.append({"record": "trial", "trial": trial, "bsm_label": res.bsm_label.value,
                    "bits": f"{res.classical_bits[0]}{res.classical_bits[1]}", "correction": res.correction,
                    "probability": res.probability, "fidelity": f, "latency_s": res.message_latency_s})
    summary = {"record": "summary", "trials": c["trials"], "mean_fidelity": float(np.mean(fids))}
    summary.update({f"freq_{k}": v / c["trials"] for k, v in labels.items()})
    out.append(summary)
    return out


def cmd_bb84(c, rng, seed):
    cfg = Bb84Config(
        n=c["n"], eve_mode=c["eve_mode"], eve_fraction=c["eve_fraction"], test_fraction=c["test_fraction"],
        n_test=c["n_test"], rng_seed=seed, abort_mismatch_fraction=c["abort_mismatch_fraction"],
        channel=_channel(c["channel"]), alice_bits=c["alice_bits"], alice_bases=c["alice_bases"],
        bob_bases=c["bob_bases"],
    )
    rep = bb84(cfg, rng)
    return [{
        "record": "bb84", "n": c["n"], "eve_mode": c["eve_mode"],
        "sifted_length": int(rep.kept_indices.size), "kept_indices": [int(i) for i in rep.kept_indices] if c["n"] <= KEPT_INDEX_LIMIT else None,
        "n_test": rep.n_test, "test_mismatches": rep.mismatch_count, "test_mismatch_rate": rep.test_mismatch_rate,
        "detection_flag": rep.detection_flag, "aborted": rep.aborted, "key_length": int(rep.final_key.size),
        "key_mismatches": rep.key_mismatch_count, "key": rep.key_string(),
    }]


def cmd_e91(c, rng, seed):
    res = e91(E91Config(c["n_rounds"], seed, c["source"], _channel(c["channel"])), rng)
    rep = res.key_report
    return [{
        "record": "e91", "n_rounds": c["n_rounds"], "source": c["source"], "S": res.chsh,
        "key_rounds": res.round_classes["key"], "chsh_rounds": res.round_classes["chsh"],
        "discard_rounds": res.round_classes["discard"], "key_length": int(rep.final_key.size),
        "key_mismatches": rep.key_mismatch_count, "detection_flag": rep.detection_flag,
    }]


def cmd_swap(c, rng):
    ab, bc = bitflip_pair(c["fidelity_ab"]), bitflip_pair(c["fidelity_bc"])
    out, fids = [], []
    for trial, r in enumerate(spawn(rng, c["trials"])):
        res = entanglement_swap(ab, bc, r, c["outcome"])
        f = fidelity_to_phi_plus(res.corrected_ac)
        fids.append(f)
        out.append({"record": "trial", "trial": trial, "outcome": res.outcome.value,
                    "probability": res.probability, "correction": res.correction, "fidelity": f})
    out.append({"record": "summary", "trials": c["trials"], "mean_fidelity": float(np.mean(fids))})
    return out


def cmd_purify(c, rng):
    F = c["fidelity"]
    out = []
    fs = iterate(F, c["rounds"])
    for k, f in enumerate(fs):
        keep = recurrence(f)[1] if k < len(fs) - 1 else None
        out.append({"record": "round", "round": k, "fidelity": f, "keep_probability": keep})
    pair = bitflip_pair(F)
    kept, kept_f = 0, []
    for r in spawn(rng, c["trials"]):
        res = purify(pair, pair, r)
        if res.kept:
            kept += 1
            kept_f.append(fidelity_to_phi_plus(res.post))
    f_new, keep = recurrence(F)
    out.append({"record": "sampled", "trials": c["trials"], "keep_rate": kept / c["trials"],
                "keep_probability": keep, "kept_fidelity": float(np.mean(kept_f)) if kept_f else None,
                "predicted_fidelity": f_new})
    return out


def _link_spec(c) -> LinkSpec:
    fields = {k: c[k] for k in cfgmod.LINK_FIELDS}
    fields["memory_T1_s"] = (c["memory_T1_s"],) * 2
    fields["memory_T2_s"] = (c["memory_T2_s"],) * 2
    return LinkSpec(**fields)


def cmd_link(c, rng):
    spec = _link_spec(c)
    r_trace, r_cost = spawn(rng, 2)
    out = []
    t = link_timing(spec)
    out.append({"record": "timing", "bsa_offset_s": t.bsa, "herald_offset_s": t.heralded,
                "storage_left": t.storage_left, "storage_right": t.storage_right,
                "herald_probability": herald_probability(spec)})
    if c["traces"]:
        for tr in run_link(spec, r_trace, c["max_attempts"]):
            out.append({"record": "attempt", **tr.to_record()})
    cost = link_cost(spec, c["cost_mode"], r_cost, c["trials"])
    out.append({"record": "cost", "mode": c["cost_mode"],
                "seconds_per_bell_pair": cost.seconds_per_bell_pair_at_threshold,
                "purification_rounds": cost.purification_rounds, "base_time_s": cost.base_time_s,
                "raw_fidelity": cost.raw_fidelity, "final_fidelity": cost.final_fidelity,
                "pair_multiplier": cost.pair_multiplier, "attempt_period_s": cost.attempt_period_s})
    return out


def cmd_route(c, rng):
    topo = _topology(c["topology"])
    res = route(topo, _request(c["request"]))
    return [{"record": "route", "src": c["request"]["src"], "dst": c["request"]["dst"],
             "path": _fmt_path(res.path), "hops": len(res.path) - 1, "total_cost": res.total_cost_s}]


def cmd_net(c, rng):
    topo = _topology(c["topology"])
    reqs = [_request(r) for r in c["requests"]]
    if not reqs:
        raise cfgmod.ConfigFieldError("net.requests", "at least one request is needed")
    out = []
    if c["mode"] == "multiplex":
        rep = multiplex(topo, reqs, c["scheme"], c["horizon_s"], rng)
        for i, (path, d, thr) in enumerate(zip(rep.routes, rep.delivered, rep.throughput)):
            out.append({"record": "request", "request": i, "path": _fmt_path(path), "delivered": d,
                        "throughput_hz": thr, "starved": i in rep.starved})
        for key in sorted(rep.links):
            u = rep.links[key]
            out.append({"record": "link", "link": _fmt_path(u.link), "users": u.users, "generated": u.generated,
                        "consumed": u.consumed, "idle_attempts": u.idle_attempts})
        out.append({"record": "summary", "scheme": rep.scheme, "horizon_s": rep.horizon_s,
                    "max_contention_link": _fmt_path(rep.max_contention_link), "starvation": rep.starvation})
        return out
    for i, (req, r) in enumerate(zip(reqs, spawn(rng, len(reqs)))):
        res = end_to_end(topo, req, r, c["order"])
        for lk in res.link_log:
            out.append({"record": "link_pair", "request": i, "link": _fmt_path(lk.link), "attempts": lk.attempts,
                        "purification_rounds": lk.purification_rounds, "t_ready": lk.t_ready,
                        "fidelity": lk.fidelity})
        for s in res.swap_log:
            out.append({"record": "swap", "request": i, **s.to_record()})
        for k, (f, t) in enumerate(zip(res.fidelities, res.delivery_times)):
            out.append({"record": "delivery", "request": i, "pair": k, "path": _fmt_path(res.path),
                        "fidelity": f, "t_delivered": t})
        out.append({"record": "summary", "request": i, "path": _fmt_path(res.path), "elapsed_s": res.elapsed_s,
                    "mean_fidelity": float(np.mean(res.fidelities))})
    return out


def cmd_optics(c, rng):
    op = c["op"]
    if op == "dispersion":
        d = photonics.dispersion_delay(photonics.FiberPhysical(c["nf"], c["nc"]))
        return [{"record": "dispersion", "nf": c["nf"], "nc": c["nc"], "dt_ns_per_km": d.dt_per_km * 1e9,
                 "spread_m_per_km": d.spread_m_per_km, "min_separation_m_per_km": d.min_pulse_separation_m}]
    if op == "snell":
        res = photonics.snell_refraction(c["ni"], c["nr"], math.radians(c["theta_deg"]))
        if isinstance(res, photonics.TotalInternalReflection):
            return [{"record": "snell", "tir": True, "theta_r_deg": None,
                     "critical_angle_deg": math.degrees(res.critical_angle)}]
        crit = math.degrees(photonics.critical_angle(c["ni"], c["nr"])) if c["ni"] > c["nr"] else None
        return [{"record": "snell", "tir": False, "theta_r_deg": math.degrees(res), "critical_angle_deg": crit}]
    if op == "na":
        a = photonics.numerical_aperture(c["ni"], c["nf"], c["nc"])
        return [{"record": "na", "NA": a.NA, "theta_max_deg": math.degrees(a.theta_max),
                 "cone_deg": math.degrees(a.cone),
                 "critical_angle_deg": math.degrees(photonics.critical_angle(c["nf"], c["nc"]))}]
    if op == "laser":
        p = photonics.LaserParams(c["G"], c["N0"], c["k"], c["alpha_l"])
        res = photonics.laser_fixed_points(p)
        return [{"record": "fixed_point", "n": fp.n, "slope": fp.slope, "stability": fp.stability,
                 "threshold_N0": p.threshold, "lasing": res.lasing} for fp in res.fixed_points]
    if op == "db":
        if c["db"] is not None:
            return [{"record": "db", "db": c["db"], "fraction": photonics.fraction_from_db(c["db"])}]
        if c["p_out"] is None:
            raise cfgmod.ConfigFieldError("optics.p_out", "db needs either p_out or db")
        return [{"record": "db", "db": photonics.db_loss(c["p_out"], c["p_in"]), "fraction": c["p_out"] / c["p_in"]}]
    if op == "poisson":
        return [{"record": "poisson", "mean": c["mean"], "k": k,
                 "probability": photonics.attenuated_poisson(c["mean"], k)} for k in range(c["kmax"] + 1)]
    w1 = photonics.WaveParams(c["A1"], c["omega1"], c["k1"], c["phi1"])
    w2 = photonics.WaveParams(c["A2"], c["omega2"], c["k2"], c["phi2"])
    if c["omega1"] == c["omega2"]:
        s = photonics.interference_sum(w1, w2)
        return [{"record": "interference", "A": s.A, "alpha": s.alpha}]
    v = photonics.interference_sum(w1, w2, same_frequency=False)
    return [{"record": "beat", "v_phase": v.v_phase, "v_group": v.v_group}]


def cmd_reproduce(c, rng, seed):
    return [{"record": "reproduce", **r.to_record()} for r in reproduce.rows(seed)]


COMMANDS = {
    "state": cmd_state, "chsh": cmd_chsh, "teleport": cmd_teleport, "bb84": cmd_bb84, "e91": cmd_e91,
    "swap": cmd_swap, "purify": cmd_purify, "link": cmd_link, "route": cmd_route, "net": cmd_net,
    "optics": cmd_optics, "reproduce": cmd_reproduce,
}
_NEEDS_SEED = {"bb84", "e91", "reproduce"}


# Output ------------------------------------------------------------------------------


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(v)
    return str(v)


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return _clean(v.item())
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def render(records, fmt: str) -> str:
    records = [_clean(r) for r in records]
    if fmt == "jsonl":
        return "".join(json.dumps(r) + "\n" for r in records)
    columns = []
    for r in records:
        for k in r:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: _cell(r.get(k)) for k in columns})
    return buf.getvalue()


# Argument parsing --------------------------------------------------------------------


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="YAML scenario file")
    common.add_argument("--seed", help=f"64-bit unsigned seed (overrides ${SEED_ENV_VAR} and the config)")
    common.add_argument("--format", choices=("csv", "jsonl"), help="output format (default jsonl)")
    common.add_argument("--output", "-o", help="write records to this file instead of stdout")
    common.add_argument("--print-config", action="store_true", help="print the effective config as JSON and exit")

    parser = argparse.ArgumentParser(prog="qnetsim", description="Quantum network stack simulator")
    parser.add_argument("--version", action="version", version=f"qnetsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, schema in cfgmod.SECTIONS.items():
        p = sub.add_parser(name, parents=[common], help=f"run the {name} command")
        for key in schema:
            if key in _FILE_ONLY:
                continue
            if name == "optics" and key == "op":
                p.add_argument("op", nargs="?", default=None,
                               choices=("dispersion", "snell", "na", "laser", "db", "poisson", "interference"))
                continue
            p.add_argument(_flag(key), dest=f"set_{key}", metavar=key.upper())
        if name == "route":
            p.add_argument("--src", dest="req_src")
            p.add_argument("--dst", dest="req_dst")
            p.add_argument("--F-min", dest="req_F_min")
    return parser


def effective_config(args, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    raw, lines = ({}, {})
    if args.config:
        raw, lines = cfgmod.load_file(args.config)
    cmd = args.command
    section = raw.get(cmd)
    if section is None:
        section = {}
    elif not isinstance(section, dict):
        raise cfgmod.ConfigFieldError(cmd, "expected a mapping", lines.get(cmd))
    section = dict(section)
    for key, value in vars(args).items():
        if key.startswith("set_") and value is not None:
            section[key[4:]] = value
    if cmd == "optics" and args.op is not None:
        section["op"] = args.op
    if cmd == "route":
        req = dict(section.get("request") or {})
        for key in ("src", "dst", "F_min"):
            if getattr(args, f"req_{key}") is not None:
                req[key] = getattr(args, f"req_{key}")
        if req:
            section["request"] = req
    raw = {**raw, cmd: section}
    env_seed = environ.get(SEED_ENV_VAR)
    if args.seed is not None:
        raw["seed"] = args.seed
    elif env_seed not in (None, ""):
        raw["seed"] = env_seed
    if args.format is not None or args.output is not None:
        out = dict(raw.get("output") or {})
        if args.format is not None:
            out["format"] = args.format
        if args.output is not None:
            out["path"] = args.output
        raw["output"] = out
    eff = cfgmod.normalize(cmd, raw, lines)
    if eff["seed"] is None:
        eff["seed"] = 0
    return eff


def run(argv=None, stdout=None, stderr=None, environ=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    cmd = args.command
    try:
        eff = effective_config(args, environ)
        if args.print_config:
            stdout.write(json.dumps(cfgmod.to_jsonable(eff), indent=2) + "\n")
            return 0
        seed = eff["seed"]
        rng = make_rng(seed)
        fn = COMMANDS[cmd]
        c = eff[cmd]
        records = fn(c, rng, seed) if cmd in _NEEDS_SEED else fn(c, rng)
    except ConfigError as exc:
        stderr.write(f"qnetsim: config error: {exc}\n")
        return 2
    except ValueError as exc:
        stderr.write(f"qnetsim: config error: {exc}\n")
        return 2
    except SimulationFailure as exc:
        stderr.write(f"qnetsim: simulation failure: {type(exc).__name__}: {exc}\n")
        return 1
    except QnetError as exc:
        stderr.write(f"qnetsim: error: {exc}\n")
        return 1
    if cmd in RANDOMIZED:
        stderr.write(f"qnetsim: seed={seed}\n")
    out_cfg = eff["output"]
    if cmd == "reproduce" and args.format is None and out_cfg["path"] is None:
        text = "\n".join(_reproduce_lines(records)) + "\n"
    else:
        text = render(records, out_cfg["format"])
    if out_cfg["path"]:
        with open(out_cfg["path"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if cmd == "reproduce" and not all(r["pass"] for r in records):
        return 1
    return 0


def _reproduce_lines(records):
    rows = [reproduce.ReproRow(r["quantity"], r["computed"], r["book"], r["reference"], r["tolerance"])
            for r in records]
    return reproduce.table_lines(rows)


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
