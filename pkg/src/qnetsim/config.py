"""Scenario configuration: YAML loading with line numbers, schema checks and
normalization into an "effective config" that round-trips through JSON."""
from __future__ import annotations

import math
import re

import yaml

from .errors import ConfigInvalid

SCHEMA_VERSION = 1


class ConfigFieldError(ConfigInvalid):
    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"{field}: {message}{where}")


# Loading ------------------------------------------------------------------------------


def _node_lines(node, prefix, out):
    # a key's own line wins over the line its value starts on
    out.setdefault(prefix, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[key] = k.start_mark.line + 1
            _node_lines(v, key, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _node_lines(v, f"{prefix}[{i}]", out)


def load_text(text: str):
    """Parse YAML (or JSON) text; returns (data, {dotted field: line number})."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigFieldError("<file>", f"not valid YAML: {getattr(exc, 'problem', exc)}",
                               mark.line + 1 if mark else None) from None
    lines = {}
    if node is not None:
        _node_lines(node, "", lines)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigFieldError("<file>", "top level must be a mapping", 1)
    return data, lines


def load_file(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return load_text(fh.read())
    except OSError as exc:
        raise ConfigFieldError("<file>", f"cannot read {path}: {exc.strerror}") from None


# Field types ----------------------------------------------------------------------------


def _num(value, field, kind=float, minimum=None, maximum=None, open_min=False, allow_inf=False):
    if isinstance(value, bool):
        raise ConfigFieldError(field, f"expected a number, got {value!r}")
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            out = int(value)
        else:
            if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", ".inf"):
                out = math.inf
            else:
                out = float(value)
    except (TypeError, ValueError):
        raise ConfigFieldError(field, f"expected {'an integer' if kind is int else 'a number'}, got {value!r}") from None
    if kind is float and math.isnan(out):
        raise ConfigFieldError(field, "NaN is not allowed")
    if math.isinf(out) and not allow_inf:
        raise ConfigFieldError(field, "infinity is not allowed here")
    if minimum is not None and (out < minimum or (open_min and out == minimum)):
        raise ConfigFieldError(field, f"must be {'>' if open_min else '>='} {minimum}, got {out}")
    if maximum is not None and out > maximum:
        raise ConfigFieldError(field, f"must be <= {maximum}, got {out}")
    return out


def Int(minimum=None, maximum=None):
    return lambda v, f: _num(v, f, int, minimum, maximum)


def Float(minimum=None, maximum=None, open_min=False, allow_inf=False):
    return lambda v, f: _num(v, f, float, minimum, maximum, open_min, allow_inf)


def Str(choices=None):
    def conv(v, f):
        if not isinstance(v, str):
            raise ConfigFieldError(f, f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigFieldError(f, f"must be one of {', '.join(choices)}; got {v!r}")
        return v
    return conv


def Bool():
    def conv(v, f):
        if isinstance(v, bool):
            return v
        if isinstance(v, str) and v.lower() in ("true", "false", "yes", "no", "1", "0"):
            return v.lower() in ("true", "yes", "1")
        raise ConfigFieldError(f, f"expected true/false, got {v!r}")
    return conv


def Optional(inner):
    return lambda v, f: None if v is None or v == "null" else inner(v, f)


def List(inner):
    def conv(v, f):
        if isinstance(v, str):
            # flag form: items separated by ';' or whitespace (commas belong to gate targets)
            v = [x for x in re.split(r"[;\s]+", v) if x]
        if not isinstance(v, (list, tuple)):
            raise ConfigFieldError(f, f"expected a list, got {v!r}")
        return [inner(x, f"{f}[{i}]") for i, x in enumerate(v)]
    return conv


def Section(schema):
    return lambda v, f: normalize_section(v, schema, f)


def Records(schema, shorthand=None):
    """List of mappings; ``shorthand`` turns a bare scalar into a mapping."""
    def conv(v, f):
        if not isinstance(v, list):
            raise ConfigFieldError(f, "expected a list")
        out = []
        for i, item in enumerate(v):
            if not isinstance(item, dict) and shorthand:
                item = shorthand(item)
            out.append(normalize_section(item, schema, f"{f}[{i}]"))
        return out
    return conv


def normalize_section(data, schema, prefix=""):
    """Apply defaults and converters; reject keys missing from ``schema``."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigFieldError(prefix or "<root>", "expected a mapping")
    for key in data:
        if key not in schema:
            raise ConfigFieldError(f"{prefix}.{key}" if prefix else str(key), "unknown key")
    out = {}
    for key, (conv, default) in schema.items():
        field = f"{prefix}.{key}" if prefix else key
        value = data.get(key, default)
        if value is REQUIRED:
            raise ConfigFieldError(field, "is required")
        out[key] = conv(value, field) if value is not None else None
    return out


REQUIRED = object()


# Schemas ---------------------------------------------------------------------------------

OUTPUT = {
    "path": (Optional(Str()), None),
    "format": (Str(("csv", "jsonl")), "jsonl"),
}

CHANNEL = {
    "kind": (Str(("bitflip", "phaseflip", "depolarizing", "relaxationT1", "dephasingT2")), REQUIRED),
    "p": (Float(0, 1), 0.0),
    "t": (Float(0), 0.0),
    "T": (Float(0, open_min=True, allow_inf=True), math.inf),
}

BELL = ("PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus")

LINK_FIELDS = {
    "architecture": (Str(("MIM", "MM", "MSM")), "MIM"),
    "length_km": (Float(0), 1.0),
    "alpha_db_per_km": (Float(0), 0.2),
    "bsa_position_km": (Optional(Float(0)), None),
    "memory_T1_s": (Float(0, open_min=True, allow_inf=True), math.inf),
    "memory_T2_s": (Float(0, open_min=True, allow_inf=True), math.inf),
    "attempt_rate_hz": (Float(0, open_min=True), 1e6),
    "detector_efficiency": (Float(0, 1), 1.0),
    "pair_source_rate_hz": (Optional(Float(0, open_min=True)), None),
    "threshold_fidelity": (Float(0.5, 1, open_min=True), 0.9),
    "dark_count_prob": (Float(0, 1), 0.0),
}

NODE = {
    "id": (Str(), REQUIRED),
    "memory_count": (Int(1), 2),
    "T1": (Float(0, open_min=True, allow_inf=True), math.inf),
    "T2": (Float(0, open_min=True, allow_inf=True), math.inf),
}

TOPO_LINK = {
    "a": (Str(), REQUIRED),
    "b": (Str(), REQUIRED),
    "cost": (Optional(Float(0)), None),
    **{k: v for k, v in LINK_FIELDS.items() if k not in ("memory_T1_s", "memory_T2_s")},
}

REQUEST = {
    "src": (Str(), REQUIRED),
    "dst": (Str(), REQUIRED),
    "pairs_wanted": (Int(1), 1),
    "F_min": (Float(0.5, 1, open_min=True), 0.9),
}

TOPOLOGY = {
    "nodes": (Records(NODE, shorthand=lambda x: {"id": str(x)}), []),
    "links": (Records(TOPO_LINK), []),
}

SECTIONS = {
    "state": {
        "initial": (Str(), "0"),
        "gates": (List(Str()), []),
        "measure": (List(Str()), []),
        "shots": (Int(1), 1),
    },
    "chsh": {
        "state": (Str(BELL), "PsiPlus"),
        "signs": (Optional(List(Int(-1, 1))), None),
        "rounds": (Int(0), 100000),
        "game_strategy": (Optional(Str(("always_zero", "random", "echo_inputs", "quantum"))), None),
    },
    "teleport": {
        "input": (Str(), "+"),
        "resource": (Str(BELL), "PhiPlus"),
        "trials": (Int(1), 1000),
        "message_latency_s": (Float(0), 0.0),
        "resource_noise": (Optional(Section(CHANNEL)), None),
    },
    "bb84": {
        "n": (Int(1), 1000),
        "eve_mode": (Str(("absent", "intercept_resend", "basis_informed")), "absent"),
        "eve_fraction": (Float(0, 1), 1.0),
        "test_fraction": (Float(0, 1, open_min=True), 0.5),
        "n_test": (Optional(Int(0)), None),
        "abort_mismatch_fraction": (Optional(Float(0, 1)), None),
        "alice_bits": (Optional(Str()), None),
        "alice_bases": (Optional(Str()), None),
        "bob_bases": (Optional(Str()), None),
        "channel": (Optional(Section(CHANNEL)), None),
    },
    "e91": {
        "n_rounds": (Int(1), 100000),
        "source": (Str(BELL), "PsiPlus"),
        "channel": (Optional(Section(CHANNEL)), None),
    },
    "swap": {
        "fidelity_ab": (Float(0, 1), 1.0),
        "fidelity_bc": (Float(0, 1), 1.0),
        "trials": (Int(1), 1000),
        "outcome": (Optional(Str(BELL)), None),
    },
    "purify": {
        "fidelity": (Float(0, 1), 0.8),
        "trials": (Int(1), 10000),
        "rounds": (Int(0), 3),
    },
    "link": {
        **LINK_FIELDS,
        "max_attempts": (Optional(Int(1)), 100000),
        "cost_mode": (Str(("analytic", "monte_carlo")), "analytic"),
        "trials": (Int(1), 100000),
        "traces": (Bool(), True),
    },
    "route": {
        "topology": (Section(TOPOLOGY), {}),
        "request": (Section(REQUEST), REQUIRED),
    },
    "net": {
        "topology": (Section(TOPOLOGY), {}),
        "requests": (Records(REQUEST), []),
        "mode": (Str(("end_to_end", "multiplex")), "end_to_end"),
        "scheme": (Str(("round_robin_td", "greedy_fcfs")), "round_robin_td"),
        "horizon_s": (Float(0, open_min=True), 1.0),
        "order": (Str(("sequential", "balanced")), "sequential"),
    },
    "optics": {
        "op": (Str(("dispersion", "snell", "na", "laser", "db", "poisson", "interference")), "dispersion"),
        "nf": (Float(1), 1.5),
        "nc": (Float(1), 1.489),
        "ni": (Float(1), 1.0),
        "nr": (Float(1), 1.0),
        "theta_deg": (Float(0, 90), 0.0),
        "G": (Float(0, open_min=True), 1.0),
        "N0": (Float(0), 2.0),
        "k": (Float(0, open_min=True), 1.0),
        "alpha_l": (Float(0, open_min=True), 1.0),
        "p_out": (Optional(Float(0, open_min=True)), None),
        "p_in": (Float(0, open_min=True), 1.0),
        "db": (Optional(Float(0)), None),
        "mean": (Float(0), 0.1),
        "kmax": (Int(0), 2),
        "A1": (Float(0), 1.0),
        "A2": (Float(0), 1.0),
        "phi1": (Float(), 0.0),
        "phi2": (Float(), 0.0),
        "omega1": (Float(), 1.0),
        "omega2": (Float(), 1.0),
        "k1": (Float(), 1.0),
        "k2": (Float(), 1.0),
    },
    "reproduce": {},
}


def normalize(command: str, raw: dict, lines: dict | None = None) -> dict:
    """Effective config for ``command``: seed, output block and the command section."""
    lines = lines or {}
    allowed = {"seed", "output", "schema_version", command}
    try:
        for key in raw:
            if key not in allowed:
                if key in SECTIONS:
                    raise ConfigFieldError(key, f"section does not apply to '{command}'")
                raise ConfigFieldError(key, "unknown key")
        out = {"schema_version": SCHEMA_VERSION}
        ver = raw.get("schema_version", SCHEMA_VERSION)
        if ver != SCHEMA_VERSION:
            raise ConfigFieldError("schema_version", f"unsupported version {ver!r}")
        seed = raw.get("seed", 0)
        out["seed"] = None if seed is None else _num(seed, "seed", int, 0, 2**64 - 1)
        out["output"] = normalize_section(raw.get("output"), OUTPUT, "output")
        out[command] = normalize_section(raw.get(command), SECTIONS[command], command)
    except ConfigFieldError as exc:
        if exc.line is None:
            field = exc.field
            while field and field not in lines:
                field = field.rpartition(".")[0].rpartition("[")[0] if "[" in field.rpartition(".")[2] else field.rpartition(".")[0]
            if field in lines:
                raise ConfigFieldError(exc.field, str(exc).split(": ", 1)[1], lines[field]) from None
        raise
    return out


def to_jsonable(obj):
    """Infinity becomes the string "inf" so JSON output stays standard."""
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj
