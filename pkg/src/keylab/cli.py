"""Command-line front end.

Every subcommand builds a :class:`Report` (JSON payload, CSV rows, text and
optional figures) and writes it in the requested format.  Defaults can be
set in a ``key = value`` file named by the ``KEYLAB_CONFIG`` environment
variable; command-line flags override the file.

Exit codes: 0 success or match, 1 usage error, 2 experiment mismatch.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .adversary import (
    MIN_TRIALS,
    TABLE3_CONFIG,
    INDEPENDENCE_CONFIG,
    TWO_PHASE_CONFIG,
    class_relation_suite,
    independence_suite,
    initial_keys_for,
    primitive_bounds,
    kdc_compromise,
    mac_exhaustion_demo,
    RUNNERS,
    eve_output,
    plan_interference,
    table3_matrix,
    two_phase_attack,
)
from .core import AdversarySpec, BitString, ProtocolClassId, ProtocolConfig, draw_seed, seeded_rng
from .metrics import (
    DISTINGUISHERS,
    HEADER,
    HeaderRecognizer,
    attribution_check,
    distinguisher_game,
    encrypt_application,
    ideal_system,
    real_system,
)

CONFIG_ENV = "KEYLAB_CONFIG"
EXIT_OK, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2

#: command-line spelling -> ProtocolConfig field
CONFIG_FLAGS = {
    "n": "n",
    "ell": "ell",
    "noise": "noise_flip_prob",
    "qber_threshold": "qber_abort_threshold",
    "mac_pads": "mac_pads",
    "mac_tag_bits": "mac_tag_bits",
    "lamport_pool": "lamport_pool",
    "owf_mode": "owf_mode",
    "gm_modulus_bits": "gm_modulus_bits",
}

#: non-config keys the file may set
FILE_KEYS = {"seed": int, "trials": int, "format": str}

EVE_SPECS = {
    "none": "p,p",
    "intercept-resend": "p,a",
    "tamper": "a,p",
    "mitm": "a,a",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class Report:
    payload: dict[str, Any]
    columns: list[str]
    rows: list[dict[str, Any]]
    text: str
    figures: list[tuple[str, Callable[[Path], Any]]] = field(default_factory=list)
    exit_code: int = EXIT_OK
    csv_text: str | None = None

    def as_json(self) -> str:
        return json.dumps(self.payload, indent=2, sort_keys=True) + "\n"

    def as_csv(self) -> str:
        if self.csv_text is not None:
            return self.csv_text
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _fmt(row.get(k)) for k in self.columns})
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.as_json()
        if fmt == "csv":
            return self.as_csv()
        return self.text.rstrip("\n") + "\n"


def _fmt(v: Any) -> Any:
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return v


def _kv_text(title: str, items: dict[str, Any]) -> str:
    width = max(len(k) for k in items) if items else 0
    lines = [title]
    for k, v in items.items():
        if isinstance(v, float):
            v = f"{v:.6f}"
        lines.append(f"  {k:<{width}}  {v}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Configuration layering
# ---------------------------------------------------------------------------


def _coerce(name: str, value: str) -> Any:
    fields = {f.name: f for f in dataclasses.fields(ProtocolConfig)}
    default = fields[name].default
    if isinstance(default, bool):
        low = value.strip().lower()
        if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
            raise UsageError(f"{name}: expected a boolean, got {value!r}")
        return low in ("1", "true", "yes", "on")
    try:
        return type(default)(value.strip())
    except ValueError:
        raise UsageError(f"{name}: cannot parse {value!r} as {type(default).__name__}") from None


def read_config_file(path: str | os.PathLike | None) -> dict[str, Any]:
    """Parse a ``key = value`` file (``#`` comments, no sections)."""
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{CONFIG_ENV} points to {str(p)!r}, which is not a file")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string("[keylab]\n" + p.read_text())
    except configparser.Error as exc:
        raise UsageError(f"cannot parse {p}: {exc}") from None
    config_fields = {f.name for f in dataclasses.fields(ProtocolConfig)}
    out: dict[str, Any] = {}
    for key, value in parser["keylab"].items():
        key = key.replace("-", "_")
        key = CONFIG_FLAGS.get(key, key)
        if key in FILE_KEYS:
            try:
                out[key] = FILE_KEYS[key](value.strip())
            except ValueError:
                raise UsageError(f"{key}: cannot parse {value!r}") from None
        elif key in config_fields:
            out[key] = _coerce(key, value)
        else:
            raise UsageError(f"unknown key {key!r} in {p}")
    return out


def resolve(args: argparse.Namespace, base: ProtocolConfig) -> tuple[ProtocolConfig, int, dict[str, Any]]:
    """(config, seed, file settings): defaults < config file < flags."""
    file = read_config_file(os.environ.get(CONFIG_ENV))
    changes = {k: v for k, v in file.items() if k not in FILE_KEYS}
    for flag, name in CONFIG_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            changes[name] = v
    for item in args.set or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = CONFIG_FLAGS.get(k.strip().replace("-", "_"), k.strip().replace("-", "_"))
        if k not in {f.name for f in dataclasses.fields(ProtocolConfig)}:
            raise UsageError(f"unknown config key {k!r}")
        changes[k] = _coerce(k, v)
    seed = args.seed if args.seed is not None else file.get("seed", changes.get("rng_seed", base.rng_seed))
    changes["rng_seed"] = seed
    try:
        config = base.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if args.format is None:
        args.format = file.get("format", "text")
    if args.format not in ("text", "csv", "json"):
        raise UsageError(f"unknown format {args.format!r}")
    if getattr(args, "trials", None) is None and "trials" in file:
        args.trials = file["trials"]
    return config, int(seed), file


def _class(name: str) -> ProtocolClassId:
    try:
        return ProtocolClassId.parse(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _header(cmd: str, seed: int, config: ProtocolConfig) -> dict[str, Any]:
    return {"schema": f"keylab.{cmd}/1", "version": __version__, "command": cmd, "seed": seed, "config": config.as_dict()}


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> Report:
    class_id = _class(args.protocol)
    config, seed, _ = resolve(args, ProtocolConfig())
    spec = AdversarySpec.parse(EVE_SPECS[args.eve], revealed=args.reveal_keys)
    rng = seeded_rng(seed)
    keys = initial_keys_for(class_id, config, seeded_rng(draw_seed(rng)))
    plan = plan_interference(class_id, config, spec, keys if args.reveal_keys else None, seeded_rng(draw_seed(rng)))
    run = RUNNERS[class_id](config, rng, initial_keys=keys, spec=spec, eve=plan)
    summary = run.summary()
    guess = eve_output(run)
    s = run.outcome.s_A
    summary["eve"] = args.eve
    summary["adversary"] = spec.label
    summary["keys_revealed"] = spec.initial_keys_revealed
    summary["eve_recovered_key"] = bool(s is not None and guess is not None and guess == s)
    summary["key_equals_initial_key"] = bool(s is not None and keys.k is not None and s == keys.k)
    payload = _header("run", seed, config) | {"run": summary}
    row = {k: summary[k] for k in ("class", "outcome", "abort_reason", "key_bits", "qber", "messages", "eve", "eve_recovered_key", "transcript_sha256")}
    row["seed"] = seed
    text = _kv_text(
        f"{class_id.value} run (seed {seed})",
        {
            "outcome": summary["outcome"] + (f" ({summary['abort_reason']})" if summary["abort_reason"] else ""),
            "key bits": summary["key_bits"],
            "QBER": "n/a" if summary["qber"] is None else f"{summary['qber']:.6f}",
            "classical messages": summary["messages"],
            "eve": f"{args.eve} {spec.label}{' with revealed keys' if spec.initial_keys_revealed else ''}",
            "eve recovered key": summary["eve_recovered_key"],
            "assumptions": ", ".join(summary["assumptions"]) or "none",
            "transcript sha256": summary["transcript_sha256"],
        },
    )
    figures = []
    if summary["stats"]:
        from .figures import session_funnel

        figures.append(("session.png", lambda p: session_funnel(summary["stats"], p, title=f"{class_id.value} session")))
    return Report(payload, list(row), [row], text, figures)


def cmd_table3(args: argparse.Namespace) -> Report:
    config, seed, _ = resolve(args, TABLE3_CONFIG)
    trials = args.trials if args.trials is not None else MIN_TRIALS
    if trials <= 0:
        raise UsageError("--trials must be positive")
    if trials < MIN_TRIALS:
        _warn(f"{trials} trials per cell is underpowered (< {MIN_TRIALS}); a match is not guaranteed")
    start = time.perf_counter()
    result = table3_matrix(trials, seeded_rng(seed), config=config, include_ske_row=args.include_ske_row,
                           include_control=args.include_control, seed=seed)
    print(f"table3: {time.perf_counter() - start:.1f} s", file=sys.stderr)
    payload = _header("table3", seed, config) | result.as_dict() | {"underpowered": trials < MIN_TRIALS}
    payload["schema"] = "keylab.table3/1"
    text = result.to_text()
    if trials < MIN_TRIALS:
        text += "\nwarning: underpowered run"
    from .figures import table3_heatmap

    return Report(
        payload, [], [], text, [("table3.png", lambda p: table3_heatmap(result, p))],
        EXIT_OK if result.match else EXIT_MISMATCH, csv_text=result.to_csv(),
    )


def cmd_advantage(args: argparse.Namespace) -> Report:
    class_id = _class(args.real)
    config, seed, _ = resolve(args, TABLE3_CONFIG)
    trials = args.trials if args.trials is not None else MIN_TRIALS
    if trials <= 0:
        raise UsageError("--trials must be positive")
    if trials < MIN_TRIALS:
        _warn(f"{trials} trials is underpowered (< {MIN_TRIALS})")
    names = args.distinguisher or list(DISTINGUISHERS)
    unknown = [n for n in names if n not in DISTINGUISHERS]
    if unknown:
        raise UsageError(f"unknown distinguisher(s) {unknown}; choose from {sorted(DISTINGUISHERS)}")
    spec = AdversarySpec.parse(args.adversary, revealed=args.reveal_keys)
    real = real_system(RUNNERS[class_id], config, spec)
    if args.ideal_vs_ideal:
        real = ideal_system(real)
        ideal = ideal_system(real_system(RUNNERS[class_id], config, spec))
    else:
        ideal = None
    results = distinguisher_game(real, ideal, names, trials, seeded_rng(seed))
    rows = [r.as_dict() for r in results.values()]
    payload = _header("advantage", seed, config) | {
        "real": class_id.value,
        "adversary": spec.label,
        "keys_revealed": spec.initial_keys_revealed,
        "ideal_vs_ideal": args.ideal_vs_ideal,
        "trials": trials,
        "underpowered": trials < MIN_TRIALS,
        "max_advantage": round(max(r.advantage_estimate for r in results.values()), 6),
        "results": rows,
    }
    title = f"{'ideal vs ideal' if args.ideal_vs_ideal else class_id.value} {spec.label}" + (" revealed keys" if args.reveal_keys else "")
    lines = [f"Distinguishing advantage: {title}, {trials} trials, seed {seed}",
             f"  {'distinguisher':<26}{'advantage':>10}{'ci_low':>10}{'ci_high':>10}"]
    for r in rows:
        lines.append(f"  {r['distinguisher']:<26}{r['advantage']:>10.4f}{r['ci_low']:>10.4f}{r['ci_high']:>10.4f}")
    from .figures import advantage_bars

    cols = ["distinguisher", "advantage", "ci_low", "ci_high", "p_real", "p_ideal", "trials"]
    return Report(payload, cols, rows, "\n".join(lines), [("advantage.png", lambda p: advantage_bars(results, p, title=title))])


def cmd_attribution(args: argparse.Namespace) -> Report:
    class_id = _class(args.protocol)
    config, seed, _ = resolve(args, ProtocolConfig())
    rng = seeded_rng(seed)
    run = RUNNERS[class_id](config, rng)
    s = run.outcome.secret_key
    if s is None:
        raise UsageError(f"the {class_id.value} run aborted ({run.outcome.reason}); nothing to attribute")
    plaintext = HEADER + BitString.from_bytes(args.message.encode())
    if args.cipher == "otp" and len(plaintext) > len(s):
        raise UsageError(f"a one-time pad needs n >= {len(plaintext)} for this message")
    ciphertext = encrypt_application(s, plaintext, args.cipher)
    knowledge = [k.strip() for k in args.knowledge.split(",") if k.strip()]
    if args.broken_trapdoor:
        knowledge.append("broken_trapdoor")
    try:
        verdict = attribution_check(run, knowledge, HeaderRecognizer(args.cipher), ciphertext)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    d = verdict.as_dict()
    payload = _header("attribution", seed, config) | {"protocol": class_id.value, "cipher": args.cipher, "verdict": d}
    row = {"protocol": class_id.value, "cipher": args.cipher, **{k: d[k] for k in ("label", "attributable", "party_attributable", "provably_party_attributable")}}
    text = _kv_text(
        f"Attribution of the {class_id.value} key used with {args.cipher} (seed {seed})",
        {"verdict": d["label"], "attributable": d["attributable"], "party attributable": d["party_attributable"],
         "provably party attributable": d["provably_party_attributable"], "method": d["method"],
         "knowledge": ",".join(d["knowledge"])},
    )
    return Report(payload, list(row), [row], text)


def cmd_kdc(args: argparse.Namespace) -> Report:
    config, seed, _ = resolve(args, TABLE3_CONFIG)
    trials = args.trials if args.trials is not None else MIN_TRIALS
    if trials <= 0:
        raise UsageError("--trials must be positive")
    if trials < MIN_TRIALS:
        _warn(f"{trials} trials is underpowered (< {MIN_TRIALS})")
    result = kdc_compromise(args.compromise, trials, seeded_rng(seed), config)
    d = result.as_dict()
    if args.compromise == "after":
        expected = result.secure and d["session_key_recovered"] == trials
    else:
        expected = d["mitm_successes"] == trials - d["aborts"] and d["mitm_successes"] > 0
    payload = _header("kdc", seed, config) | d | {"expected_outcome": expected, "underpowered": trials < MIN_TRIALS}
    payload["schema"] = "keylab.kdc/1"
    text = _kv_text(f"KDC compromise {args.compromise} the session ({trials} trials, seed {seed})",
                    {k: v for k, v in d.items() if k != "schema"} | {"expected outcome": expected})
    from .figures import rate_bars

    fig = ("kdc.png", lambda p: rate_bars(["session key", "QKE output"],
                                           [d["session_key_recovered"] / trials, result.recognition_rate],
                                           [(d["session_key_recovered"] / trials,) * 2, result.confidence], p,
                                           title=f"KDC compromise {args.compromise}"))
    return Report(payload, [k for k in d if k != "schema"], [d], text, [fig], EXIT_OK if expected else EXIT_MISMATCH)


def cmd_two_phase(args: argparse.Namespace) -> Report:
    config, seed, _ = resolve(args, TWO_PHASE_CONFIG)
    if args.sessions < 1:
        raise UsageError("--sessions must be at least 1")
    if args.break_owf_after is not None and args.break_owf_during is not None:
        raise UsageError("choose one of --break-owf-after and --break-owf-during")
    if args.break_owf_during is not None:
        if args.break_owf_during != 1:
            raise UsageError("only session 1 is signature-authenticated; --break-owf-during must be 1")
        mode = "during"
    elif args.break_owf_after is not None:
        if not 1 <= args.break_owf_after <= args.sessions:
            raise UsageError("--break-owf-after must name a session of the chain")
        mode = "after"
    else:
        mode = "none"
    if mode != "none" and config.owf_mode != "toy":
        raise UsageError("breaking the one-way function needs owf_mode=toy")
    trials = args.trials if args.trials is not None else 200
    if trials <= 0:
        raise UsageError("--trials must be positive")
    result = two_phase_attack(args.sessions, mode, trials, seeded_rng(seed), config)
    d = result.as_dict()
    expected = result.keys_private if mode != "during" else result.chains_compromised == trials
    payload = _header("two_phase", seed, config) | d | {"break_owf_session": args.break_owf_after or args.break_owf_during,
                                                       "expected_outcome": expected}
    payload["schema"] = "keylab.two_phase/1"
    text = _kv_text(f"Two-phase chain, {args.sessions} sessions, OWF broken {mode} ({trials} trials, seed {seed})",
                    {k: v for k, v in d.items() if k != "schema"} | {"expected outcome": expected})
    from .figures import rate_bars

    fig = ("two_phase.png", lambda p: rate_bars([f"OWF broken {mode}"], [result.recognition_rate], [result.confidence], p,
                                                title=f"Two-phase chain ({args.sessions} sessions)"))
    return Report(payload, [k for k in d if k != "schema"], [d], text, [fig], EXIT_OK if expected else EXIT_MISMATCH)


def cmd_exhaustion(args: argparse.Namespace) -> Report:
    config, seed, _ = resolve(args, TABLE3_CONFIG.replace(mac_pads=4, lamport_pool=4, lamport_digest_bits=32))
    result = mac_exhaustion_demo(config, seed)
    d = result.as_dict()
    expected = d["mac_reason"] == "auth-key-exhausted" and d["sig_completed"]
    payload = _header("exhaustion", seed, config) | d | {"expected_outcome": expected}
    payload["schema"] = "keylab.exhaustion/1"
    text = _kv_text(f"Authentication-key budget (seed {seed})", {k: v for k, v in d.items() if k != "schema"})
    return Report(payload, [k for k in d if k != "schema"], [d], text, [], EXIT_OK if expected else EXIT_MISMATCH)


def cmd_oracles(args: argparse.Namespace) -> Report:
    config, seed, file_cfg = resolve(args, TABLE3_CONFIG)
    runs = args.runs if args.runs is not None else 200
    trials = args.trials if args.trials is not None else file_cfg.get("trials", MIN_TRIALS)
    if runs <= 0 or trials <= 0:
        raise UsageError("--runs and --trials must be positive")
    result = class_relation_suite(runs, trials, seed, config)
    d = result.as_dict()
    expected = result.relations_hold and result.qke_private
    payload = _header("oracles", seed, config) | d | {"expected_outcome": expected}
    payload["schema"] = "keylab.oracles/1"
    rows = [
        {
            "class": name,
            "checked": result.checked[name],
            "successes": result.successes[name],
            "mismatches": result.mismatches[name],
            "recognition": result.recognition.get(name),
        }
        for name in result.checked
    ]
    lines = [f"Class relations as recomputation oracles ({runs} runs per class, seed {seed})"]
    lines.append(f"{'class':10} {'checked':>8} {'successes':>10}  mismatches")
    for r in rows:
        lines.append(f"{r['class']:10} {r['checked']:>8} {r['successes']:>10}  {', '.join(r['mismatches']) or 'none'}")
    for name, rate in result.recognition.items():
        lo, hi = result.recognition_ci[name]
        lines.append(f"{name} recognition by a fully informed analyst: {rate:.4f} [{lo:.4f}, {hi:.4f}] over {trials} runs")
    lines.append(f"expected outcome: {expected}")
    from .figures import rate_bars

    names = list(result.recognition)
    fig = ("oracles.png", lambda p: rate_bars(names, [result.recognition[n] for n in names],
                                              [result.recognition_ci[n] for n in names], p,
                                              title="Recognition of quantum-established keys"))
    return Report(payload, ["class", "checked", "successes", "mismatches", "recognition"], rows, "\n".join(lines),
                  [fig], EXIT_OK if expected else EXIT_MISMATCH)


def cmd_independence(args: argparse.Namespace) -> Report:
    config, seed, file_cfg = resolve(args, INDEPENDENCE_CONFIG)
    runs = args.runs if args.runs is not None else file_cfg.get("trials", MIN_TRIALS)
    if runs <= 0 or args.permutations <= 0:
        raise UsageError("--runs and --permutations must be positive")
    if runs < MIN_TRIALS:
        _warn(f"{runs} runs is underpowered (< {MIN_TRIALS})")
    runner = RUNNERS[_class(args.protocol)]
    result = independence_suite(runs, args.permutations, args.alpha, seed, config, runner)
    d = result.as_dict()
    payload = _header("independence", seed, config) | d | {"protocol": args.protocol, "expected_outcome": result.calibrated}
    payload["schema"] = "keylab.independence/1"
    text = _kv_text(f"Key/transcript independence for {args.protocol} ({runs} runs, seed {seed})",
                    {k: v for k, v in d.items() if k != "schema"})
    from .figures import pvalue_histogram

    fig = ("independence.png", lambda p: pvalue_histogram(result.p_values, p, alpha=args.alpha,
                                                          title=f"Per-bit permutation p-values ({args.protocol})"))
    return Report(payload, [k for k in d if k != "schema"], [d], text, [fig],
                  EXIT_OK if result.calibrated else EXIT_MISMATCH)


def cmd_primitives(args: argparse.Namespace) -> Report:
    config, seed, _ = resolve(args, ProtocolConfig())
    result = primitive_bounds(seeded_rng(seed), mac_trials=args.mac_trials, lamport_trials=args.lamport_trials)
    d = result.as_dict()
    payload = _header("primitives", seed, config) | d
    payload["schema"] = "keylab.primitives/1"
    text = _kv_text(f"Primitive bounds (seed {seed})", {k: v for k, v in d.items() if k != "schema"})
    return Report(payload, [k for k in d if k != "schema"], [d], text, [], EXIT_OK if result.holds else EXIT_MISMATCH)


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=int, help="master seed (default 0 or the config file's seed)")
    g.add_argument("--format", choices=("text", "csv", "json"), help="report format (default text)")
    g.add_argument("--out", type=Path, help="write the report here instead of stdout")
    g.add_argument("--figures", type=Path, metavar="DIR", help="render figures (PNG) into DIR")
    g.add_argument("--report", type=Path, metavar="DIR", help="write report.txt, report.csv, report.json and figures into DIR")
    c = p.add_argument_group("protocol configuration")
    c.add_argument("--n", type=int, help="secret key length in bits")
    c.add_argument("--ell", type=int, help="initial key length in bits")
    c.add_argument("--noise", type=float, help="channel bit-flip probability")
    c.add_argument("--qber-threshold", type=float, help="QBER abort threshold")
    c.add_argument("--mac-pads", type=int, help="one-time pads per MAC key")
    c.add_argument("--mac-tag-bits", type=int, choices=(8, 16, 32), help="MAC tag length")
    c.add_argument("--lamport-pool", type=int, help="preloaded Lamport keypairs per party")
    c.add_argument("--owf-mode", choices=("strong", "toy"), help="one-way function mode")
    c.add_argument("--gm-modulus-bits", type=int, help="toy public-key modulus size")
    c.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any protocol configuration field")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="keylab", description="Key establishment simulation lab.")
    parser.add_argument("--version", action="version", version=f"keylab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    classes = [c.value.lower().replace("_", "-") for c in ProtocolClassId]

    p = sub.add_parser("run", parents=[common], help="run one protocol session and summarise it")
    p.add_argument("protocol", help=f"protocol class: {', '.join(classes)}")
    p.add_argument("--eve", choices=sorted(EVE_SPECS), default="none", help="adversary strategy")
    p.add_argument("--reveal-keys", action="store_true", help="give Eve the initial keys")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table3", parents=[common], help="reproduce the key-reveal security matrix")
    p.add_argument("--trials", type=int, help=f"trials per cell (default {MIN_TRIALS})")
    p.add_argument("--include-ske-row", action="store_true", help="append the toy SKE row")
    p.add_argument("--include-control", action="store_true", help="append a QKE row with the keys kept secret")
    p.set_defaults(func=cmd_table3)

    p = sub.add_parser("advantage", parents=[common], help="distinguisher game against the ideal system")
    p.add_argument("--real", required=True, help="protocol class of the real system")
    p.add_argument("--adversary", default="p,p", help="Eve's modes as 'classical,quantum' (default p,p)")
    p.add_argument("--reveal-keys", action="store_true", help="reveal the initial keys to the distinguisher")
    p.add_argument("--distinguisher", action="append", help=f"registered distinguisher (repeatable): {', '.join(DISTINGUISHERS)}")
    p.add_argument("--ideal-vs-ideal", action="store_true", help="calibration: ideal system against itself")
    p.add_argument("--trials", type=int, help=f"trials (default {MIN_TRIALS})")
    p.set_defaults(func=cmd_advantage)

    p = sub.add_parser("attribution", parents=[common], help="can the key be linked to the transcript?")
    p.add_argument("--protocol", required=True, help="protocol class")
    p.add_argument("--cipher", choices=("otp", "short"), default="otp", help="how the key is used")
    p.add_argument("--knowledge", default="pi,c", help="comma-separated analyst knowledge (pi,k,c,r_A,r_B)")
    p.add_argument("--broken-trapdoor", action="store_true", help="the analyst can break the toy trapdoor")
    p.add_argument("--message", default="attack at dawn", help="application plaintext after the known header")
    p.set_defaults(func=cmd_attribution)

    p = sub.add_parser("kdc", parents=[common], help="key-distribution-centre compromise experiment")
    p.add_argument("--compromise", choices=("after", "before"), default="after")
    p.add_argument("--trials", type=int, help=f"trials (default {MIN_TRIALS})")
    p.set_defaults(func=cmd_kdc)

    p = sub.add_parser("two-phase", parents=[common], help="signature-then-MAC session chain experiment")
    p.add_argument("--sessions", type=int, default=3)
    p.add_argument("--break-owf-after", type=int, metavar="I", help="Eve inverts the OWF after session I")
    p.add_argument("--break-owf-during", type=int, metavar="I", help="Eve inverts the OWF before session I and attacks it")
    p.add_argument("--trials", type=int, help="independent chains (default 200)")
    p.set_defaults(func=cmd_two_phase)

    p = sub.add_parser("exhaustion", parents=[common], help="MAC pad budget against refillable signatures")
    p.set_defaults(func=cmd_exhaustion)

    p = sub.add_parser("oracles", parents=[common], help="class relations checked by recomputation oracles")
    p.add_argument("--runs", type=int, help="honest runs per class (default 200)")
    p.add_argument("--trials", type=int, help=f"recognition runs per quantum class (default {MIN_TRIALS})")
    p.set_defaults(func=cmd_oracles)

    p = sub.add_parser("independence", parents=[common], help="permutation MI test between key bits and transcripts")
    p.add_argument("--protocol", default="mac-qke", help="protocol class (default mac-qke)")
    p.add_argument("--runs", type=int, help=f"completed runs (default {MIN_TRIALS})")
    p.add_argument("--permutations", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("primitives", parents=[common], help="empirical forgery and breaking rates of the primitives")
    p.add_argument("--mac-trials", type=int, default=100_000)
    p.add_argument("--lamport-trials", type=int, default=10_000)
    p.set_defaults(func=cmd_primitives)
    return parser


def emit(report: Report, args: argparse.Namespace) -> None:
    out = report.render(args.format)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(out)
    else:
        sys.stdout.write(out)
    if args.report:
        args.report.mkdir(parents=True, exist_ok=True)
        (args.report / "report.txt").write_text(report.render("text"))
        (args.report / "report.csv").write_text(report.render("csv"))
        (args.report / "report.json").write_text(report.render("json"))
    for target in (args.figures, args.report):
        if target:
            for name, draw in report.figures:
                draw(target / name)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        report = args.func(args)
    except UsageError as exc:
        print(f"keylab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    emit(report, args)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
