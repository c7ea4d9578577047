"""Command-line front door.

Every subcommand reads plain-text circuit or Hamiltonian files, runs one
operation end to end, and emits a deterministic report: JSON everywhere,
CSV only for the trotter-bench table.  Floats are printed with 17
significant digits so identical configurations produce byte-identical
output.  Randomized subcommands derive one substream per sample from
(seed, sample index), so reports do not depend on batching.

Exit codes: 0 success, 1 parse or validation failure, 2 dimension or size
failure, 3 oracle failure.  Failures print a machine-readable JSON object
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .averages import luae_estimate, luae_unguided
from .circuits import (
    MAX_DENSE_QUBITS,
    BasisLabel,
    circuit_unitary,
    parse_circuit,
)
from .distributions import empirical_feasibility, exact_distribution
from .errors import (
    DimensionMismatch,
    EigensampleError,
    OracleFailure,
    ParseError,
    TermTooLarge,
    TooLarge,
)
from .hamiltonians import (
    dense_hamiltonian,
    parse_hamiltonian,
    prepare_lhes,
    scale_hamiltonian,
    serialize_hamiltonian,
    trotter_deviation,
)
from .phase_estimation import SamplingRequest, prepare_pes
from .reductions import (
    LHES_DELTA,
    LUAE_DELTA,
    LUAE_EPSILON,
    PES_DELTA,
    PES_EPSILON,
    build_unary_clock,
    decide_via_lhes,
    decide_via_luae,
    decide_via_pes,
    exact_lhes_oracle,
    exact_luae_oracle,
    exact_pes_oracle,
    mark_circuit,
    quantum_lhes_oracle,
    quantum_luae_oracle,
    quantum_pes_oracle,
    reduction_report,
)
from .seeding import master_rng, substream

EXIT_PARSE = 1
EXIT_SIZE = 2
EXIT_ORACLE = 3

_SIZE_ERRORS = (DimensionMismatch, TooLarge, TermTooLarge)


class UsageError(Exception):
    """Bad flags, unreadable files, malformed auxiliary JSON."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# deterministic JSON / CSV rendering

def render_json(obj) -> str:
    """JSON with floats at 17 significant digits and stable key order."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        inner = ", ".join(
            f"{json.dumps(str(k))}: {render_json(v)}" for k, v in obj.items()
        )
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(render_json(v) for v in obj) + "]"
    raise TypeError(f"cannot render {type(obj).__name__} deterministically")


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def _base_report(seed, epsilon, delta) -> dict:
    return {
        "seed": seed,
        "epsilon": epsilon,
        "delta": delta,
        "tool_version": __version__,
    }


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(report: dict, out: str | None) -> int:
    _emit(render_json(report) + "\n", out)
    return 0


# ---------------------------------------------------------------------------
# input loading

def _read_file(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _detect_kind(text: str) -> str:
    for raw in text.splitlines():
        tokens = raw.split("#", 1)[0].split()
        if tokens and tokens[0] == "term":
            return "hamiltonian"
    return "circuit"


def _load_input(path: str, kind: str):
    text = _read_file(path)
    if kind == "auto":
        kind = _detect_kind(text)
    if kind == "circuit":
        return kind, parse_circuit(text)
    return kind, parse_hamiltonian(text)


def _load_circuit(path: str):
    return parse_circuit(_read_file(path))


def _load_hamiltonian(path: str):
    return parse_hamiltonian(_read_file(path))


def _require_desk_scale(qubit_count: int) -> None:
    if qubit_count > MAX_DENSE_QUBITS:
        raise TooLarge(
            f"dense spectral analysis is capped at {MAX_DENSE_QUBITS} qubits, "
            f"got {qubit_count}"
        )


# ---------------------------------------------------------------------------
# subcommands

def _cmd_check(args) -> int:
    kind, obj = _load_input(args.file, args.kind)
    report = _base_report(args.seed, None, None)
    report["kind"] = kind
    report["qubits"] = obj.qubit_count
    if kind == "circuit":
        report["gates"] = len(obj.gates)
    else:
        report["terms"] = len(obj.terms)
    return _emit_report(report, args.out)


def _cmd_spectrum(args) -> int:
    kind, obj = _load_input(args.file, args.kind)
    b = BasisLabel(args.b)
    _require_desk_scale(obj.qubit_count)
    if kind == "circuit":
        dist = exact_distribution(circuit_unitary(obj), b, "unitary")
    else:
        dist = exact_distribution(dense_hamiltonian(obj), b, "hermitian")
    report = _base_report(args.seed, None, None)
    report["kind"] = kind
    report["b"] = args.b
    report["metric"] = dist.metric
    report["points"] = [{"value": v, "weight": w} for v, w in dist.points]
    return _emit_report(report, args.out)


def _cmd_pes(args) -> int:
    circuit = _load_circuit(args.file)
    req = SamplingRequest(args.epsilon, args.delta, BasisLabel(args.b))
    prep = prepare_pes(circuit, req)
    phis = [
        prep.sample(substream(args.seed, i)).phi for i in range(args.samples)
    ]
    report = _base_report(args.seed, args.epsilon, args.delta)
    report["b"] = args.b
    report["t"] = prep.t
    report["samples"] = phis
    return _emit_report(report, args.out)


def _cmd_lhes(args) -> int:
    h = _load_hamiltonian(args.file)
    req = SamplingRequest(args.epsilon, args.delta, BasisLabel(args.b))
    prep = prepare_lhes(h, req)
    values = [
        prep.sample(substream(args.seed, i)).lambda_est
        for i in range(args.samples)
    ]
    report = _base_report(args.seed, args.epsilon, args.delta)
    report["b"] = args.b
    report["lambda_cap"] = prep.lambda_cap
    report["t"] = prep.t
    report["trotter_steps"] = prep.trotter_steps
    report["samples"] = values
    return _emit_report(report, args.out)


def _cmd_luae(args) -> int:
    circuit = _load_circuit(args.file)
    req = SamplingRequest(args.epsilon, args.delta, BasisLabel(args.b))
    est = luae_estimate(circuit, req, substream(args.seed, 0))
    report = _base_report(args.seed, args.epsilon, args.delta)
    report["b"] = args.b
    report["m_samples"] = est.m_samples
    report["lambda_hat"] = {"re": est.lambda_hat.real, "im": est.lambda_hat.imag}
    return _emit_report(report, args.out)


def _cmd_luae_u(args) -> int:
    circuit = _load_circuit(args.file)
    est = luae_unguided(circuit, args.epsilon, args.delta, substream(args.seed, 0))
    report = _base_report(args.seed, args.epsilon, args.delta)
    report["m_samples"] = est.m_samples
    report["estimate"] = {"re": est.lambda_hat.real, "im": est.lambda_hat.imag}
    return _emit_report(report, args.out)


def _cmd_reduce(args) -> int:
    circuit = _load_circuit(args.file)
    marked = mark_circuit(circuit, args.kind)
    unary = build_unary_clock(marked)
    Path(args.out).write_text(serialize_hamiltonian(unary.hamiltonian))
    report = _base_report(args.seed, None, None)
    report.update(reduction_report(marked))
    report["out"] = args.out
    report["hamiltonian_qubits"] = unary.hamiltonian.qubit_count
    report["legal_clock_states"] = list(unary.legal_clock_states)
    _emit(render_json(report) + "\n", None)
    return 0


def _cmd_decide(args) -> int:
    circuit = _load_circuit(args.file)
    x = BasisLabel(args.x)
    rng = master_rng(args.seed)
    exact = args.oracle == "exact"
    if args.route == "lhes":
        factory = exact_lhes_oracle if exact else quantum_lhes_oracle
        accept = decide_via_lhes(circuit, x, factory, rng)
        clock_dim = 2 * len(circuit.gates) + 1
        epsilon, delta = 1.0 / (4.0 * clock_dim), LHES_DELTA
    elif args.route == "pes":
        factory = exact_pes_oracle if exact else quantum_pes_oracle
        accept = decide_via_pes(circuit, x, factory, rng)
        epsilon, delta = PES_EPSILON, PES_DELTA
    else:
        factory = exact_luae_oracle if exact else quantum_luae_oracle
        accept = decide_via_luae(circuit, x, factory, rng)
        epsilon, delta = LUAE_EPSILON, LUAE_DELTA
    report = _base_report(args.seed, epsilon, delta)
    report["route"] = args.route
    report["oracle"] = args.oracle
    report["x"] = args.x
    report["accept"] = accept
    return _emit_report(report, args.out)


def _cmd_verify(args) -> int:
    kind, obj = _load_input(args.file, args.kind)
    _require_desk_scale(obj.qubit_count)
    try:
        payload = json.loads(_read_file(args.samples_file))
    except json.JSONDecodeError as exc:
        raise UsageError(f"samples file is not valid JSON: {exc}") from exc
    try:
        samples = payload["samples"]
        epsilon = float(payload["epsilon"])
        delta = float(payload["delta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(
            'samples file must hold {"samples": [...], "epsilon": e, "delta": d}'
        ) from exc
    b = BasisLabel(args.b)
    if kind == "circuit":
        target = exact_distribution(circuit_unitary(obj), b, "unitary")
    else:
        target = exact_distribution(dense_hamiltonian(obj), b, "hermitian")
    feasible, slack, flow = empirical_feasibility(samples, target, epsilon, delta)
    report = _base_report(args.seed, epsilon, delta)
    report["b"] = args.b
    report["feasible"] = feasible
    report["slack"] = slack
    report["flow"] = flow
    return _emit_report(report, args.out)


def _cmd_trotter_bench(args) -> int:
    h = _load_hamiltonian(args.file)
    _require_desk_scale(h.qubit_count)
    try:
        step_counts = [int(tok) for tok in args.m.split(",")]
    except ValueError as exc:
        raise UsageError(f"--m takes comma-separated integers: {exc}") from exc
    if not step_counts or any(m < 1 for m in step_counts):
        raise UsageError("--m values must be positive")
    scale = scale_hamiltonian(h)
    deviations = {m: trotter_deviation(scale, m) for m in step_counts}
    lines = ["m,deviation,ratio"]
    for m in step_counts:
        dev = deviations[m]
        if 2 * m in deviations and deviations[2 * m] > 0:
            ratio = _format_float(dev / deviations[2 * m])
        else:
            ratio = ""
        lines.append(f"{m},{_format_float(dev)},{ratio}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# argument wiring

def _add_common(p, *, epsilon=False, delta=False, b=False, samples=False):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    if epsilon:
        p.add_argument("--epsilon", type=float, required=True, help="precision")
    if delta:
        p.add_argument("--delta", type=float, required=True, help="failure budget")
    if b:
        p.add_argument("--b", required=True, help="reference basis bitstring")
    if samples:
        p.add_argument(
            "--samples", type=int, default=100, help="number of draws (default 100)"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eigensample", description=__doc__.split("\n")[0])
    parser.add_argument(
        "--version", action="version", version=f"eigensample {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a circuit or Hamiltonian file")
    p.add_argument("file")
    p.add_argument("--kind", choices=["auto", "circuit", "hamiltonian"], default="auto")
    _add_common(p)
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("spectrum", help="exact spectral distribution seen from b")
    p.add_argument("file")
    p.add_argument("--kind", choices=["auto", "circuit", "hamiltonian"], default="auto")
    _add_common(p, b=True)
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("pes", help="sample eigenphases of a circuit")
    p.add_argument("file")
    _add_common(p, epsilon=True, delta=True, b=True, samples=True)
    p.set_defaults(handler=_cmd_pes)

    p = sub.add_parser("lhes", help="sample eigenvalues of a local Hamiltonian")
    p.add_argument("file")
    _add_common(p, epsilon=True, delta=True, b=True, samples=True)
    p.set_defaults(handler=_cmd_lhes)

    p = sub.add_parser("luae", help="estimate the average eigenvalue <b|U|b>")
    p.add_argument("file")
    _add_common(p, epsilon=True, delta=True, b=True)
    p.set_defaults(handler=_cmd_luae)

    p = sub.add_parser("luae-u", help="estimate tr(U)/2^n with uniform random b")
    p.add_argument("file")
    _add_common(p, epsilon=True, delta=True)
    p.set_defaults(handler=_cmd_luae_u)

    p = sub.add_parser("reduce", help="mark a circuit and emit its unary clock Hamiltonian")
    p.add_argument("file")
    p.add_argument("--kind", choices=["lhes-copy", "pe-reflect"], default="lhes-copy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="path for the Hamiltonian text file")
    p.set_defaults(handler=_cmd_reduce)

    p = sub.add_parser("decide", help="run a decider end to end on input x")
    p.add_argument("file")
    p.add_argument("--x", required=True, help="input bitstring for the base circuit")
    p.add_argument("--route", choices=["lhes", "pes", "luae"], required=True)
    p.add_argument("--oracle", choices=["exact", "quantum"], default="exact")
    _add_common(p)
    p.set_defaults(handler=_cmd_decide)

    p = sub.add_parser("verify", help="check sampled values against the exact spectrum")
    p.add_argument("file")
    p.add_argument("samples_file", help='JSON {"samples": [...], "epsilon": e, "delta": d}')
    p.add_argument("--kind", choices=["auto", "circuit", "hamiltonian"], default="auto")
    _add_common(p, b=True)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("trotter-bench", help="Trotter deviation vs step count (CSV)")
    p.add_argument("file")
    p.add_argument("--m", default="64,128,256", help="comma-separated step counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_trotter_bench)

    return parser


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    line = getattr(exc, "line", None)
    if line is not None:
        payload["line"] = line
    sys.stderr.write(render_json(payload) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        return _fail(exc, EXIT_PARSE)
    except OracleFailure as exc:
        return _fail(exc, EXIT_ORACLE)
    except _SIZE_ERRORS as exc:
        return _fail(exc, EXIT_SIZE)
    except (EigensampleError, ValueError) as exc:
        return _fail(exc, EXIT_PARSE)


if __name__ == "__main__":
    raise SystemExit(main())
