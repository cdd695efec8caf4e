"""Command-line front end: ``qocpulse optimize|bench|export|report``."""

import argparse
import csv
import io as _io
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__, bench
from .errors import InsufficientLengths, QocError, UsageError, ValidationError
from .io import (
    default_channel_map,
    load_pulse,
    load_unitary,
    parse_channel_map,
    pulse_to_schedule,
    read_json,
    save_pulse,
    schedule_to_pulse,
    spec_hash,
    write_json,
)
from .model import build_cr_two_qubit, build_single_qubit, load_device_spec
from .optimize import OptConfig, multi_start
from .propagate import SUPPORTED_GATES, gate_target
from .pulse import SHAPES, UNIPOLAR_BOUNDS, ShapeSpec, make_initial

log = logging.getLogger("qocpulse")


@dataclass
class RunManifest:
    """Everything that determines a run's results; written next to its outputs.

    The output directory is where results go, not what they are, so it is
    left out of the written manifest.
    """

    command: str
    spec: str = None
    gate: str = "X"
    slots: int = None
    duration_ns: float = None
    shape: str = None
    amplitude: float = 0.1
    sigma_ns: float = None
    beta: float = 0.2
    bounds: str = "bipolar"
    controls: list = field(default_factory=lambda: ["X", "Y"])
    qubits: list = field(default_factory=lambda: [0, 1])
    rabi_mhz: float = 50.0
    cr_frame: str = "cr"
    cr_grouping: str = "separate"
    method: str = "lbfgsb"
    max_iters: int = 200
    fid_err_target: float = 1e-10
    restarts: int = 0
    open_system: bool = False
    seed: int = 0
    jobs: int = 1
    out: str = "out"
    # bench
    pulse: str = None
    clifford_depol: float = 1e-3
    interleaved_depol: float = None
    lengths: list = field(default_factory=lambda: [1, 10, 25, 50, 100, 150])
    n_seeds: int = 30
    shots: int = None

    def to_dict(self):
        doc = asdict(self)
        doc.pop("out")
        return doc

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown manifest field(s): {sorted(unknown)}")
        return cls(**doc)


def resolve_target(name):
    if name and name.upper() in SUPPORTED_GATES:
        return gate_target(name)
    if name and Path(name).is_file():
        return load_unitary(name)
    raise UsageError(
        f"unknown gate {name!r}; supported gates: {', '.join(SUPPORTED_GATES)} "
        "or a path to a unitary file (.json or .npy)")


def build_model(spec, target, m, open_system=None):
    open_system = m.open_system if open_system is None else open_system
    if target.dim == 2:
        return build_single_qubit(spec, qubit=m.qubits[0], controls=tuple(m.controls),
                                  open_system=open_system, rabi_mhz=m.rabi_mhz)
    if target.dim == 4:
        return build_cr_two_qubit(spec, control_qubit=m.qubits[0], target_qubit=m.qubits[1],
                                  open_system=open_system, rabi_mhz=m.rabi_mhz,
                                  frame=m.cr_frame, grouping=m.cr_grouping)
    raise UsageError(f"targets must act on one or two qubits, got dimension {target.dim}")


def resolve_slots(m, dt):
    if m.slots is not None and m.duration_ns is not None:
        raise UsageError("give either --slots or --duration-ns, not both")
    if m.slots is not None:
        n = int(m.slots)
    elif m.duration_ns is not None:
        n = int(round(m.duration_ns / dt))
    else:
        raise UsageError("a pulse length is required: --slots N or --duration-ns X")
    if n < 1:
        raise UsageError(f"pulse length resolves to {n} slots; need at least 1")
    return n


def _schedule_qubits(target, m):
    return (m.qubits[0],) if target.dim == 2 else tuple(m.qubits[:2])


def _require_spec(m):
    if not m.spec:
        raise UsageError("--spec PATH is required")
    return load_device_spec(m.spec)


def cmd_optimize(m):
    spec = _require_spec(m)
    target = resolve_target(m.gate)
    model = build_model(spec, target, m)
    n = resolve_slots(m, spec.dt)
    bounds = {lab: UNIPOLAR_BOUNDS for lab in model.labels} if m.bounds == "unipolar" else {}
    kind = m.shape or ("drag" if target.dim == 2 else "gaussian_square")
    shape = ShapeSpec(kind=kind, amplitude=m.amplitude, sigma=m.sigma_ns, beta=m.beta,
                      seed=m.seed)
    starts = [make_initial(shape, n, spec.dt, model.labels, bounds)]
    for i in range(m.restarts):
        rand = ShapeSpec(kind="random", amplitude=m.amplitude, seed=m.seed + 1 + i)
        starts.append(make_initial(rand, n, spec.dt, model.labels, bounds))
    cfg = OptConfig(method=m.method, max_iters=m.max_iters, fid_err_target=m.fid_err_target,
                    seed=m.seed)
    result = multi_start(model, starts, target, cfg, jobs=m.jobs)
    log.info("optimize: %s in %.2f s", result.termination, result.wall_time)

    out = Path(m.out)
    out.mkdir(parents=True, exist_ok=True)
    mapping = default_channel_map(result.pulse.labels, _schedule_qubits(target, m))
    schedule = pulse_to_schedule(result.pulse, mapping, gate=target.name,
                                 spec_digest=spec_hash(spec))
    summary = result.summary()
    summary.update({"gate": target.name, "open_system": m.open_system, "restarts": m.restarts})
    save_pulse(out / "pulse.json", result.pulse)
    write_json(out / "schedule.json", schedule)
    write_json(out / "summary.json", summary)
    write_json(out / "manifest.json", m.to_dict())
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "infidelity"])
    for i, f in enumerate(result.infidelity_trace):
        writer.writerow([i, repr(float(f))])
    (out / "trace.csv").write_text(buf.getvalue())
    print(f"{target.name}: infidelity {result.final_infidelity:.3e} "
          f"({result.termination}, {result.n_iters} iterations) -> {out}")
    return result


def cmd_bench(m):
    target = resolve_target(m.gate)
    dim = target.dim
    if len(set(m.lengths)) < 3:
        raise InsufficientLengths(f"need at least 3 distinct lengths, got {m.lengths}")
    per_clifford = bench.depolarizing(m.clifford_depol, dim)
    if m.pulse:
        spec = _require_spec(m)
        model = build_model(spec, target, m)
        pulse = load_pulse(m.pulse)
        residual = bench.channel_from_pulse(model, pulse, target)
        log.info("pulse residual average infidelity %.3e", residual.average_infidelity())
    elif m.interleaved_depol is not None:
        residual = bench.depolarizing(m.interleaved_depol, dim)
    else:
        raise UsageError("bench needs --pulse (with --spec) or --interleaved-depol P")
    report = bench.run_rb(per_clifford, interleaved=(target.unitary, residual),
                          lengths=m.lengths, n_seeds=m.n_seeds, shots=m.shots, seed=m.seed,
                          jobs=m.jobs)
    out = Path(m.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc["gate"] = target.name
    doc["residual_average_infidelity"] = residual.average_infidelity()
    write_json(out / "rb_report.json", doc)
    (out / "rb_curves.csv").write_text(report.to_csv())
    write_json(out / "manifest.json", m.to_dict())
    print(f"alpha = {report.alpha:.6f}, EPC = {report.epc:.3e}, "
          f"alpha_c = {report.alpha_c:.6f}, interleaved error = {report.interleaved_error:.3e}")
    return report


def cmd_export(m, channel_map=None, from_schedule=None):
    out = Path(m.out)
    out.mkdir(parents=True, exist_ok=True)
    if from_schedule:
        doc = read_json(from_schedule)
        if not channel_map:
            raise UsageError("--from-schedule needs --map LABEL=CHAN[:re|im],...")
        pulse = schedule_to_pulse(doc, parse_channel_map(channel_map))
        save_pulse(out / "pulse.json", pulse)
        print(f"imported {len(pulse.labels)} channel(s) -> {out / 'pulse.json'}")
        return pulse
    if not m.pulse:
        raise UsageError("export needs --pulse PATH")
    pulse = load_pulse(m.pulse)
    digest = spec_hash(load_device_spec(m.spec)) if m.spec else ""
    gate = m.gate.upper() if m.gate and m.gate.upper() in SUPPORTED_GATES else (m.gate or "")
    if channel_map:
        mapping = parse_channel_map(channel_map)
    else:
        qubits = (m.qubits[0],) if set(pulse.labels) <= {"X", "Y"} else tuple(m.qubits[:2])
        mapping = default_channel_map(pulse.labels, qubits)
    schedule = pulse_to_schedule(pulse, mapping, gate=gate, spec_digest=digest)
    write_json(out / "schedule.json", schedule)
    print(f"exported channels {[c['name'] for c in schedule['channels']]} -> "
          f"{out / 'schedule.json'}")
    return schedule


def cmd_report(run_dirs, out=None):
    """Collect summaries and RB reports from run directories into one table."""
    rows = []
    for d in run_dirs:
        d = Path(d)
        row = {"run": str(d)}
        if (d / "summary.json").exists():
            s = read_json(d / "summary.json")
            row.update({k: s.get(k) for k in
                        ("gate", "method", "final_infidelity", "termination", "n_slots",
                         "duration_ns")})
        if (d / "rb_report.json").exists():
            r = read_json(d / "rb_report.json")
            row.update({k: r.get(k) for k in
                        ("gate", "alpha", "epc", "alpha_c", "interleaved_error",
                         "interleaved_error_err")})
        if len(row) == 1:
            raise ValidationError(f"{d}: no summary.json or rb_report.json found")
        rows.append(row)
    for row in rows:
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_json(Path(out) / "report.json", {"runs": rows})
    return rows


def _add_common(p):
    p.add_argument("--manifest", help="JSON run manifest; flags given explicitly override it")
    p.add_argument("--spec", help="device-spec JSON file")
    p.add_argument("--gate", help=f"{', '.join(SUPPORTED_GATES)} or a unitary file")
    p.add_argument("--qubits", help="qubit index, or control,target for two-qubit gates")
    p.add_argument("--open-system", action="store_true", default=None,
                   help="include T1/T2 collapse operators")
    p.add_argument("--rabi-mhz", type=float)
    p.add_argument("--controls", help="single-qubit control subset, e.g. X or X,Y")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    p.add_argument("--pulse", help="pulse JSON file")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser():
    parser = argparse.ArgumentParser(prog="qocpulse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"qocpulse {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="optimize a pulse for a target gate")
    _add_common(p)
    length = p.add_mutually_exclusive_group()
    length.add_argument("--slots", type=int)
    length.add_argument("--duration-ns", type=float)
    p.add_argument("--shape", choices=SHAPES)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--sigma-ns", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--bounds", choices=("bipolar", "unipolar"))
    p.add_argument("--method", choices=("lbfgsb", "spsa"))
    p.add_argument("--max-iters", type=int)
    p.add_argument("--fid-err-target", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--cr-frame", choices=("cr", "rotating", "lab"))
    p.add_argument("--cr-grouping", choices=("separate", "shared"))

    p = sub.add_parser("bench", help="standard + interleaved RB of a gate")
    _add_common(p)
    p.add_argument("--clifford-depol", type=float,
                   help="depolarizing probability after every Clifford (default 1e-3)")
    p.add_argument("--interleaved-depol", type=float,
                   help="explicit depolarizing error on the interleaved gate")
    p.add_argument("--lengths", help="comma-separated sequence lengths")
    p.add_argument("--n-seeds", type=int)
    p.add_argument("--shots", type=int, help="binomial shots per sequence (default: exact)")

    p = sub.add_parser("export", help="write a schedule document for a pulse")
    _add_common(p)
    p.add_argument("--map", dest="channel_map", help="LABEL=CHAN[:re|im],...")
    p.add_argument("--from-schedule", help="convert a schedule document back into a pulse")

    p = sub.add_parser("report", help="tabulate results from run directories")
    p.add_argument("runs", nargs="+")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--out")
    return parser


_LIST_FIELDS = {"qubits": int, "controls": str, "lengths": int}


def manifest_from_args(args):
    base = {}
    if getattr(args, "manifest", None):
        base = read_json(args.manifest)
    base["command"] = args.command
    for f in fields(RunManifest):
        if f.name == "command" or not hasattr(args, f.name):
            continue
        val = getattr(args, f.name)
        if val is None:
            continue
        if f.name in _LIST_FIELDS and isinstance(val, str):
            try:
                val = [_LIST_FIELDS[f.name](v) for v in val.split(",") if v.strip()]
            except ValueError:
                raise UsageError(f"--{f.name.replace('_', '-')}: cannot parse {val!r}") from None
        base[f.name] = val
    return RunManifest.from_dict(base)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "report":
            cmd_report(args.runs, args.out)
            return 0
        m = manifest_from_args(args)
        if args.command == "optimize":
            cmd_optimize(m)
        elif args.command == "bench":
            cmd_bench(m)
        elif args.command == "export":
            cmd_export(m, args.channel_map, args.from_schedule)
    except QocError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, KeyError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
