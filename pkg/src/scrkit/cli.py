"""``scrkit`` command line.

Exit status: 0 success, 1 usage error, 2 invalid input, 3 computation failure.
"""

import argparse
import math
from pathlib import Path
import sys

import numpy as np

from . import io
from .circuit import COMMON, DIFFERENTIAL, eigenmodes, build_matrices, modes_by_label
from .electrons import (
    LeverArms,
    avoided_crossing_gap,
    bare_differential,
    coupling_strength_analytic,
    sweep_dot_frequency,
)
from .errors import ComputationError, InvalidParameterError, ParseError, ScrError, ValidationError
from .materials import scaling_predict
from .resonance import (
    ResonanceFit,
    dbm_to_watts,
    fit_many,
    normalize_baseline,
    photon_number,
    qc_from_circuit,
    synth_trace,
)
from .verify import fit_gamma, splitting_report

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_COMPUTE = 0, 1, 2, 3
Z0 = 50.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# subcommands; each returns (params, input paths, outputs, summary lines)


def _design_modes(d, gamma, feedline, discount):
    by = modes_by_label(eigenmodes(build_matrices(d, feedline, gamma, discount)))
    return by[COMMON], by[DIFFERENTIAL]


def cmd_simulate(a):
    designs = io.load_designs(a.designs)
    feed = not a.no_feedline
    rows, recs = [], []
    for d in designs:
        for m in _design_modes(d, a.gamma, feed, not a.feedline_undiscounted):
            qc = qc_from_circuit(m.impedance, Z0, d.C_ca, d.C_cb, m.label, m.frequency)
            rows.append((d.name, m.label, m.frequency / 1e9, m.impedance, qc))
            recs.append(
                {
                    "name": d.name,
                    "mode": m.label,
                    "frequency_ghz": m.frequency / 1e9,
                    "impedance_ohm": m.impedance,
                    "qc": qc,
                    "eigenvector": m.eigenvector,
                }
            )
    split = [
        {"name": s.name, "exact_mhz": s.exact / 1e6, "approx_mhz": s.approx / 1e6}
        for s in splitting_report(designs, a.gamma, not a.feedline_undiscounted)
    ] if feed else []
    doc = {"gamma": a.gamma, "include_feedline": feed, "modes": recs, "splittings": split}
    outputs = {
        "modes.csv": io.csv_text(("name", "mode", "frequency_ghz", "impedance_ohm", "qc"), rows),
        "modes.json": io.dumps_json(doc),
    }
    lines = [f"{r[0]:>6} {r[1]:<12} {r[2]:10.6f} GHz  Z={r[3]:8.1f} ohm" for r in rows]
    return [a.designs], outputs, lines


def _pick_design(designs, name):
    for d in designs:
        if d.name == name:
            return d
    raise InvalidParameterError(f"no design named {name!r}; have {[d.name for d in designs]}")


def cmd_couple(a):
    design = _pick_design(io.load_designs(a.designs), a.design)
    if a.symmetrize:
        design = design.symmetrized()
    inputs = [a.designs]
    if a.arms:
        arms = io.load_lever_arms(a.arms)
        inputs.append(a.arms)
        n = arms.n
    else:
        n = a.electrons
        arms = LeverArms.antisymmetric(n, a.field_x_per_um * 1e6)
    bare = bare_differential(design, a.gamma)
    f_d = bare.frequency
    lo = a.fdot_min_ghz * 1e9 if a.fdot_min_ghz is not None else f_d - 1e9
    hi = a.fdot_max_ghz * 1e9 if a.fdot_max_ghz is not None else f_d + 1e9
    if not 0 < lo < hi:
        raise InvalidParameterError("need 0 < fdot-min < fdot-max")
    omegas = 2 * math.pi * np.linspace(lo, hi, a.points)
    recs = sweep_dot_frequency(design, a.gamma, arms, omegas, n=n, exact_hessian=a.exact_hessian)
    k = len(recs[0]["frequencies"])
    header = ["f_dot_ghz"]
    for i in range(k):
        header += [f"mode{i + 1}_ghz", f"mode{i + 1}_label"]
    rows = []
    for r in recs:
        row = [r["omega_dot"] / (2 * math.pi * 1e9)]
        for f, lab in zip(r["frequencies"], r["labels"]):
            row += [f / 1e9, lab]
        rows.append(row)
    summary = {"design": design.name, "gamma": a.gamma, "electrons": n, "bare_differential_ghz": f_d / 1e9}
    lines = [f"bare differential mode {f_d / 1e9:.6f} GHz, {len(recs)} sweep points, {k} modes"]
    if n == 1 and not a.arms and lo < f_d < hi:
        gap, w_min = avoided_crossing_gap(design, a.gamma, arms, omegas)
        g = coupling_strength_analytic(arms.da_dx[0], f_d, bare.impedance, w_min / (2 * math.pi))
        summary.update(gap_mhz=gap / 1e6, f_dot_at_gap_ghz=w_min / (2e9 * math.pi), g_analytic_mhz=g / 1e6)
        lines.append(f"avoided crossing 2g = {gap / 1e6:.4f} MHz (analytic {2 * g / 1e6:.4f} MHz)")
    outputs = {"sweep.csv": io.csv_text(header, rows), "couple.json": io.dumps_json(summary)}
    return inputs, outputs, lines


def cmd_fit(a):
    traces = [io.load_trace(p, a.format) for p in a.traces]
    if a.normalize_baseline:
        traces = [normalize_baseline(t) for t in traces]
    fits = fit_many(traces, workers=a.workers, fit_delay=a.fit_delay)
    recs, rows, lines = [], [], []
    p_in = dbm_to_watts(a.power_dbm) if a.power_dbm is not None else None
    for path, fit in zip(a.traces, fits):
        rec = {"file": Path(path).name, **fit.as_dict(), "q_loaded": fit.q_loaded}
        nbar = photon_number(p_in, fit) if p_in else None
        if nbar is not None:
            rec["photon_number"] = nbar
        recs.append(rec)
        rows.append((Path(path).name, fit.f0, fit.qi, fit.qc, fit.phi, fit.q_loaded, nbar if nbar else math.nan))
        lines.append(f"{Path(path).name}: f0={fit.f0 / 1e9:.9f} GHz Qi={fit.qi:.4g} Qc={fit.qc:.4g} phi={fit.phi:.4f}")
    header = ("file", "f0_hz", "qi", "qc", "phi_rad", "q_loaded", "photon_number")
    outputs = {"fits.json": io.dumps_json({"fits": recs}), "fits.csv": io.csv_text(header, rows)}
    return list(a.traces), outputs, lines


def cmd_verify(a):
    designs = io.load_designs(a.designs)
    ref = io.load_reference(a.reference)
    report = fit_gamma(designs, ref, discount_feedline=not a.feedline_undiscounted)
    doc = report.as_dict()
    rows = [(m["name"], m["label"], m["predicted_ghz"], m["reference_ghz"], m["rel_error"]) for m in doc["modes"]]
    srows = [(s["name"], s["exact_mhz"], s["approx_mhz"]) for s in doc["splittings"]]
    outputs = {
        "report.json": io.dumps_json(doc),
        "report.csv": io.csv_text(("name", "mode", "predicted_ghz", "reference_ghz", "rel_error"), rows),
        "splittings.csv": io.csv_text(("name", "exact_mhz", "approx_mhz"), srows),
    }
    lines = [
        f"gamma* = {report.gamma_star:.6f}",
        f"max |error| = {100 * report.max_abs_error:.3f} %, rms = {100 * report.rms_error:.3f} %",
    ]
    if report.multiple_minima:
        lines.append("warning: an interval endpoint beats the interior minimum")
    return [a.designs, a.reference], outputs, lines


def cmd_scale(a):
    f0 = a.f0 if a.f0 is not None else 1.0
    z = a.z if a.z is not None else 1.0
    r = scaling_predict(a.l, a.w, f0, z, a.target_l, a.target_w)
    doc = {"f0_ratio": r.f0_ratio, "z_ratio": r.z_ratio, "z_ratio_product": r.z_ratio_product}
    rows = [("f0_ratio", r.f0_ratio), ("z_ratio", r.z_ratio)]
    if a.f0 is not None:
        doc["f0_hz"] = r.f0
        rows.append(("f0_hz", r.f0))
    if a.z is not None:
        doc["z_ohm"] = r.z
        rows.append(("z_ohm", r.z))
    outputs = {"scale.json": io.dumps_json(doc), "scale.csv": io.csv_text(("quantity", "value"), rows)}
    lines = [f"f0 ratio {r.f0_ratio:.6f}, impedance ratio {r.z_ratio:.6f}"]
    return [], outputs, lines


def cmd_synth(a):
    params = ResonanceFit(a.f0, a.qi, a.qc, a.phi, delay=a.delay)
    span = a.span if a.span is not None else a.span_linewidths * a.f0 / params.q_loaded
    trace = synth_trace(params, span, a.points, a.noise, a.seed)
    outputs = {"trace.csv": io.trace_csv(trace, a.format)}
    return [], outputs, [f"{a.points} samples over {span / 1e6:.4f} MHz"]


COMMANDS = {
    "simulate": cmd_simulate,
    "couple": cmd_couple,
    "fit": cmd_fit,
    "verify": cmd_verify,
    "scale": cmd_scale,
    "synth": cmd_synth,
}


# ---------------------------------------------------------------------------


def _gamma(text):
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float {text!r}") from None


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--run-root", help=f"run directory root (default ${io.RUN_ROOT_ENV} or ./runs)")
    common.add_argument("--out", help="write into this exact directory instead")
    common.add_argument("-q", "--quiet", action="store_true")

    p = _Parser(prog="scrkit", description="Symmetrically coupled resonator toolkit.")
    from . import __version__

    p.add_argument("--version", action="version", version=f"scrkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="eigenmode table for a designs file")
    s.add_argument("designs")
    s.add_argument("--gamma", type=_gamma, default=1.0, help="capacitance discount (default 1)")
    s.add_argument("--no-feedline", action="store_true", help="ignore feedline coupling capacitances")
    s.add_argument("--feedline-undiscounted", action="store_true", help="do not apply gamma to feedline terms")

    s = sub.add_parser("couple", parents=[common], help="coupled circuit-electron spectrum vs dot frequency")
    s.add_argument("designs")
    s.add_argument("--design", required=True, help="design name in the file")
    s.add_argument("--gamma", type=_gamma, default=1.0)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--field-x-per-um", type=float, default=0.25, help="antisymmetric lever-arm gradient")
    g.add_argument("--arms", help="lever-arm CSV")
    s.add_argument("--electrons", type=int, default=1)
    s.add_argument("--fdot-min-ghz", type=float)
    s.add_argument("--fdot-max-ghz", type=float)
    s.add_argument("--points", type=int, default=201)
    s.add_argument("--symmetrize", action="store_true", help="average the two halves first")
    s.add_argument("--exact-hessian", action="store_true", help="use the full Coulomb Hessian")

    s = sub.add_parser("fit", parents=[common], help="fit hanger resonances in S21 traces")
    s.add_argument("traces", nargs="+")
    s.add_argument("--format", choices=["auto", *io.TRACE_FORMATS], default="auto")
    s.add_argument("--normalize-baseline", action="store_true")
    s.add_argument("--fit-delay", action="store_true")
    s.add_argument("--power-dbm", type=float, help="power at the device, for photon number")
    s.add_argument("--workers", type=int, default=1)

    s = sub.add_parser("verify", parents=[common], help="fit gamma against reference frequencies")
    s.add_argument("designs")
    s.add_argument("reference")
    s.add_argument("--feedline-undiscounted", action="store_true")

    s = sub.add_parser("scale", parents=[common], help="resize a meander")
    s.add_argument("--l", type=float, required=True, help="length (m)")
    s.add_argument("--w", type=float, required=True, help="width (m)")
    s.add_argument("--target-l", type=float, required=True)
    s.add_argument("--target-w", type=float, required=True)
    s.add_argument("--f0", type=float, help="base frequency (Hz)")
    s.add_argument("--z", type=float, help="base impedance (ohm)")

    s = sub.add_parser("synth", parents=[common], help="synthetic S21 trace")
    s.add_argument("--f0", type=float, required=True)
    s.add_argument("--qi", type=float, required=True)
    s.add_argument("--qc", type=float, required=True)
    s.add_argument("--phi", type=float, default=0.0)
    s.add_argument("--delay", type=float, default=0.0)
    span = s.add_mutually_exclusive_group()
    span.add_argument("--span", type=float, help="span in Hz")
    span.add_argument("--span-linewidths", type=float, default=10.0)
    s.add_argument("--points", type=int, default=2001)
    s.add_argument("--noise", type=float, default=0.0, help="complex noise RMS")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=list(io.TRACE_FORMATS), default="reim")
    return p


_RUN_KEYS = {"run_root", "out", "quiet", "command"}


def main(argv=None):
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError as exc:
        print(f"{exc}\n{parser.format_usage().rstrip()}", file=sys.stderr)
        return EXIT_USAGE
    try:
        inputs, outputs, lines = COMMANDS[a.command](a)
        params = {k: v for k, v in sorted(vars(a).items()) if k not in _RUN_KEYS}
        for k, v in params.items():
            if isinstance(v, str) and Path(v).is_file():
                params[k] = Path(v).name
            elif isinstance(v, list):
                params[k] = [Path(x).name if isinstance(x, str) and Path(x).is_file() else x for x in v]
        digests = {Path(p).name: io.sha256_file(p) for p in inputs}
        run_dir = Path(a.out) if a.out else io.run_directory(a.command, params, digests, a.run_root)
        io.write_run(run_dir, io.RunRecord(a.command, digests, params), outputs)
    except (ParseError, ValidationError, InvalidParameterError) as exc:
        print(f"scrkit {a.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ComputationError, ScrError) as exc:
        print(f"scrkit {a.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    if not a.quiet:
        for line in lines:
            print(line)
    print(run_dir)
    return EXIT_OK


run_command = main
