"""Command-line front end: ``counterfactual <subcommand> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 attempt/pair cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import histories, montecarlo, protocol, weakmeas
from .exceptions import CapExceededError, ConfigurationError, UsageError

EXIT_OK, EXIT_CONFIG, EXIT_CAP = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _num(x):
    """JSON-safe float: nan/inf become null."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        obj = int(obj)
    return _num(obj)


def _emit_text(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def parse_grid(spec: str) -> list[float]:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        try:
            start, stop, step = (float(s) for s in spec.split(":"))
        except ValueError:
            raise ConfigurationError(f"bad grid {spec!r}; use start:stop:step") from None
        if step <= 0:
            raise ConfigurationError("grid step must be > 0")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + k * step, 12) for k in range(max(n, 0))]
    else:
        values = [float(s) for s in spec.split(",") if s.strip()]
    if not values:
        raise ConfigurationError(f"grid {spec!r} is empty")
    return values


def _params(args, blocking=False, m=None):
    return protocol.ProtocolParams(args.p, m if m is not None else args.m, blocking)


# ------------------------------------------------------------------ commands


def cmd_tables(args) -> int:
    p = args.p
    summary = protocol.postselected_summary(p)
    table1 = {col: protocol.raw_probabilities_limit(p, col == "B").as_dict() for col in ("B", "NB")}
    m = args.m or 2
    table1_m = {col: protocol.raw_probabilities(protocol.ProtocolParams(p, m, col == "B")).as_dict()
                for col in ("B", "NB")}
    result = {
        "P": p,
        "M": args.m,
        "table1": table1,
        "finite_m": m,
        "table1_finite_m": table1_m,
        "table2": {f"{d},{c}": v for (d, c), v in summary.table2.items()},
        "N": summary.n,
        "P_B_raw": summary.p_b_raw,
        "P_L": summary.p_l,
        "P_c": summary.p_c,
        "acc_D0": summary.acc_d0,
        "postselect_prob": summary.postselect_prob,
        "degenerate": summary.degenerate,
    }
    if args.empirical:
        rng = montecarlo.make_rng(args.seed)
        emp = montecarlo.empirical_tables(protocol.ProtocolParams(p, args.m, False), args.rounds, rng)
        result["empirical"] = {
            "rounds": emp.n_rounds,
            "seed": args.seed,
            "table1": {col: {d: [e.value, e.low, e.high] for d, e in cols.items()}
                       for col, cols in emp.raw.items()},
            "table2": {f"{d},{c}": [e.value, e.low, e.high] for (d, c), e in emp.postselected.items()},
            "P_c": [emp.p_c.value, emp.p_c.low, emp.p_c.high],
            "postselect_prob": [emp.postselect_prob.value, emp.postselect_prob.low,
                                emp.postselect_prob.high],
        }
    if args.format == "json":
        _emit_text(_json(result), args.out)
    else:
        rows = []
        for key in ("table1", "table1_finite_m"):
            for col, d in result[key].items():
                rows += [(key, det, col, v, "", "") for det, v in d.items()]
        for (det, col), v in summary.table2.items():
            rows.append(("table2", det, col, v, "", ""))
        if args.empirical:
            for col, cols in emp.raw.items():
                rows += [("empirical_table1", det, col, e.value, e.low, e.high) for det, e in cols.items()]
            for (det, col), e in emp.postselected.items():
                rows.append(("empirical_table2", det, col, e.value, e.low, e.high))
        _emit_text(_csv(("table", "detector", "column", "value", "ci_low", "ci_high"), rows), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = protocol.sweep(parse_grid(args.grid))
    if args.format == "json":
        _emit_text(_json([dict(zip(("P", "Pc", "accD0", "postselect_prob"), r)) for r in rows]), args.out)
    else:
        _emit_text(_csv(("P", "Pc", "accD0", "postselect_prob"), rows), args.out)
    return EXIT_OK


def cmd_histories(args) -> int:
    if args.m not in (None, 2):
        raise ConfigurationError("the histories analysis is defined for M = 2")
    circuit = protocol.build_circuit(protocol.ProtocolParams(args.p, 2, False))
    fam = histories.family_y(circuit)
    consistent, gram = histories.check_consistency(fam, circuit)
    off = gram - np.diag(np.diag(gram))
    weights = np.diag(gram).real
    probs = histories.history_probabilities(fam, circuit) if consistent else {}
    a = histories.a_path(fam)
    result = {
        "P": args.p,
        "histories": [
            {"label": h.label, "path": list(h.arm_path()), "weight": float(w),
             "probability": probs.get(h)}
            for h, w in zip(fam, weights)
        ],
        "n_histories": len(fam),
        "gram_offdiag_max": float(np.abs(off).max()),
        "consistent": consistent,
        "nonzero_histories": int(np.sum(weights > histories.CONSISTENCY_TOL)),
        "a_path_weight": float(histories.chain_ket(a, circuit).weight),
        "a_path_probability": probs.get(a),
    }
    _emit_text(_json(result), args.out)
    return EXIT_OK


def cmd_weak(args) -> int:
    circuit = protocol.build_circuit(protocol.ProtocolParams(args.p, args.m or 2, False))
    dithers = weakmeas.default_dithers(args.amp_a, args.amp_b1, args.amp_b2)
    dithers = [d for d in dithers if d.mirror in circuit.mirrors()]
    rng = montecarlo.make_rng(args.seed, stream=1)
    series = weakmeas.simulate_dither(circuit, dithers, weakmeas.BeamModel(args.diameter),
                                      args.rate, args.duration, args.noise_rms, rng)
    dets = ("D0", "D1", "D3")
    spectra = {d: weakmeas.spectrum(series[d]) for d in dets}
    probes = [d.frequency for d in dithers]
    presence = weakmeas.detect_peaks(spectra[args.detector], probes, args.threshold)
    peaks = {"detector": args.detector,
             "presence": {f"{f:g}": ("present" if v else "absent") for f, v in presence.items()}}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t = series["D0"].t
        (out / "timeseries.csv").write_text(_csv(
            ("t", "centroid_D0", "centroid_D1", "centroid_D3"),
            zip(t, *(series[d].samples for d in dets))), encoding="utf-8")
        (out / "spectrum.csv").write_text(_csv(
            ("freq_hz", "power_D0", "power_D1", "power_D3"),
            zip(spectra["D0"].freqs, *(spectra[d].power for d in dets))), encoding="utf-8")
        (out / "peaks.json").write_text(_json(peaks), encoding="utf-8")
    sys.stdout.write(_json(peaks))
    return EXIT_OK


def _bits(args) -> list[int]:
    if args.bits:
        if set(args.bits) - {"0", "1"}:
            raise ConfigurationError("--bits must be a string of 0s and 1s")
        return [int(c) for c in args.bits]
    if args.len is None or args.len < 1:
        raise ConfigurationError("message length must be >= 1")
    return montecarlo.balanced_message(args.len)


def cmd_transmit(args) -> int:
    bits = _bits(args)
    rng = montecarlo.make_rng(args.seed)
    try:
        stats = montecarlo.transmit_message(_params(args), bits, rng, args.attempt_cap)
    except CapExceededError as exc:
        _emit_text(_json({"error": str(exc), "partial": exc.partial.as_dict()}), args.out)
        raise
    _emit_text(_json({"P": args.p, "M": args.m, "seed": args.seed, **stats.as_dict()}), args.out)
    return EXIT_OK


def cmd_director(args) -> int:
    length = 10 if args.len is None else args.len
    if length < 0 or args.reps < 1:
        raise ConfigurationError("--len must be >= 0 and --reps >= 1")
    rng = montecarlo.make_rng(args.seed)
    try:
        res = montecarlo.lab_director_runs(_params(args), length, args.reps, rng, args.pair_cap)
    except CapExceededError as exc:
        _emit_text(_json({"error": str(exc), "partial": exc.partial}), args.out)
        raise
    _emit_text(_json({"P": args.p, "M": args.m, "seed": args.seed, **res}), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="counterfactual", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, m_default=None, fmt="json"):
        sp.add_argument("--p", type=float, default=0.5, help="probability of entering the right half")
        sp.add_argument("--m", type=int, default=m_default,
                        help="inner stages (default: infinite-stage limit where applicable)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output file (weak: output directory)")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)

    sp = sub.add_parser("tables", help="raw and post-selected detection tables")
    common(sp)
    sp.add_argument("--empirical", action="store_true")
    sp.add_argument("--rounds", type=int, default=100_000)
    sp.set_defaults(func=cmd_tables)

    sp = sub.add_parser("sweep", help="P_c, D0 accuracy and post-selection probability vs P")
    common(sp, fmt="csv")
    sp.add_argument("--grid", default="0:0.95:0.05")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("histories", help="consistent-histories family for M = 2")
    common(sp, m_default=2)
    sp.set_defaults(func=cmd_histories)

    sp = sub.add_parser("weak", help="dithered-mirror weak measurement and spectra")
    common(sp, m_default=2, fmt="csv")
    sp.add_argument("--detector", choices=("D0", "D1", "D3"), default="D0")
    sp.add_argument("--amp-a", type=float, default=weakmeas.DEFAULT_AMPLITUDE_MM)
    sp.add_argument("--amp-b1", type=float, default=weakmeas.DEFAULT_AMPLITUDE_MM)
    sp.add_argument("--amp-b2", type=float, default=weakmeas.DEFAULT_AMPLITUDE_MM)
    sp.add_argument("--rate", type=float, default=weakmeas.DEFAULT_RATE_HZ)
    sp.add_argument("--duration", type=float, default=weakmeas.DEFAULT_DURATION_S)
    sp.add_argument("--diameter", type=float, default=weakmeas.DEFAULT_BEAM_DIAMETER_MM)
    sp.add_argument("--noise-rms", type=float, default=weakmeas.DEFAULT_NOISE_RMS_MM)
    sp.add_argument("--threshold", type=float, default=10.0)
    sp.set_defaults(func=cmd_weak)

    sp = sub.add_parser("transmit", help="send a message bit by bit with retries")
    common(sp)
    sp.add_argument("--len", type=int, default=10_000, help="length of a balanced message")
    sp.add_argument("--bits", default=None, help="explicit message, e.g. 0110")
    sp.add_argument("--attempt-cap", type=int, default=montecarlo.DEFAULT_ATTEMPT_CAP)
    sp.set_defaults(func=cmd_transmit)

    sp = sub.add_parser("director", help="lab-director scenario")
    common(sp)
    sp.add_argument("--len", type=int, default=10)
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--pair-cap", type=int, default=montecarlo.DEFAULT_PAIR_CAP)
    sp.set_defaults(func=cmd_director)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        protocol.check_probability(args.p)
        if args.m is not None and args.m < 1:
            raise ConfigurationError("--m must be >= 1")
        return args.func(args)
    except (ConfigurationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
