"""Command-line front end.

Subcommands: ``provision`` (mint flight keys and announcements),
``simulate`` (run a scenario config), ``verify`` (offline replay of a
recorded antenna feed), ``analyze`` (closed-form sweep CSVs plus their
figures), and ``codec`` (frame-level debug tool).

Exit codes: 0 success, 1 usage or configuration error, 2 data or parse
error, 3 verification produced rejected slots.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis, authority, frame_codec, simulator, verifier

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_REJECTED = 3


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except simulator.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (authority.RegistryParseError, verifier.FeedFormatError,
            frame_codec.FrameLengthError, frame_codec.FieldOverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skyauth",
        description="Slot-authenticated broadcast tooling: provisioning, "
        "simulation, offline verification, analysis curves, frame codec.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("provision", help="mint keys for a flight, append its announcement")
    p.add_argument("--icao", required=True, help="24-bit address as 6 hex chars")
    p.add_argument("--t0", type=float, default=0.0, help="boot time in seconds")
    p.add_argument("--n", type=int, default=65536, help="hash chain length")
    p.add_argument("--seed", type=int, default=None, help="deterministic key seed (tests)")
    p.add_argument("--slot-duration", type=float, default=2.0)
    p.add_argument("--data-rate", type=float, default=6.0)
    p.add_argument("--out", required=True, help="announcement registry to append to")
    p.add_argument("--secret-out", default=None,
                   help="master key file (default: <out>.secrets)")
    p.set_defaults(func=_cmd_provision)

    p = sub.add_parser("simulate", help="run a scenario config deterministically")
    p.add_argument("--config", required=True)
    p.add_argument("--out-report", required=True, help="per-slot verdict CSV")
    p.add_argument("--out-feed", default=None, help="dump the raw observation feed")
    p.add_argument("--feed-format", choices=("bin", "text"), default="bin")
    p.add_argument("--out-summary", default=None, help="also write the summary here")
    p.add_argument("--plot", default=None, help="render a run overview PNG")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="replay a recorded feed against a registry")
    p.add_argument("--registry", required=True)
    p.add_argument("--feed", required=True)
    p.add_argument("--out", required=True, help="verdict CSV")
    p.add_argument("--sub-slots", type=int, default=None)
    p.add_argument("--no-majority-filter", action="store_true")
    p.add_argument("--max-subsets", type=int, default=verifier.DEFAULT_MAX_SUBSETS)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("analyze", help="closed-form sweep tables and figures")
    asub = p.add_subparsers(dest="curve", required=True)

    a = asub.add_parser("overhead", help="overhead vs digest size and slot duration")
    a.add_argument("--key-bits", type=int, default=128)
    a.add_argument("--digest-bits", default="64,96,128,160,192,224,256",
                   help="comma separated list")
    a.add_argument("--slot-durations", default="1,2,3,4,5,6,7,8,9,10")
    a.add_argument("--data-rate", type=float, default=6.0)
    _analysis_common(a)
    a.set_defaults(func=_cmd_analyze_overhead)

    a = asub.add_parser("loss", help="slot success vs loss probability")
    a.add_argument("--p-max", type=float, default=0.30)
    a.add_argument("--p-step", type=float, default=0.01)
    a.add_argument("--slot-durations", default="1,2,5")
    a.add_argument("--data-rate", type=float, default=6.0)
    _analysis_common(a)
    a.set_defaults(func=_cmd_analyze_loss)

    a = asub.add_parser("recovery", help="worst-case recovery cost vs injection rate")
    a.add_argument("--adversary-rates", default="1,2,3,4,5,6")
    a.add_argument("--slot-durations", default="1,2,5")
    a.add_argument("--data-rate", type=float, default=6.0)
    _analysis_common(a)
    a.set_defaults(func=_cmd_analyze_recovery)

    p = sub.add_parser("codec", help="encode or decode a single frame")
    p.add_argument("--decode", metavar="HEX28", default=None)
    p.add_argument("--df", type=int, default=17)
    p.add_argument("--capability", type=int, default=5)
    p.add_argument("--icao", default=None, help="6 hex chars")
    p.add_argument("--payload", default=None, help="raw 56-bit payload as 14 hex chars")
    p.add_argument("--security", nargs=3, metavar=("TYPE", "CHUNK", "CONTENT_HEX"),
                   default=None, help="security payload fields")
    p.add_argument("--position", nargs=6,
                   metavar=("TYPE", "T", "F", "ALT", "LAT", "LON"),
                   default=None, help="position payload fields")
    p.set_defaults(func=_cmd_codec)

    return parser


def _analysis_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--no-plot", action="store_true",
                   help="skip the PNG next to the CSV")


# -- command bodies -----------------------------------------------------------


def _cmd_provision(args) -> int:
    icao = int(args.icao, 16)
    registry = {}
    if os.path.exists(args.out):
        registry = authority.load_announcements(args.out)
    try:
        prov, ann = authority.provision(
            icao, args.t0, n=args.n, seed=args.seed,
            slot_duration=args.slot_duration, data_rate=args.data_rate,
            active=registry,
        )
    except authority.ProvisioningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    with open(args.out, "a", encoding="ascii") as fh:
        fh.write(ann.to_line() + "\n")
    secret_path = args.secret_out or args.out + ".secrets"
    with open(secret_path, "a", encoding="ascii") as fh:
        fh.write(f"{icao:06x},{prov.master_key.hex()}\n")
    os.chmod(secret_path, 0o600)
    print(ann.to_line())
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = simulator.load_config(args.config)
    report = simulator.run_scenario(config, keep_observations=args.out_feed is not None)
    report.write_report_csv(args.out_report)
    if args.out_feed:
        verifier.write_feed(report.observations, args.out_feed,
                            binary=args.feed_format == "bin")
    summary = report.summary_text()
    print(summary)
    if args.out_summary:
        with open(args.out_summary, "w", encoding="ascii") as fh:
            fh.write(summary + "\n")
    if args.plot:
        from . import plots

        plots.plot_run_overview(report, args.plot)
    return EXIT_OK


def _cmd_verify(args) -> int:
    registry = authority.load_announcements(args.registry)
    observations = verifier.read_feed(args.feed)
    community = verifier.CommunityVerifier(
        registry,
        sub_slots=args.sub_slots,
        majority_filtering=not args.no_majority_filter,
        max_subsets=args.max_subsets,
    )
    for obs in observations:
        community.ingest(obs)
    records = community.finalize_all()
    verifier.write_verdicts(records, args.out)
    counts: dict[str, int] = {}
    for rec in records:
        counts[rec.verdict.status] = counts.get(rec.verdict.status, 0) + 1
    print(" ".join(f"{status}={counts[status]}" for status in sorted(counts)) or "no slots")
    if counts.get(verifier.REJECTED):
        return EXIT_REJECTED
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _write_analysis(args, columns: list[str], rows: list[dict], plot_fn) -> int:
    analysis.write_csv(args.out, columns, rows)
    if not args.no_plot:
        from . import plots

        png = os.path.splitext(args.out)[0] + ".png"
        plot_fn = getattr(plots, plot_fn)
        plot_fn(rows, png)
        print(f"wrote {args.out} and {png}")
    else:
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_analyze_overhead(args) -> int:
    columns, rows = analysis.overhead_sweep(
        digest_bits_values=_int_list(args.digest_bits),
        slot_durations=_float_list(args.slot_durations),
        key_bits=args.key_bits,
        data_rate=args.data_rate,
    )
    return _write_analysis(args, columns, rows, "plot_overhead")


def _cmd_analyze_loss(args) -> int:
    steps = int(round(args.p_max / args.p_step))
    p_values = [round(i * args.p_step, 10) for i in range(steps + 1)]
    columns, rows = analysis.loss_sweep(
        p_values=p_values,
        slot_durations=_float_list(args.slot_durations),
        data_rate=args.data_rate,
    )
    return _write_analysis(args, columns, rows, "plot_loss")


def _cmd_analyze_recovery(args) -> int:
    columns, rows = analysis.recovery_sweep(
        adversary_rates=_float_list(args.adversary_rates),
        slot_durations=_float_list(args.slot_durations),
        data_rate=args.data_rate,
    )
    return _write_analysis(args, columns, rows, "plot_recovery")


def _cmd_codec(args) -> int:
    if args.decode is not None:
        frame = frame_codec.frame_from_hex(args.decode)
        print(f"df={frame.df} capability={frame.capability} icao={frame.icao:06x}")
        print(f"payload={frame.payload:014x} parity={'ok' if frame.parity_ok else 'FAIL'}")
        payload = frame_codec.classify_payload(frame.payload)
        if isinstance(payload, frame_codec.SecurityPayload):
            kind = ("verification-digest"
                    if payload.type_code == frame_codec.TYPE_VERIFICATION_DIGEST
                    else "verification-key")
            print(f"security {kind}: chunk_id={payload.chunk_id} "
                  f"content={payload.content:012x}")
        else:
            print(f"position: type={payload.type_code} t={payload.t_flag} "
                  f"f={payload.f_flag} altitude={payload.altitude} "
                  f"latitude={payload.latitude} longitude={payload.longitude}")
        return EXIT_OK if frame.parity_ok else EXIT_DATA

    if args.icao is None:
        print("error: --encode mode requires --icao", file=sys.stderr)
        return EXIT_USAGE
    icao = int(args.icao, 16)
    if args.payload is not None:
        payload = int(args.payload, 16)
    elif args.security is not None:
        type_code, chunk_id, content_hex = args.security
        payload = frame_codec.encode_security_payload(
            frame_codec.SecurityPayload(int(type_code), int(chunk_id), int(content_hex, 16))
        )
    elif args.position is not None:
        tc, t, f, alt, lat, lon = (int(v) for v in args.position)
        payload = frame_codec.encode_position_payload(
            frame_codec.PositionPayload(tc, t, f, alt, lat, lon)
        )
    else:
        print("error: provide --decode, --payload, --security, or --position",
              file=sys.stderr)
        return EXIT_USAGE
    frame = frame_codec.make_frame(args.df, args.capability, icao, payload)
    print(frame_codec.frame_to_hex(frame))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
