"""The `neoward` command line."""

from __future__ import annotations

import argparse
import json
import struct
import sys
import time
from pathlib import Path

from . import __version__


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    return args.func(args) or 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neoward", description="Desk-scale ward monitoring stack")
    parser.add_argument("--version", action="version", version=f"neoward {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="run simulated devices against a sink")
    p.add_argument("--devices", type=int, default=1)
    p.add_argument("--scenario", default="stable", help="builtin name or scenario file path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=60.0, help="seconds")
    p.add_argument("--interval", type=int, default=1, choices=(1, 2, 4, 5))
    p.add_argument("--sink", default="frames.bin", help="host:port of a gateway frame socket, or an output file")
    p.add_argument("--key-file", type=Path, default=None, help="32-byte master key file (default: zero key fixture)")
    p.add_argument(
        "--start-epoch-ms",
        default="now",
        help="timestamp base for emitted samples: epoch ms or `now` (use 0 for reproducible files)",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("power", help="print current draw and battery life")
    p.add_argument("--interval", type=int, default=None, choices=(1, 2, 4, 5))
    p.add_argument("--battery-mah", type=float, default=2000.0)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("gateway", help="run the ward gateway service")
    p.add_argument("--listen", default="127.0.0.1:8787")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--store-key-file", type=Path, required=True)
    p.add_argument("--token-key-file", type=Path, required=True)
    p.add_argument("--device-key-file", type=Path, default=None, help="master key for device key derivation")
    p.add_argument("--frame-port", type=int, default=8788, help="TCP port accepting device frames")
    p.add_argument("--console-dir", type=Path, default=None)
    p.add_argument("--sync-server", default=None, help="aggregation server URL")
    p.add_argument("--retain-days", type=float, default=None)
    p.add_argument("--thresholds-file", type=Path, default=None, help="`category vital low high` lines")
    p.set_defaults(func=cmd_gateway)

    p = sub.add_parser("sync", help="push gateway deltas to an aggregation server")
    p.add_argument("--server", required=True)
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--store-key-file", type=Path, required=True)
    p.add_argument("--state-file", type=Path, default=Path("sync-state.json"))
    group = p.add_mutually_exclusive_group()
    group.add_argument("--once", action="store_true")
    group.add_argument("--loop", type=float, default=None, help="seconds between cycles")
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("mock-server", help="run the mock aggregation server")
    p.add_argument("--listen", default="127.0.0.1:8799")
    p.add_argument("--state", type=Path, required=True)
    p.set_defaults(func=cmd_mock_server)

    p = sub.add_parser("netsim", help="impaired TCP relay for client/server pairs")
    p.add_argument("--listen", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--latency", default="50..2000", help="LO..HI ms per chunk")
    p.add_argument("--loss", type=float, default=0.0, help="connection drop probability")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_netsim)

    p = sub.add_parser("ocr-extract", help="extract vitals from detection files")
    p.add_argument("--detections", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ocr_extract)

    p = sub.add_parser("ocr-eval", help="score extractions against ground truth")
    p.add_argument("--detections", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ocr_eval)

    smt = sub.add_parser("smt", help="streaming risk model").add_subparsers(dest="smt_command")

    p = smt.add_parser("synth", help="generate a synthetic labeled dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=60)
    p.set_defaults(func=cmd_smt_synth)

    p = smt.add_parser("train")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--d-model", type=int, default=32)
    p.add_argument("--heads", type=int, default=4)
    p.set_defaults(func=cmd_smt_train)

    p = smt.add_parser("eval")
    p.add_argument("--model", type=Path)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--kfold", type=int, default=None)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_smt_eval)

    p = smt.add_parser("calibrate")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.set_defaults(func=cmd_smt_calibrate)

    p = smt.add_parser("gradcheck")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_smt_gradcheck)

    return parser


def _zero_key() -> bytes:
    return bytes(32)


def _master_key(path) -> bytes:
    if path is None:
        return _zero_key()
    from .keys import load_or_create_key

    return load_or_create_key(path)


def cmd_simulate(args) -> int:
    from .keys import derive_device_key
    from .transport.frame import FrameSender
    from .transport.link import FrameSocketSink
    from .vitalsim import builtin_scenario, parse_scenario, run_device

    if Path(args.scenario).exists():
        scenario = parse_scenario(Path(args.scenario).read_text(), name=Path(args.scenario).stem)
    else:
        scenario = builtin_scenario(args.scenario, duration_s=args.duration, seed=args.seed)
    scenario = scenario.with_seed(args.seed)
    master = _master_key(args.key_file)

    close = None
    if ":" in args.sink:
        host, port = args.sink.rsplit(":", 1)
        sock = FrameSocketSink(host, int(port))
        sink, close = sock, sock.close
    else:
        fh = open(args.sink, "ab")

        def sink(frame_bytes: bytes) -> None:
            fh.write(struct.pack("<I", len(frame_bytes)) + frame_bytes)

        close = fh.close

    start_epoch = int(time.time() * 1000) if args.start_epoch_ms == "now" else int(args.start_epoch_ms)
    try:
        totals = {"samples": 0, "frames": 0, "bursts": 0}
        for device_id in range(1, args.devices + 1):
            sender = FrameSender(derive_device_key(master, device_id), device_id)
            stats = run_device(
                scenario,
                lambda b, s=sender: sink(s.send_batch(b)),
                device_id,
                args.interval,
                start_t_ms=start_epoch,
            )
            totals = {k: totals[k] + getattr(stats, k) for k in totals}
        print(json.dumps({"devices": args.devices, **totals}))
    finally:
        if close:
            close()
    return 0


def cmd_power(args) -> int:
    from .vitalsim.power import CONNECTED_CURRENT_MA, PowerMode, battery_life_h, power_current

    intervals = [args.interval] if args.interval else sorted(CONNECTED_CURRENT_MA)
    adv = power_current(PowerMode("advertising"))
    print(f"advertising: {adv:.2f} mA  ({battery_life_h(args.battery_mah, adv):.1f} h on {args.battery_mah:.0f} mAh)")
    for interval in intervals:
        current = power_current(PowerMode("connected", interval))
        life = battery_life_h(args.battery_mah, current)
        print(f"connected {interval}s: {current:.2f} mA  ({life:.1f} h on {args.battery_mah:.0f} mAh)")
    return 0


def cmd_gateway(args) -> int:
    import uvicorn

    from .alerts import AlertEngine, parse_profiles
    from .gateway import GatewayService, Store, create_app
    from .keys import derive_device_key, load_or_create_key
    from .syncengine import HttpSyncClient, SyncController
    from .transport.frame import FrameReceiver
    from .transport.link import FrameSocketServer

    store_key = load_or_create_key(args.store_key_file)
    token_key = load_or_create_key(args.token_key_file)
    device_master = _master_key(args.device_key_file)

    store = Store(args.store, store_key)
    if args.retain_days is not None:
        cutoff = int(time.time() * 1000) - int(args.retain_days * 86_400_000)
        dropped = store.compact_vitals(cutoff)
        print(f"retention: dropped {dropped} vital records older than {args.retain_days} days")

    profiles = parse_profiles(args.thresholds_file.read_text()) if args.thresholds_file else None
    service = GatewayService(
        store,
        FrameReceiver(lambda device_id: derive_device_key(device_master, device_id)),
        AlertEngine(profiles=profiles),
        threaded=True,
    ).start()
    if args.sync_server:
        service.sync_controller = SyncController(
            store,
            HttpSyncClient(args.sync_server),
            state_path=args.store / "sync-state.json",
            gateway=service,
        )

    frame_server = FrameSocketServer("0.0.0.0", args.frame_port, service.ingest).start()
    app = create_app(service, token_key, console_dir=args.console_dir)
    host, port = args.listen.rsplit(":", 1)
    print(f"gateway: api on http://{args.listen}, frames on tcp port {frame_server.port}")
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="warning")
    finally:
        frame_server.close()
        service.stop()
        store.close()
    return 0


def cmd_sync(args) -> int:
    from .gateway import Store
    from .keys import load_or_create_key
    from .syncengine import HttpSyncClient, SyncController

    store = Store(args.store, load_or_create_key(args.store_key_file))
    controller = SyncController(store, HttpSyncClient(args.server), state_path=args.state_file)
    try:
        while True:
            print(json.dumps(controller.trigger()))
            if args.loop is None:
                break
            time.sleep(args.loop)
    except KeyboardInterrupt:
        pass
    finally:
        store.close()
    return 0


def cmd_mock_server(args) -> int:
    import uvicorn

    from .syncengine import AggregationState, create_mock_server

    args.state.mkdir(parents=True, exist_ok=True)
    state = AggregationState(args.state / "aggregation-state.json")
    app = create_mock_server(state)
    host, port = args.listen.rsplit(":", 1)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


def cmd_netsim(args) -> int:
    from .syncengine.relay import run_relay

    lo, _, hi = args.latency.partition("..")
    listen_host, listen_port = args.listen.rsplit(":", 1)
    target_host, target_port = args.target.rsplit(":", 1)
    run_relay(
        (listen_host, int(listen_port)),
        (target_host, int(target_port)),
        latency_lo_ms=float(lo),
        latency_hi_ms=float(hi or lo),
        loss=args.loss,
        seed=args.seed,
    )
    return 0


def cmd_ocr_extract(args) -> int:
    from .monitorocr import OCR_VITALS, batch_extract

    results, failures = batch_extract(args.detections, workers=args.workers)
    for extraction in results:
        cells = [extraction.image_id]
        for vital in OCR_VITALS:
            value = extraction.value_of(vital)
            cells.append("" if value is None else str(value))
        print("\t".join(cells))
    for failure in failures:
        print(f"error\t{failure.path}\t{failure.error}", file=sys.stderr)
    return 1 if failures else 0


def cmd_ocr_eval(args) -> int:
    from .monitorocr import batch_extract, evaluate, format_metrics, parse_truth

    results, failures = batch_extract(args.detections, workers=args.workers)
    truth = parse_truth(args.truth.read_text())
    print(format_metrics(evaluate(results, truth)))
    for failure in failures:
        print(f"error\t{failure.path}\t{failure.error}", file=sys.stderr)
    return 0


def cmd_smt_synth(args) -> int:
    from .smt import SmtConfig
    from .smt.data import make_synthetic_dataset, save_dataset

    cfg = SmtConfig(window=args.window)
    dataset = make_synthetic_dataset(cfg, per_class=args.per_class, seed=args.seed, window=args.window)
    save_dataset(args.out, dataset)
    print(f"wrote {len(dataset)} examples to {args.out}")
    return 0


def cmd_smt_train(args) -> int:
    from .smt import SmtConfig, SmtModel, TrainConfig, save_model, train
    from .smt.data import load_dataset

    dataset = load_dataset(args.data)
    cfg = SmtConfig(window=dataset.windows.shape[1], d_model=args.d_model, heads=args.heads)
    result = train(dataset, cfg, TrainConfig(steps=args.steps, learning_rate=args.lr, seed=args.seed))
    for entry in result.history:
        print(json.dumps(entry))
    save_model(args.out, SmtModel(cfg=cfg, params=result.params, norm=result.norm))
    print(f"model written to {args.out}")
    return 0


def cmd_smt_eval(args) -> int:
    from .smt import SmtConfig, TrainConfig, accuracy, cross_validate, load_model
    from .smt.data import load_dataset

    dataset = load_dataset(args.data)
    if args.kfold:
        cfg = SmtConfig(window=dataset.windows.shape[1], d_model=32, heads=4)
        tcfg = TrainConfig(steps=args.steps, learning_rate=args.lr, seed=args.seed)
        for entry in cross_validate(dataset, cfg, tcfg, k=args.kfold, seed=args.seed):
            print(json.dumps(entry))
        return 0
    if not args.model:
        print("--model required without --kfold", file=sys.stderr)
        return 2
    model = load_model(args.model)
    probs = model.predict(dataset.windows, dataset.statics, dataset.semistatics)
    print(json.dumps({"examples": len(dataset), "accuracy": accuracy(probs, dataset.labels)}))
    return 0


def cmd_smt_calibrate(args) -> int:
    from .smt import fit_temperature, load_model, save_model
    from .smt.data import load_dataset
    from .smt.model import forward

    model = load_model(args.model)
    dataset = load_dataset(args.data)
    _, cache = forward(
        dataset.windows, dataset.statics, dataset.semistatics, model.params, model.cfg, model.norm
    )
    result = fit_temperature(cache["logits"], dataset.labels)
    model.tau = result.tau
    save_model(args.model, model)
    print(
        json.dumps(
            {
                "tau": round(result.tau, 4),
                "nll_before": round(result.nll_before, 6),
                "nll_after": round(result.nll_after, 6),
                "ece_before": round(result.ece_before, 6),
                "ece_after": round(result.ece_after, 6),
            }
        )
    )
    return 0


def cmd_smt_gradcheck(args) -> int:
    from .smt import format_report, run_gradcheck

    report = run_gradcheck(seed=args.seed)
    print(format_report(report))
    return 0 if all(e.max_rel_err < 1e-4 for e in report) else 1


if __name__ == "__main__":
    sys.exit(main())
