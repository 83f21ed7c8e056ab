"""Command-line front end: one subcommand per experiment, CSV/JSON into ``--out``.

Exit codes: 0 success with all self-checks passing, 1 usage or config error,
2 a self-check failed.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from tdcim import analysis, export
from tdcim.alloc import TilePool, WorkloadProfile, account, allocate, report_rows, tile_op_counts
from tdcim.array import Fidelity, TdCimArray
from tdcim.cell import Solver, XorAndCell, drive_for_and, drive_for_search, logic_output
from tdcim.chain import Topology, analytical_delays, transient_delays, transient_simulate
from tdcim.config import ConfigError, ExperimentConfig, load
from tdcim.hdc import Fabric, HdcModel, UntrainedError, load_csv, synthetic_blobs

log = logging.getLogger("tdcim")

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2
TRANSIENT_SLOPE_TOL = 0.05
ANALYTICAL_SLOPE_TOL = 1e-9


def _solver(cfg: ExperimentConfig) -> Solver:
    return Solver(cfg.array.solver)


def _finish(checks: dict[str, bool]) -> int:
    for name, ok in checks.items():
        log.info("%s %s", "PASS" if ok else "FAIL", name)
    return EXIT_OK if all(checks.values()) else EXIT_CHECK


def cmd_cell_table(cfg: ExperimentConfig, out: Path) -> int:
    rng = np.random.default_rng(cfg.seed)
    vdd, v_read = cfg.chain.vdd, cfg.array.v_read
    cells = {bit: XorAndCell(cfg.device).store(bit, rng) for bit in (0, 1)}
    cols = ["mode", "stored", "input", "v_read", "v_int", "logic_out"]
    truth, checks = [], {}
    for solver in (Solver.RAIL_REFERENCED, Solver.FIXED_POINT):
        ok = True
        for mode, drive_fn, expect in (("xor", drive_for_search, lambda s, i: s ^ i),
                                       ("and", drive_for_and, lambda s, i: s & i)):
            for stored in (0, 1):
                for bit in (0, 1):
                    v_int = cells[stored].resolve_vint(drive_fn(bit, vdd, v_read), solver)
                    out_bit = logic_output(v_int, vdd)
                    ok &= out_bit == expect(stored, bit)
                    if solver is _solver(cfg):
                        truth.append([mode, stored, bit, v_read, v_int, out_bit])
        checks[f"truth table ({solver.value})"] = ok
    meta = cfg.flat()
    export.write_csv(out / "cell_truth.csv", cols, truth, meta)

    sweep = []
    for mode, drive_fn in (("xor", drive_for_search), ("and", drive_for_and)):
        for stored in (0, 1):
            for bit in (0, 1):
                for vr in cfg.mc.v_read_sweep:
                    v_int = cells[stored].resolve_vint(drive_fn(bit, vdd, vr), _solver(cfg))
                    sweep.append([mode, stored, bit, vr, v_int, logic_output(v_int, vdd)])
    export.write_csv(out / "cell_sweep.csv", cols, sweep, meta)
    return _finish(checks)


def _sweep_acts(n: int) -> np.ndarray:
    # first k stages active, k = 0..n
    return np.tril(np.ones((n + 1, n), dtype=bool), k=-1)


def cmd_chain_sweep(cfg: ExperimentConfig, out: Path) -> int:
    meta = cfg.flat()
    checks, slopes = {}, []
    for topology in (Topology.BUFFER, Topology.INVERTER):
        for n in (16, 32):
            chain = replace(cfg.chain, n_stages=n, topology=topology)
            acts = _sweep_acts(n)
            k = acts.sum(axis=1)
            engines = {"analytical": analytical_delays(chain, acts),
                       "transient": transient_delays(chain, acts)[:3]}
            for engine, (t_r, t_f, t_t) in engines.items():
                export.write_delay_sweep(out / f"chain_sweep_{topology.value}_{n}_{engine}.csv",
                                         k, t_r, t_f, t_t, meta)
                slope = analysis.fit_slope(k, t_t)
                rel = abs(slope - chain.t_c) / chain.t_c
                tol = TRANSIENT_SLOPE_TOL if engine == "transient" else ANALYTICAL_SLOPE_TOL
                checks[f"{topology.value}-{n} {engine} slope"] = rel <= tol
                slopes.append([topology.value, n, engine, slope, chain.t_c, rel])
    export.write_csv(out / "chain_slopes.csv",
                     ["topology", "n_stages", "engine", "slope_s", "t_c_s", "rel_error"], slopes, meta)

    chain = replace(cfg.chain, n_stages=32, topology=Topology.INVERTER)
    act = np.zeros(32, dtype=bool)
    act[:8] = True
    res = transient_simulate(chain, act)
    export.write_waveform(out / "chain_waveform_inverter_32.csv", res.times, res.voltages, meta, stride=20)
    return _finish(checks)


def cmd_montecarlo(cfg: ExperimentConfig, out: Path) -> int:
    meta = cfg.flat()
    table = analysis.mc_cell_vint(cfg.mc, cfg.device, cfg.chain.vdd, _solver(cfg))
    export.write_csv(out / "mc_cell_vint.csv", ["v_read", "case", "mean", "std", "min", "max"],
                     table.summary(), meta)
    samples = [[t, vr, s, q, table.samples[t, i, c]]
               for t in range(table.samples.shape[0])
               for i, vr in enumerate(table.v_read)
               for c, (s, q) in enumerate(table.cases)]
    export.write_csv(out / "mc_cell_samples.csv", ["trial", "v_read", "stored", "search", "v_int"],
                     samples, meta)

    results = analysis.mc_chain_delay(cfg.mc, cfg.chain, cfg.device, cfg.array.v_read, solver=_solver(cfg))
    levels = []
    for r in results:
        for k in r.levels:
            d = r.delays[:, k]
            levels.append([r.length, k, d.min(), d.max(), d.mean()])
    export.write_csv(out / "mc_chain_levels.csv",
                     ["n_stages", "n_active", "t_min_s", "t_max_s", "t_mean_s"], levels, meta)
    export.write_csv(out / "mc_chain_summary.csv",
                     ["n_stages", "pass_rate", "sense_error_rate", "t_c_s", "sense_margin_s"],
                     [[r.length, r.pass_rate, r.sense_error_rate, r.meta["t_c"], cfg.mc.sense_margin]
                      for r in results], meta)
    rates = [r.pass_rate for r in results]
    by_len = [rate for _, rate in sorted(zip(cfg.mc.chain_lengths, rates))]
    return _finish({"pass rate non-increasing in chain length":
                    all(a >= b for a, b in zip(by_len, by_len[1:]))})


def cmd_dse(cfg: ExperimentConfig, out: Path) -> int:
    base = replace(cfg.chain, topology=Topology(cfg.dse.topology),
                   n_stages=2 if cfg.dse.topology == "inverter" else 1)
    points = analysis.dse_energy_delay(cfg.dse.spec(), base)
    export.write_csv(out / "dse.csv",
                     ["c_load_f", "n_stages", "vdd_v", "energy_j", "activation_energy_j", "delay_s"],
                     [[p.c_load, p.n_stages, p.vdd, p.energy, p.activation_energy, p.delay] for p in points],
                     cfg.flat())
    energy_up, delay_down = True, True
    grid = {}
    for p in points:
        grid.setdefault((p.c_load, p.n_stages), []).append(p)
    for series in grid.values():
        series.sort(key=lambda p: p.vdd)
        energy_up &= all(a.energy < b.energy for a, b in zip(series, series[1:]))
        delay_down &= all(a.delay > b.delay for a, b in zip(series, series[1:]))
    return _finish({"diagonal contour within 1%": analysis.diagonal_deviation(points) <= 0.01,
                    "energy increasing in VDD": energy_up,
                    "delay decreasing in VDD": delay_down})


def _dataset(cfg: ExperimentConfig):
    h = cfg.hdc
    if h.dataset:
        path = Path(h.dataset)
        if not path.exists():
            raise ConfigError(f"dataset file not found: {path}")
        x, y = load_csv(path)
    else:
        x, y = synthetic_blobs(h.n_examples, h.n_features, h.n_classes, cfg.seed, h.spread)
    n_train = int(round(len(y) * h.train_fraction))
    return (x[:n_train], y[:n_train]), (x[n_train:], y[n_train:])


def _fabric(cfg: ExperimentConfig, record: bool = False) -> Fabric:
    h = cfg.hdc
    chain = replace(cfg.chain, n_stages=h.tile_cols, topology=Topology.INVERTER)
    array = TdCimArray(h.tile_rows, chain, cfg.device, cfg.array.v_read, _solver(cfg),
                       write_energy_per_cell=cfg.array.write_energy_per_cell,
                       sense_overhead=cfg.array.sense_overhead)
    return Fabric(array, Fidelity(cfg.fidelity), seed=cfg.seed, record=record)


def _train(cfg: ExperimentConfig, x, y, backend=None) -> HdcModel:
    model = HdcModel.create(x.shape[1], cfg.hdc.dim, cfg.seed, cfg.hdc.quant_bits)
    return model.train(x, y, backend)


def cmd_hdc_train(cfg: ExperimentConfig, out: Path, model_path: Path | None = None) -> int:
    (x, y), _ = _dataset(cfg)
    model = _train(cfg, x, y)
    out.mkdir(parents=True, exist_ok=True)
    model.save(model_path or out / "model.json")
    return EXIT_OK


def cmd_hdc_infer(cfg: ExperimentConfig, out: Path, model_path: Path | None = None) -> int:
    path = model_path or out / "model.json"
    if not path.exists():
        raise ConfigError(f"model file not found: {path}")
    model = HdcModel.load(path)
    _, (x, y) = _dataset(cfg)
    pred, sim = model.infer(x, _fabric(cfg))
    cols = ["index", "label", "predicted"] + [f"similarity_{c}" for c in model.labels]
    rows = [[i, int(t), int(p), *map(int, s)] for i, (t, p, s) in enumerate(zip(y, pred, sim))]
    export.write_csv(out / "predictions.csv", cols, rows, cfg.flat())
    log.info("accuracy %.4f", float((pred == y).mean()) if len(y) else float("nan"))
    return EXIT_OK


def cmd_hdc_benchmark(cfg: ExperimentConfig, out: Path) -> int:
    (x_tr, y_tr), (x_te, y_te) = _dataset(cfg)
    model = _train(cfg, x_tr, y_tr)
    sw_hv = model.encode(x_te)
    sw_pred, _ = model.infer(x_te)
    fabric = _fabric(cfg, record=True)
    fab_pred, _ = model.infer(x_te, fabric)
    fab_hv = model.encode(x_te, _fabric(cfg))
    accuracy = float((sw_pred == y_te).mean()) if len(y_te) else float("nan")

    profile = WorkloadProfile.from_receipts(fabric.mac_receipts, fabric.cam_receipts)
    h = cfg.hdc
    pool = allocate(TilePool(h.n_tiles, (h.tile_rows, h.tile_cols)), profile)
    report = account(pool, profile, write_energy_per_cell=cfg.array.write_energy_per_cell, task="hdc")
    expected_ops = tile_op_counts(model.base.n_features, model.dim, model.n_classes, len(y_te),
                                  model.quant_bits, (h.tile_rows, h.tile_cols))
    report.update({
        "accuracy_software": accuracy,
        "accuracy_fabric": float((fab_pred == y_te).mean()) if len(y_te) else float("nan"),
        "encodings_identical": bool(np.array_equal(sw_hv, fab_hv)),
        "predictions_identical": bool(np.array_equal(sw_pred, fab_pred)),
        "expected_ops": {"mac": expected_ops[0], "cam": expected_ops[1]},
    })
    export.write_json(out / "hdc_report.json", report, cfg.flat())
    export.write_csv(out / "hdc_breakdown.csv", ["task", "metric", "phase", "value", "percent"],
                     report_rows(report), cfg.flat())
    pct = report["percentages"]
    checks = {
        "energy percentages sum to 100": abs(sum(pct["energy"].values()) - 100) <= 0.01,
        "latency percentages sum to 100": abs(sum(pct["latency"].values()) - 100) <= 0.01,
        "op counts match tiling": (profile.mac_ops, profile.cam_ops) == expected_ops,
    }
    if cfg.device.sigma_vth == 0:
        checks["fabric matches software"] = report["encodings_identical"] and report["predictions_identical"]
    return _finish(checks)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--out", type=Path, help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--fidelity", choices=[f.value for f in Fidelity], help="fabric fidelity")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tdcim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("cell-table", parents=[common], help="cell truth table and V_READ sweep")
    sub.add_parser("chain-sweep", parents=[common], help="delay vs active stages")
    sub.add_parser("montecarlo", parents=[common], help="threshold-variation Monte Carlo")
    sub.add_parser("dse", parents=[common], help="energy/delay design-space sweep")
    hdc = sub.add_parser("hdc", parents=[common], help="hyperdimensional classifier")
    hdc.add_argument("action", choices=["train", "infer", "benchmark"])
    hdc.add_argument("--model", type=Path, help="model JSON path (default OUT/model.json)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        if args.fidelity is not None:
            cfg = replace(cfg, fidelity=args.fidelity)
        out = args.out or Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "cell-table":
            return cmd_cell_table(cfg, out)
        if args.command == "chain-sweep":
            return cmd_chain_sweep(cfg, out)
        if args.command == "montecarlo":
            return cmd_montecarlo(cfg, out)
        if args.command == "dse":
            return cmd_dse(cfg, out)
        if args.action == "train":
            return cmd_hdc_train(cfg, out, args.model)
        if args.action == "infer":
            return cmd_hdc_infer(cfg, out, args.model)
        return cmd_hdc_benchmark(cfg, out)
    except (ConfigError, UntrainedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
