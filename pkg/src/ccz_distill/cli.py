"""Command-line front end.

Subcommands: ``simulate``, ``enumerate-faults``, ``fit``, ``compare-overhead``,
``emit-circuit``, ``validate``. Configuration is a flat ``key = value`` text
file; every key is also a flag (``--shots 1000``) and flags win. Run any
subcommand with ``--print-config`` to see the resolved configuration.

Result files are deterministic given the configuration; wall-clock data goes
to a separate ``*.meta.json`` file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from . import __version__
from . import analysis as an
from .circuit import CircuitError, emit_text, parse_text, validate_connectivity
from .decoder import NullDecoder
from .noise import NoiseModel, apply_noise
from .protocol import ProtocolParams, assemble, circuit_stats, report_stats
from .sampler import (ErrorModel, Sampler, config_hash, csv_row, enumerate_faults,
                      estimate_rates, read_csv, write_csv)
from .tableau import NonDeterministicError, certify

DEFAULT_GRID = (1e-4, 2e-4, 3e-4, 5e-4, 7e-4, 1e-3)
DECODERS = ("lookup2", "lookup1", "none")
# Keys that never change results and are left out of the configuration hash.
RUNTIME_KEYS = ("threads", "out_dir", "svg")


@dataclass
class RunConfig:
    """Resolved experiment configuration (see ``--print-config``)."""

    d: int = 3
    rounds: int | None = None
    clifford_approx: bool = True
    ghz_lead: int = 2
    idle_during_mr: bool = True
    p: list[float] = field(default_factory=lambda: list(DEFAULT_GRID))
    shots: int = 100_000
    seed: int = 1
    threads: int = 1
    decoder: str = "lookup2"
    order: int = 1
    out_dir: str = "results"
    svg: bool = False
    k_max: int = 32
    dominance_factor: float = 5.0
    overhead_p: float = 1e-3
    zero_success: float | None = None
    zero_A: float = 300.0
    t_factory_rounds: int = 3
    t_factory_success: float = 0.7
    t_pl_coeff: float = 100.0
    eight_t_qubits: int = 16
    eight_t_rounds: int = 12
    eight_t_success: float = 0.98
    eight_t_pl_coeff: float = 28.0
    zero_ccz_rounds: int | None = None

    def validate(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not self.p:
            raise ValueError("p list is empty")
        for p in self.p:
            if not 0 <= p < 0.5:
                raise ValueError(f"p values must lie in [0, 0.5), got {p}")
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        self.protocol_params()
        self.assumptions()

    def protocol_params(self) -> ProtocolParams:
        return ProtocolParams(d=self.d, rounds=self.rounds, clifford_approx=self.clifford_approx,
                              ghz_lead=self.ghz_lead)

    def assumptions(self) -> an.BaselineAssumptions:
        names = {f.name for f in fields(an.BaselineAssumptions)}
        return an.BaselineAssumptions(**{k: v for k, v in self.to_dict().items() if k in names})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def result_keys(self) -> dict:
        """Configuration without the keys that cannot affect results."""
        return {k: v for k, v in self.to_dict().items() if k not in RUNTIME_KEYS}

    def hash(self) -> str:
        return config_hash(self.result_keys())

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(name: str, raw: str):
    """Convert the text value of config key ``name``."""
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if name not in kinds:
        raise ValueError(f"unknown config key '{name}'")
    kind = str(kinds[name])
    s = raw.strip()
    if "None" in kind and s.lower() in ("none", "auto", ""):
        return None
    if kind.startswith("bool"):
        if s.lower() in ("1", "true", "yes", "on"):
            return True
        if s.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got '{raw}'")
    try:
        if kind.startswith("list"):
            return [float(x) for x in s.replace(" ", "").split(",") if x]
        if kind.startswith("int"):
            return int(s)
        if kind.startswith("float"):
            return float(s)
    except ValueError:
        raise ValueError(f"{name}: cannot parse '{raw}'") from None
    return s


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        try:
            out[k] = _convert(k, v)
        except ValueError as e:
            raise ValueError(f"{source}:{lineno}: {e}") from None
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        values.update(parse_config_text(path.read_text(), str(path)))
    for f in fields(RunConfig):
        raw = getattr(args, f"cfg_{f.name}", None)
        if raw is not None:
            values[f.name] = _convert(f.name, raw)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# -- commands ---------------------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, float) and math.isnan(o):
        return None
    if hasattr(o, "item"):
        return o.item()
    if isinstance(o, an.ProtocolId):
        return o.value
    raise TypeError(f"not serialisable: {type(o)}")


def _clean(obj):
    """Replace non-finite floats so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k.value if isinstance(k, an.ProtocolId) else k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, an.ProtocolId):
        return obj.value
    return obj


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _meta(path: Path, command: str, cfg: RunConfig, start: float, extra: dict | None = None) -> None:
    meta = {"command": command, "version": __version__, "config_hash": cfg.hash(),
            "threads": cfg.threads, "out_dir": cfg.out_dir, "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(start)),
            "elapsed_s": round(time.time() - start, 3), **(extra or {})}
    _write_json(path, meta)


def _decoder(cfg: RunConfig, model: ErrorModel):
    if cfg.decoder == "none":
        return NullDecoder(model.obs.shape[1])
    return model.decoder(max_weight=2 if cfg.decoder == "lookup2" else 1)


def _simulate_points(cfg: RunConfig, log=print) -> list[tuple[float, object]]:
    ann = assemble(cfg.protocol_params())
    out = []
    for p in cfg.p:
        noisy = apply_noise(ann.circuit, NoiseModel(p, cfg.idle_during_mr))
        model = ErrorModel.from_circuit(noisy, cfg.clifford_approx)
        sampler = Sampler(noisy, _decoder(cfg, model), cfg.clifford_approx)
        t = sampler.sample(cfg.shots, cfg.seed, threads=cfg.threads)
        e = estimate_rates(t)
        log(f"p={p:g}: accepted {t.accepted}/{t.shots} ({e.p_accept:.4f}), "
            f"fails {t.logical_fail}, p_L={e.p_L:.3e}")
        out.append((p, t))
    return out


def cmd_simulate(cfg: RunConfig) -> int:
    start = time.time()
    out = _out_dir(cfg)
    h = cfg.hash()
    results = _simulate_points(cfg)
    write_csv(out / "simulate.csv", [csv_row(p, t, h) for p, t in results])
    records = []
    for p, t in results:
        e = estimate_rates(t)
        records.append({"p": p, "tally": t.to_dict(), "estimate": dataclasses.asdict(e)})
    _write_json(out / "simulate.json", _clean({"config": cfg.result_keys(), "config_hash": h, "points": records}))
    if cfg.svg:
        pts = [an.RatePoint.from_row(r) for r in read_csv(out / "simulate.csv") if r["p"] > 0]
        if pts:
            an.plot_rates_svg(pts, out / "rates.svg")
    _meta(out / "simulate.meta.json", "simulate", cfg, start)
    print(f"wrote {out / 'simulate.csv'}")
    return 0


def cmd_enumerate(cfg: RunConfig) -> int:
    start = time.time()
    out = _out_dir(cfg)
    ann = assemble(cfg.protocol_params())
    reports = []
    for p in cfg.p:
        if p <= 0:
            raise ValueError("fault enumeration needs p > 0")
        noisy = apply_noise(ann.circuit, NoiseModel(p, cfg.idle_during_mr))
        model = ErrorModel.from_circuit(noisy, cfg.clifford_approx)
        rep = enumerate_faults(noisy, cfg.order, decoder=_decoder(cfg, model), model=model)
        print(f"p={p:g} order {cfg.order}: {rep.configurations} configurations, "
              f"{rep.accepted_fail} malignant, leading coefficient {rep.leading_coefficient:.4g}")
        reports.append(rep.to_dict())
    path = out / f"enumerate_order{cfg.order}.json"
    _write_json(path, _clean({"config": cfg.result_keys(), "config_hash": cfg.hash(), "reports": reports}))
    _meta(out / f"enumerate_order{cfg.order}.meta.json", "enumerate-faults", cfg, start)
    print(f"wrote {path}")
    return 0


def _load_points(paths: Sequence[str]) -> list[an.RatePoint]:
    pts = []
    for path in paths:
        for r in read_csv(path):
            if r["p"] > 0 and r["accepted"] > 0:
                pts.append(an.RatePoint.from_row(r))
    return sorted(pts, key=lambda x: x.p)


def cmd_fit(cfg: RunConfig, files: Sequence[str], fixed_exponent: float | None) -> int:
    start = time.time()
    out = _out_dir(cfg)
    pts = _load_points(files)
    fit = an.fit_power_law(pts, fixed_exponent)
    print(f"p_L = {fit.A:.4g} * p^{fit.b:.3f}  (b error {fit.b_err:.3f}, {len(fit.used)} points)")
    _write_json(out / "fit.json", _clean({"inputs": [str(f) for f in files], "fit": fit.to_dict(),
                                          "points": [dataclasses.asdict(p) for p in pts]}))
    if cfg.svg:
        an.plot_rates_svg(pts, out / "fit.svg", fit)
    _meta(out / "fit.meta.json", "fit", cfg, start)
    return 0


def cmd_compare_overhead(cfg: RunConfig, tallies: Sequence[str]) -> int:
    start = time.time()
    out = _out_dir(cfg)
    ann = assemble(cfg.protocol_params())
    depth = report_stats(ann).depth
    success, source = cfg.zero_success, "config"
    if success is None and tallies:
        rows = [r for f in tallies for r in read_csv(f)]
        row = min(rows, key=lambda r: abs(r["p"] - cfg.overhead_p))
        success, source = row["p_accept"], f"tally at p={row['p']:g}"
    if success is None:
        sub = dataclasses.replace(cfg, p=[cfg.overhead_p])
        (_, t), = _simulate_points(sub)
        success, source = estimate_rates(t).p_accept, f"simulated at p={cfg.overhead_p:g}"
    models = an.build_models(success, cfg.zero_A, depth, cfg.assumptions())
    ks = range(1, cfg.k_max + 1)
    rows = an.overhead_table(models, ks)
    with open(out / "overhead.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=["protocol", "k", "spacetime", "success"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    zero = models[an.ProtocolId.ZERO_CCZ]
    dom = {}
    for pid in (an.ProtocolId.FOUR_T, an.ProtocolId.SEVEN_T, an.ProtocolId.EIGHT_T):
        r = an.dominance(zero, models[pid], cfg.k_max, cfg.dominance_factor)
        dom[pid.value] = dataclasses.asdict(r)
        print(f"{pid.value}: min cost ratio {r.min_ratio:.2f} -> "
              f"{'holds' if r.holds else 'fails'} (factor {cfg.dominance_factor:g})")
    pl = {pid.value: an.baseline_pl(m, cfg.overhead_p) for pid, m in models.items()}
    _write_json(out / "overhead.json", _clean({
        "config": cfg.result_keys(), "zero_success": success, "zero_success_source": source,
        "models": {pid.value: dataclasses.asdict(m) for pid, m in models.items()},
        "p_L": pl, "dominance": dom}))
    if cfg.svg:
        an.plot_overhead_svg(models, ks, out / "overhead.svg")
    _meta(out / "overhead.meta.json", "compare-overhead", cfg, start)
    print(f"wrote {out / 'overhead.csv'}")
    return 0


def cmd_emit_circuit(cfg: RunConfig, output: str | None, noisy_p: float | None) -> int:
    circ = assemble(cfg.protocol_params()).circuit
    if noisy_p is not None:
        circ = apply_noise(circ, NoiseModel(noisy_p, cfg.idle_during_mr))
    text = emit_text(circ)
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text)
        print(f"wrote {output}")
    return 0


def cmd_validate(path: str, clifford_approx: bool) -> int:
    text = Path(path).read_text()
    try:
        circ = parse_text(text)
    except CircuitError as e:
        print(f"FAIL {path}: {e}")
        return 1
    ok = True
    bad = validate_connectivity(circ)
    for v in bad:
        print(f"FAIL connectivity: {v}")
    ok &= not bad
    try:
        certify(circ.without_noise(), clifford_approx)
        print("determinism: all detectors and observables deterministic")
    except NonDeterministicError as e:
        print(f"FAIL determinism: {e}")
        ok = False
    stats = circuit_stats(circ)
    print(" ".join(f"{k}={v}" for k, v in stats.items()))
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


# -- argument parsing -------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    g = p.add_argument_group("configuration overrides")
    for f in fields(RunConfig):
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}", metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccz-distill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hlp in (("simulate", "Monte Carlo over the p grid"),
                      ("enumerate-faults", "exhaustive order-1/2 fault insertion"),
                      ("fit", "power-law fit of tally CSVs"),
                      ("compare-overhead", "space-time overhead comparison"),
                      ("emit-circuit", "write the protocol circuit as text"),
                      ("validate", "check a circuit file")):
        sp = sub.add_parser(name, help=hlp)
        _add_config_flags(sp)
        if name == "fit":
            sp.add_argument("files", nargs="+", help="tally CSV files")
            sp.add_argument("--fixed-exponent", type=float, default=None)
        elif name == "compare-overhead":
            sp.add_argument("--tallies", nargs="*", default=[], help="tally CSVs for the measured success")
        elif name == "emit-circuit":
            sp.add_argument("-o", "--output", default=None, help="output file (default stdout)")
            sp.add_argument("--noisy", type=float, default=None, metavar="P", help="insert noise at P")
        elif name == "validate":
            sp.add_argument("file", help="circuit text file")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(cfg.to_text())
            return 0
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "enumerate-faults":
            return cmd_enumerate(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, args.files, args.fixed_exponent)
        if args.command == "compare-overhead":
            return cmd_compare_overhead(cfg, args.tallies)
        if args.command == "emit-circuit":
            return cmd_emit_circuit(cfg, args.output, args.noisy)
        if args.command == "validate":
            return cmd_validate(args.file, cfg.clifford_approx)
    except (ValueError, OSError, NonDeterministicError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
