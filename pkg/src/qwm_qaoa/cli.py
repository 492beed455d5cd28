"""Command line entry point: ``qwm-qaoa {ingest,bks,solve,sweep,report}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .driver import DEFAULT_BUDGET, run
from .knapsack import KnapsackInstance, format_bits, load_instance, solve_brute_force, solve_dp
from .oracle import qubit_count
from .portfolio import encode_to_knapsack, expected_returns, load_fixtures, load_prices

log = logging.getLogger("qwm_qaoa")

SWEEP_HEADER = ["instance", "axis", "value", "ratio_best", "ratio_expectation", "wall_ms"]
BRUTE_FORCE_CHECK_LIMIT = 20


class UsageError(Exception):
    """Bad command-line input; exits with status 2."""


@dataclass
class ExperimentConfig:
    fixture: str | None = None
    prices: str | None = None
    tickers: tuple[str, ...] | None = None
    start: str | None = None
    end: str | None = None
    instance: str | None = None
    p: int = 3
    m: int = 3
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    shots: int = 0
    out: str | None = None
    strategy: str = "layerwise"
    backend: str = "circuit"

    def __post_init__(self):
        sources = [s for s in (self.fixture, self.prices, self.instance) if s is not None]
        if len(sources) != 1:
            raise UsageError("give exactly one of --fixture, --prices or --instance")
        if self.prices is not None and not self.tickers:
            raise UsageError("--prices needs --tickers")
        if self.p < 1 or self.m < 1:
            raise UsageError("--p and --m must be >= 1")
        if self.budget < 1:
            raise UsageError("--budget must be >= 1")
        if self.shots < 0:
            raise UsageError("--shots must be >= 0")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "ExperimentConfig":
        tickers = None
        if args.tickers:
            tickers = tuple(t.strip() for t in args.tickers.split(",") if t.strip())
        strategy = "joint" if getattr(args, "joint_opt", False) else getattr(args, "strategy", "layerwise")
        return cls(
            fixture=args.fixture,
            prices=args.prices,
            tickers=tickers,
            start=args.start,
            end=args.end,
            instance=args.instance,
            p=getattr(args, "p", 3),
            m=getattr(args, "m", 3),
            budget=getattr(args, "budget", DEFAULT_BUDGET),
            seed=getattr(args, "seed", 0),
            shots=getattr(args, "shots", 0),
            out=args.out,
            strategy=strategy,
            backend=getattr(args, "backend", "circuit"),
        )

    def instances(self) -> list[KnapsackInstance]:
        if self.fixture is not None:
            fixtures = load_fixtures()
            if self.fixture == "all":
                return [f.instance for f in fixtures.values()]
            if self.fixture not in fixtures:
                raise UsageError(f"unknown fixture {self.fixture!r}; choose from all, {', '.join(fixtures)}")
            return [fixtures[self.fixture].instance]
        if self.prices is not None:
            prices = load_prices(self.prices, self.tickers, self.start, self.end)
            return [encode_to_knapsack(expected_returns(prices), name=Path(self.prices).stem)]
        inst = load_instance(self.instance)
        if inst.name is None:
            inst = KnapsackInstance(inst.values, inst.weights, inst.capacity, inst.tickers, Path(self.instance).stem)
        return [inst]

    def instance_(self) -> KnapsackInstance:
        found = self.instances()
        if len(found) != 1:
            raise UsageError("this command takes a single instance")
        return found[0]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _info(msg: str, out: str | None) -> None:
    # summaries go to stdout only when stdout is not carrying the data
    print(msg, file=sys.stdout if out is not None else sys.stderr)


def cmd_ingest(cfg: ExperimentConfig) -> int:
    inst = cfg.instance_()
    _emit(json.dumps(inst.to_dict(), indent=2) + "\n", cfg.out)
    _info(f"items={inst.n_items} capacity={inst.capacity} qubits={qubit_count(inst)}", cfg.out)
    return 0


def cmd_bks(cfg: ExperimentConfig) -> int:
    inst = cfg.instance_()
    sol = solve_dp(inst)
    lines = [f"bits={sol.bitstring} value={sol.value:.6f} weight={sol.weight}"]
    status = 0
    if inst.n_items <= BRUTE_FORCE_CHECK_LIMIT:
        bf = solve_brute_force(inst)
        agree = abs(bf.value - sol.value) <= 1e-9
        lines.append(f"brute_force={'agree' if agree else 'MISMATCH'} value={bf.value:.6f}")
        status = 0 if agree else 1
    _emit("\n".join(lines) + "\n", cfg.out)
    if cfg.out is not None:
        print(lines[0])
    return status


def cmd_solve(cfg: ExperimentConfig, timing: bool = False) -> int:
    inst = cfg.instance_()
    report = run(
        inst, p=cfg.p, m=cfg.m, budget=cfg.budget, seed=cfg.seed, shots=cfg.shots,
        strategy=cfg.strategy, backend=cfg.backend,
    )
    _emit(report.to_json(timing=timing), cfg.out)
    _info(
        f"ratio_best={report.ratio_best:.4f} ratio_expectation={report.ratio_expectation:.4f} "
        f"best={format_bits(report.best_bits)}",
        cfg.out,
    )
    return 0


def parse_range(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected A..B") from None
    if lo < 1 or hi < lo:
        raise UsageError(f"bad range {text!r}; need 1 <= A <= B")
    return list(range(lo, hi + 1))


def sweep_rows(cfg: ExperimentConfig, axis: str, values: list[int]) -> list[dict]:
    rows = []
    for inst in cfg.instances():
        for v in values:
            p, m = (v, cfg.m) if axis == "p" else (cfg.p, v)
            log.info("sweep %s %s=%d", inst.name, axis, v)
            report = run(
                inst, p=p, m=m, budget=cfg.budget, seed=cfg.seed, shots=cfg.shots,
                strategy=cfg.strategy, backend=cfg.backend,
            )
            rows.append({
                "instance": inst.name or "instance",
                "axis": axis,
                "value": v,
                "ratio_best": f"{report.ratio_best:.6f}",
                "ratio_expectation": f"{report.ratio_expectation:.6f}",
                "wall_ms": f"{report.wall_ms:.0f}",
            })
    return rows


def cmd_sweep(cfg: ExperimentConfig, axis: str, values: list[int]) -> int:
    rows = sweep_rows(cfg, axis, values)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _emit(buf.getvalue(), cfg.out)
    if cfg.out is not None:
        print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def cmd_report(path: str, top: int = 10) -> int:
    """Print a short human-readable summary of a solve report."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    sched = data["schedule"]
    print(f"p={sched['p']} m={sched['m']} seed={data['seed']} evaluations={data['evaluations']}")
    print(f"gammas={', '.join(f'{g:.4f}' for g in sched['gammas'])}")
    print(f"betas={', '.join(f'{b:.4f}' for b in sched['betas'])}")
    print(f"bks={data['bks']['bits']} value={data['bks']['value']:.4f}")
    best = data["best_feasible"]
    print(f"best={best['bits']} value={best['value']:.4f} probability={best['probability']:.4f}")
    print(f"ratio_best={data['ratio_best']:.4f} ratio_expectation={data['ratio_expectation']:.4f}")
    print("top outcomes:")
    for bits, pr in list(data["distribution"].items())[:top]:
        print(f"  {bits} {pr:.4f}")
    return 0


def _add_source(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("instance source (exactly one)")
    g.add_argument("--fixture", help="bundled instance stocks2..stocks8 ('all' for sweep)")
    g.add_argument("--prices", help="price CSV with a date column and one column per ticker")
    g.add_argument("--tickers", help="comma-separated tickers to read from --prices")
    g.add_argument("--start", help="first date (inclusive, ISO)")
    g.add_argument("--end", help="last date (inclusive, ISO)")
    g.add_argument("--instance", help="instance JSON file")
    sp.add_argument("--out", help="output file (default: standard output)")


def _add_run(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--p", type=int, default=3, help="circuit layers")
    sp.add_argument("--m", type=int, default=3, help="Trotter steps")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="grid points per layer scan")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--shots", type=int, default=0, help="0 = exact probabilities")
    sp.add_argument("--strategy", choices=["layerwise", "greedy", "joint"], default="layerwise")
    sp.add_argument("--joint-opt", action="store_true", help="shorthand for --strategy joint")
    sp.add_argument("--backend", choices=["circuit", "sector"], default="circuit",
                    help="simulation of the final state (the search always uses the sector form)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwm-qaoa", description="Knapsack portfolio selection with QWM-QAOA")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", help="build a knapsack instance JSON")
    _add_source(sp)
    sp = sub.add_parser("bks", help="exact classical optimum")
    _add_source(sp)
    sp = sub.add_parser("solve", help="optimise QWM-QAOA and write a run report")
    _add_source(sp)
    _add_run(sp)
    sp.add_argument("--timing", action="store_true", help="include wall time in the report")
    sp = sub.add_parser("sweep", help="sweep p or m and write CSV")
    _add_source(sp)
    _add_run(sp)
    sp.add_argument("--axis", choices=["p", "m"], required=True)
    sp.add_argument("--range", dest="range_", required=True, help="A..B inclusive")
    sp = sub.add_parser("report", help="summarise a solve report")
    sp.add_argument("path")
    sp.add_argument("--top", type=int, default=10)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "report":
            return cmd_report(args.path, args.top)
        cfg = ExperimentConfig.from_args(args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "bks":
            return cmd_bks(cfg)
        if args.command == "solve":
            return cmd_solve(cfg, timing=args.timing)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.axis, parse_range(args.range_))
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
