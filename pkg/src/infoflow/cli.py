"""Command line entry point: ``infoflow analyze | sweep | gen-fixture``.

Config files are ``key = value`` lines (``#`` comments, optional ``[run]``
header).  Keys match the long flag names with ``-`` written as ``_``:

    input_paths     whitespace/comma separated files or directories of CSVs;
                    relative paths resolve against the config file's folder
    index_id        instrument id (file stem) of the index
    k, l            history lengths (default 1, 1)
    d_grid          comma list, or ``start:stop:step`` with stop included
    flow_d          d for flows/histograms/summary: a number or ``equiprobable``
    surrogate_count shuffle replicates per direction (default 20)
    seed            master seed (default 0)
    output_dir      where result files go
    k_top, bin_width, n_bootstrap, workers, shuffle_both

Flags override config values.  Exit status: 0 ok, 1 usage error, 2 data
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import platform
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from infoflow import __version__, outputs
from infoflow._backend import BACKEND
from infoflow.entropy import EmbeddingSpec
from infoflow.errors import InfoFlowError, ParameterError
from infoflow.panel import align_panel, ingest_all, write_price_csv
from infoflow.pipeline import (
    DEFAULT_D_GRID,
    FLOW_D,
    cross_direction_summary,
    d_sweep,
    flows_at,
    state_probability_sweep,
    te_histograms,
)
from infoflow.returns import PriceSeries
from infoflow.surrogates import SurrogateConfig
from infoflow.synthetic import FIXTURE_START, ToyMarketSpec, gen_toy_market

log = logging.getLogger("infoflow")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.exc = exc


@dataclass
class RunConfig:
    input_paths: list = field(default_factory=list)
    index_id: str = ""
    k: int = 1
    l: int = 1
    d_grid: tuple = DEFAULT_D_GRID
    flow_d: float | str = FLOW_D
    surrogate_count: int = 20
    seed: int = 0
    output_dir: str = "out"
    alignment_policy: str = "intersect_dates"
    k_top: int = 10
    bin_width: float = 0.002
    n_bootstrap: int = 1000
    workers: int = 1
    shuffle_both: bool = False

    def validate(self):
        if not self.input_paths:
            raise UsageError("no input_paths given")
        if not self.index_id:
            raise UsageError("no index_id given")
        if self.alignment_policy != "intersect_dates":
            raise UsageError(f"unsupported alignment_policy {self.alignment_policy!r}")
        if not self.d_grid or any(not d >= 0 for d in self.d_grid):
            raise UsageError(f"d_grid must be nonempty and nonnegative: {self.d_grid}")
        if self.k < 1 or self.l < 1 or self.surrogate_count < 1:
            raise UsageError("k, l and surrogate_count must be >= 1")
        if isinstance(self.flow_d, str) and self.flow_d != "equiprobable":
            raise UsageError(f"flow_d must be a number or 'equiprobable', got {self.flow_d!r}")
        if not self.bin_width > 0:
            raise UsageError("bin_width must be positive")
        return self

    def echo(self):
        """Config as recorded in the manifest; ``output_dir`` is where the manifest itself lives."""
        out = asdict(self)
        del out["output_dir"]
        out["input_paths"] = [str(p) for p in self.input_paths]
        out["d_grid"] = list(self.d_grid)
        return out


def parse_d_grid(text):
    text = str(text).strip()
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise UsageError(f"bad d_grid range {text!r}") from None
        if step <= 0 or stop < start:
            raise UsageError(f"bad d_grid range {text!r}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(n))
    try:
        grid = sorted({float(v) for v in text.replace(",", " ").split()})
    except ValueError:
        raise UsageError(f"bad d_grid {text!r}") from None
    return tuple(grid)


def parse_flow_d(text):
    if isinstance(text, (int, float)):
        return float(text)
    text = str(text).strip()
    if text == "equiprobable":
        return text
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"flow_d must be a number or 'equiprobable', got {text!r}") from None


def _parse_bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


_CONVERTERS = {
    "k": int, "l": int, "surrogate_count": int, "seed": int, "k_top": int,
    "n_bootstrap": int, "workers": int, "bin_width": float,
    "d_grid": parse_d_grid, "flow_d": parse_flow_d, "shuffle_both": _parse_bool,
}


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {path} not found")
    text = path.read_text()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in known:
                raise UsageError(f"{path}: unknown key {key!r}")
            if key == "input_paths":
                values[key] = [str(path.parent / p) for p in raw.replace(",", " ").split()]
            else:
                try:
                    values[key] = _CONVERTERS.get(key, str)(raw)
                except ValueError:
                    raise UsageError(f"{path}: bad value for {key}: {raw!r}") from None
    return values


def build_config(args) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values).validate()


def _stage(name, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except InfoFlowError as exc:
        raise StageError(name, exc) from exc


def _manifest(config, command, panel, files):
    return {
        "tool": "infoflow",
        "version": __version__,
        "backend": BACKEND,
        "versions": {"python": platform.python_version(), "numpy": np.__version__},
        "command": command,
        "seed": config.seed,
        "config": config.echo(),
        "index_id": panel.index.instrument_id,
        "stocks": [s.instrument_id for s in panel.stocks],
        "n_returns": len(panel),
        "dropped_instruments": list(panel.dropped_instruments),
        "dropped_dates": list(panel.dropped_dates),
        "files": list(files),
    }


def compute(config: RunConfig, command: str = "analyze") -> dict:
    """All output files of a run as ``{name: text}``; nothing is written."""
    spec = _stage("config", EmbeddingSpec, config.k, config.l)
    cfg = _stage("config", SurrogateConfig, config.surrogate_count, config.seed, config.shuffle_both)
    prices = _stage("ingest", ingest_all, config.input_paths, config.workers)
    panel = _stage("align", align_panel, prices, config.index_id, spec.window + 2)
    grid = tuple(sorted(set(config.d_grid)))
    sweep = _stage("sweep", d_sweep, panel.index, panel.stocks, grid, spec, cfg, config.workers)
    files = {"sweep.csv": outputs.render_sweep(sweep, len(panel.stocks))}

    if command == "analyze":
        probs = _stage("state_probs", state_probability_sweep, [panel.index, *panel.stocks], grid)
        files["state_probs.csv"] = outputs.render_state_probs(probs, grid, panel.index.instrument_id)
        if not isinstance(config.flow_d, str) and config.flow_d in grid:
            flows = list(sweep.flows[grid.index(config.flow_d)])
        else:
            flows = _stage("flows", flows_at, panel.index, panel.stocks, config.flow_d, spec, cfg, config.workers)
        files["flows.csv"] = outputs.render_flows(flows)
        hists = _stage("histograms", te_histograms, flows, config.bin_width)
        files["histograms.csv"] = outputs.render_histograms(hists)
        if len(flows) >= 2:
            summary = _stage("summary", cross_direction_summary, flows, config.k_top, config.n_bootstrap, config.seed)
            files["summary.json"] = outputs.json_text(outputs.summary_dict(summary, config.flow_d))
        else:
            log.warning("only %d stock(s); correlation undefined", len(flows))
            te_is = [f.te_index_to_stock for f in flows]
            te_si = [f.te_stock_to_index for f in flows]
            files["summary.json"] = outputs.json_text({
                "d": config.flow_d, "n_pairs": len(flows), "pearson_r": None, "pearson_r_stderr": None,
                "fraction_reverse_dominant": float(np.mean(np.array(te_si) > np.array(te_is))),
                "mean_te_i_to_s": float(np.mean(te_is)), "mean_te_s_to_i": float(np.mean(te_si)),
                "top_k_i_to_s": [{"stock_id": f.stock_id, "te": f.te_index_to_stock} for f in flows],
                "top_k_s_to_i": [{"stock_id": f.stock_id, "te": f.te_stock_to_index} for f in flows],
            })

    names = [n for n in outputs.OUTPUT_FILES if n in files] + ["manifest.json"]
    files["manifest.json"] = outputs.json_text(_manifest(config, command, panel, names))
    return {n: files[n] for n in names}


def write_outputs(files: dict, output_dir) -> list[Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        written.append(path)
    return written


def run(config: RunConfig, command: str = "analyze") -> int:
    """Run the pipeline and write its files; returns the exit status."""
    try:
        files = compute(config, command)
        write_outputs(files, config.output_dir)
    except StageError as exc:
        log.error("failed in stage %s: %s", exc.stage, exc.exc)
        return EXIT_DATA
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL
    log.info("wrote %d files to %s", len(files), config.output_dir)
    return EXIT_OK


def gen_fixture(out_dir, spec: ToyMarketSpec, write_config=True) -> list[Path]:
    """Write the toy market as price CSVs (starting at 100) plus ``run.cfg``."""
    index, stocks = gen_toy_market(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for r in [index, *stocks]:
        dates = np.concatenate([[FIXTURE_START], r.dates])
        closes = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(r.values)]))
        path = out / f"{r.instrument_id}.csv"
        write_price_csv(path, PriceSeries(r.instrument_id, dates, closes))
        written.append(path)
    if write_config:
        cfg = out / "run.cfg"
        cfg.write_text(
            "# toy market: n_stocks={0.n_stocks} coupling={0.coupling} coupling_spread={0.coupling_spread} "
            "idiosyncratic_vol={0.idiosyncratic_vol} length={0.length} seed={0.seed}\n"
            "input_paths = .\n"
            "index_id = {1}\n"
            "d_grid = 0:0.06:0.0025\n"
            "flow_d = 0.015\n"
            "surrogate_count = 20\n"
            "seed = {0.seed}\n".format(spec, index.instrument_id)
        )
        written.append(cfg)
    return written


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _run_flags(p, sweep_only=False):
    p.add_argument("inputs", nargs="*", help="price CSV files or directories")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--index-id", dest="index_id")
    p.add_argument("-k", type=int, dest="k")
    p.add_argument("-l", type=int, dest="l")
    p.add_argument("--d-grid", dest="d_grid", type=parse_d_grid, help="comma list or start:stop:step")
    p.add_argument("--surrogate-count", dest="surrogate_count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output-dir", dest="output_dir")
    p.add_argument("--alignment-policy", dest="alignment_policy", choices=["intersect_dates"])
    p.add_argument("--workers", type=int)
    p.add_argument("--shuffle-both", dest="shuffle_both", action="store_const", const=True)
    if not sweep_only:
        p.add_argument("--flow-d", dest="flow_d", type=parse_flow_d)
        p.add_argument("--k-top", dest="k_top", type=int)
        p.add_argument("--bin-width", dest="bin_width", type=float)
        p.add_argument("--n-bootstrap", dest="n_bootstrap", type=int)


def make_parser():
    parser = _Parser(prog="infoflow", description="Transfer entropy between an index and its stocks.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _run_flags(sub.add_parser("analyze", help="full study: state probabilities, sweep, flows, summary"))
    _run_flags(sub.add_parser("sweep", help="mean transfer entropy against d only"), sweep_only=True)
    g = sub.add_parser("gen-fixture", help="write a synthetic toy-market panel as CSVs")
    g.add_argument("output_dir")
    g.add_argument("--n-stocks", type=int, default=20)
    g.add_argument("--coupling", type=float, default=0.8)
    g.add_argument("--vol", type=float, default=0.02, help="idiosyncratic volatility")
    g.add_argument("--length", type=int, default=10_000, help="number of returns")
    g.add_argument("--coupling-spread", type=float, default=0.25,
                   help="per-stock coupling is coupling * U(1 - spread, 1 + spread), capped at 1")
    g.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "gen-fixture":
            spec = ToyMarketSpec(args.n_stocks, args.coupling, args.vol, args.length, args.seed,
                                 args.coupling_spread)
            for path in gen_fixture(args.output_dir, spec):
                log.info("wrote %s", path)
            return EXIT_OK
        if args.inputs:
            args.input_paths = list(args.inputs)
        config = build_config(args)
    except (UsageError, ParameterError) as exc:
        print(f"infoflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config, args.command)


if __name__ == "__main__":
    sys.exit(main())
