"""Command-line front end.

Subcommands: ``test`` (one Granger-causality question), ``network`` (all
pairwise tests plus JSON/DOT/heat-map exports), ``paths``/``cycles``/
``cluster`` (graph analytics on a fresh or re-loaded network),
``simulate`` (Monte Carlo size/power), and ``convert`` (gas concentration
to radiative forcing).

Exit codes: 0 success, 2 validation error, 3 numeric failure,
4 infeasible test.  Partial outputs are removed on failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    HdgcError,
    InfeasibleTestError,
    NumericError,
    ValidationError,
)
from .forcing import Gas, GasConcentrationRecord, concentration_to_forcing
from .network import (
    CausalNetwork,
    build_network,
    cycles_through,
    greedy_modularity_clusters,
    simple_paths,
)
from .panel import LagSpec, demean, difference, load_panel
from .pdslm import GcQuery, pds_lm_test, select_lag_length
from .simulate import rejection_rate

WHITE_BIN_THRESHOLD = 0.15


def _fmt(value) -> str:
    """Deterministic literal for JSON/CSV: 17 significant digits for floats."""
    if isinstance(value, float):
        if np.isnan(value):
            return "null"
        if np.isinf(value):
            return '"inf"' if value > 0 else '"-inf"'
        return f"{value:.17g}"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return "null"
    return json.dumps(value)


def _to_json(value, indent: int = 0) -> str:
    """Recursive JSON writer with fixed float formatting."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {_to_json(v, indent + 1)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{inner}{_to_json(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    return _fmt(value)


def write_json(payload: dict, path: Path) -> None:
    path.write_text(_to_json(payload) + "\n", encoding="utf-8")


def emit_heatmap_data(matrix: np.ndarray, labels, path: Path, decimals: int = 4) -> None:
    """Write a labeled CSV heat map (display rounding) plus a raw sidecar.

    The display file rounds to ``decimals`` decimals; the ``*_raw.csv``
    sidecar keeps full precision so renderers can rebin.
    """
    matrix = np.asarray(matrix, dtype=float)
    labels = list(labels)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError("heat-map matrix must be square")
    if len(labels) != matrix.shape[0]:
        raise ValidationError("heat-map labels must match matrix size")

    def rows(fmt):
        lines = ["," + ",".join(labels)]
        for i, lab in enumerate(labels):
            lines.append(lab + "," + ",".join(fmt(v) for v in matrix[i]))
        return "\n".join(lines) + "\n"

    def display(v):
        return "" if np.isnan(v) else f"{v:.{decimals}f}"

    def raw(v):
        return "" if np.isnan(v) else f"{v:.17g}"

    path = Path(path)
    path.write_text(rows(display), encoding="utf-8")
    sidecar = path.with_name(path.stem + "_raw" + path.suffix)
    sidecar.write_text(rows(raw), encoding="utf-8")


def pvalue_bin(p: float) -> str:
    """Display bin for a p-value cell; 'white' marks p >= 0.15."""
    if np.isnan(p):
        return "na"
    if p >= WHITE_BIN_THRESHOLD:
        return "white"
    for edge, label in ((0.01, "<0.01"), (0.05, "<0.05"), (0.10, "<0.10")):
        if p < edge:
            return label
    return "<0.15"


def emit_pvalue_bins(matrix: np.ndarray, labels, path: Path) -> None:
    matrix = np.asarray(matrix, dtype=float)
    labels = list(labels)
    lines = ["," + ",".join(labels)]
    for i, lab in enumerate(labels):
        lines.append(lab + "," + ",".join(pvalue_bin(v) for v in matrix[i]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class RunConfig:
    """Validated bundle of CLI options for one invocation."""

    mode: str
    data: str | None = None
    time_col: str = "year"
    variables: list[str] | None = None
    trim_common: bool = False
    do_demean: bool = False
    diff_orders: dict[str, int] = field(default_factory=dict)
    caused: list[str] = field(default_factory=list)
    causing: list[str] = field(default_factory=list)
    p: int | None = None
    p_auto: bool = False
    p_max: int = 8
    d: int = 2
    alpha: float = 0.1
    statistic: str = "chi2"
    selection: str = "adaptive"
    n_lambda: int = 100
    lambda_ratio: float = 1e-3
    df_augment_per_equation: bool = False
    threads: int = 1
    out_dir: str = "."
    json_path: str | None = None
    network_path: str | None = None
    source: str | None = None
    target: str | None = None
    via: str | None = None
    max_len: int | None = None
    dgp: str = "h0"
    reps: int = 1000
    T: int = 300
    strength: float = 0.4
    seed: int = 0
    gas: str | None = None
    concentration: float | None = None
    co2_baseline: float = 280.0
    ch4_baseline: float = 700.0
    n2o_baseline: float = 275.0

    def __post_init__(self):
        if self.p is not None and self.p_auto:
            raise ValidationError("--p and --p-auto are mutually exclusive")
        if self.mode in ("test", "network") and self.p is None and not self.p_auto:
            raise ValidationError("one of --p or --p-auto is required")
        if self.threads < 1:
            raise ValidationError("--threads must be >= 1")


def _parse_diff_spec(text: str) -> dict[str, int]:
    orders: dict[str, int] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ValidationError(
                f"--difference entries must look like name:order, got {chunk!r}"
            )
        name, order = chunk.rsplit(":", 1)
        try:
            orders[name.strip()] = int(order)
        except ValueError:
            raise ValidationError(f"difference order {order!r} is not an integer") from None
    return orders


def _load_prepared_panel(config: RunConfig):
    if config.data is None:
        raise ValidationError("--data is required for this subcommand")
    panel = load_panel(
        config.data,
        columns=config.variables,
        time_column=config.time_col,
        trim_common=config.trim_common,
    )
    if config.diff_orders:
        panel = difference(panel, config.diff_orders)
    if config.do_demean:
        panel = demean(panel)
    return panel


def _resolve_p(config: RunConfig, panel) -> int:
    if config.p is not None:
        return config.p
    return select_lag_length(panel, config.p_max)


def _result_payload(res, p: int, d: int) -> dict:
    return {
        "caused": list(res.query.caused),
        "causing": list(res.query.causing),
        "p": p,
        "d": d,
        "lm": res.lm_stat,
        "df": res.df,
        "p_chi2": res.p_chi2,
        "p_f": res.p_f,
        "s_hat": res.selection.size,
        "long_run_effect": res.long_run_effect,
        "reject": res.reject,
    }


class _OutputTracker:
    """Collects files written during one run so failures can clean up."""

    def __init__(self):
        self.paths: list[Path] = []

    def register(self, path: Path) -> Path:
        self.paths.append(Path(path))
        return Path(path)

    def cleanup(self):
        for path in self.paths:
            try:
                path.unlink(missing_ok=True)
            except OSError:
                pass


def _network_for_analytics(config: RunConfig, tracker) -> CausalNetwork:
    if config.network_path:
        payload = json.loads(Path(config.network_path).read_text(encoding="utf-8"))
        return CausalNetwork.from_dict(payload)
    panel = _load_prepared_panel(config)
    p = _resolve_p(config, panel)
    return build_network(
        panel,
        LagSpec(p=p, d=config.d),
        alpha=config.alpha,
        statistic=config.statistic,
        threads=config.threads,
        selection=config.selection,
        n_lambda=config.n_lambda,
        lambda_ratio=config.lambda_ratio,
        df_augment_per_equation=config.df_augment_per_equation,
    )


def run(config: RunConfig) -> int:
    """Execute one configured invocation; returns the process exit code."""
    tracker = _OutputTracker()
    try:
        if config.mode == "test":
            panel = _load_prepared_panel(config)
            p = _resolve_p(config, panel)
            query = GcQuery(
                caused=tuple(config.caused),
                causing=tuple(config.causing),
                spec=LagSpec(p=p, d=config.d),
                alpha=config.alpha,
                statistic=config.statistic,
            )
            res = pds_lm_test(
                panel,
                query,
                selection=config.selection,
                n_lambda=config.n_lambda,
                lambda_ratio=config.lambda_ratio,
                df_augment_per_equation=config.df_augment_per_equation,
            )
            payload = _result_payload(res, p, config.d)
            if config.json_path:
                write_json(payload, tracker.register(config.json_path))
            print(_to_json(payload))

        elif config.mode == "network":
            panel = _load_prepared_panel(config)
            p = _resolve_p(config, panel)
            net = build_network(
                panel,
                LagSpec(p=p, d=config.d),
                alpha=config.alpha,
                statistic=config.statistic,
                threads=config.threads,
                selection=config.selection,
                n_lambda=config.n_lambda,
                lambda_ratio=config.lambda_ratio,
                df_augment_per_equation=config.df_augment_per_equation,
            )
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_json(net.to_dict(), tracker.register(out / "network.json"))
            tracker.register(out / "network.dot").write_text(
                net.to_dot(), encoding="utf-8"
            )
            tracker.register(out / "pvalues.csv")
            tracker.register(out / "pvalues_raw.csv")
            emit_heatmap_data(net.pvalue_matrix, net.nodes, out / "pvalues.csv")
            emit_pvalue_bins(
                net.pvalue_matrix, net.nodes, tracker.register(out / "pvalues_bins.csv")
            )
            tracker.register(out / "longrun.csv")
            tracker.register(out / "longrun_raw.csv")
            emit_heatmap_data(net.magnitude_matrix, net.nodes, out / "longrun.csv")
            print(f"{len(net.edges)} edges at alpha={config.alpha} -> {out}")
            for f, t, msg in net.failures:
                print(f"warning: test {f} -> {t} failed: {msg}", file=sys.stderr)

        elif config.mode == "paths":
            if not config.source or not config.target:
                raise ValidationError("paths mode needs --from and --to")
            net = _network_for_analytics(config, tracker)
            paths = simple_paths(net, config.source, config.target, config.max_len)
            payload = {
                "from": config.source,
                "to": config.target,
                "count": len(paths),
                "paths": [list(p) for p in paths],
            }
            if config.json_path:
                write_json(payload, tracker.register(config.json_path))
            print(_to_json(payload))

        elif config.mode == "cycles":
            if not config.via:
                raise ValidationError("cycles mode needs --via")
            net = _network_for_analytics(config, tracker)
            cycles = cycles_through(net, config.via)
            payload = {
                "via": config.via,
                "count": len(cycles),
                "cycles": [list(c) for c in cycles],
            }
            if config.json_path:
                write_json(payload, tracker.register(config.json_path))
            print(_to_json(payload))

        elif config.mode == "cluster":
            net = _network_for_analytics(config, tracker)
            part = greedy_modularity_clusters(net)
            payload = {
                "modularity": part.modularity,
                "communities": [list(c) for c in part.communities()],
                "assignment": {n: part.assignment[n] for n in sorted(part.assignment)},
            }
            if config.json_path:
                write_json(payload, tracker.register(config.json_path))
            print(_to_json(payload))

        elif config.mode == "simulate":
            summary = rejection_rate(
                config.dgp,
                reps=config.reps,
                T=config.T,
                alpha=config.alpha,
                d=config.d,
                p=config.p if config.p is not None else 1,
                strength=config.strength,
                statistic=config.statistic,
                seed=config.seed,
                threads=config.threads,
            )
            if config.json_path:
                write_json(summary, tracker.register(config.json_path))
            print(_to_json(summary))

        elif config.mode == "convert":
            if config.gas is None or config.concentration is None:
                raise ValidationError("convert mode needs --gas and a concentration")
            record = GasConcentrationRecord(Gas(config.gas), config.concentration)
            forcing = concentration_to_forcing(
                record,
                co2_baseline=config.co2_baseline,
                ch4_baseline=config.ch4_baseline,
                n2o_baseline=config.n2o_baseline,
            )
            payload = {
                "gas": config.gas,
                "concentration": config.concentration,
                "forcing_w_m2": forcing,
            }
            if config.json_path:
                write_json(payload, tracker.register(config.json_path))
            print(_to_json(payload))

        else:
            raise ValidationError(f"unknown mode {config.mode!r}")

    except InfeasibleTestError as exc:
        tracker.cleanup()
        print(f"error: infeasible test: {exc}", file=sys.stderr)
        return 4
    except (ValidationError, ValueError, OSError) as exc:
        tracker.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, np.linalg.LinAlgError) as exc:
        tracker.cleanup()
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 3
    except HdgcError as exc:
        tracker.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _add_data_options(sp):
    sp.add_argument("--data", help="CSV file with a header row and a time column")
    sp.add_argument("--time-col", default="year", help="name of the time column")
    sp.add_argument("--vars", help="comma list of series to use (default: all)")
    sp.add_argument(
        "--trim-common",
        action="store_true",
        help="trim the sample to the span where every series is observed",
    )
    sp.add_argument("--demean", action="store_true", help="demean each series")
    sp.add_argument(
        "--difference",
        default="",
        metavar="name:order,...",
        help="per-series difference orders applied before the analysis",
    )


def _add_lag_options(sp):
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--p", type=int, help="lag length")
    group.add_argument(
        "--p-auto", action="store_true", help="select the lag length by criterion"
    )
    sp.add_argument("--p-max", type=int, default=8, help="candidate cap for --p-auto")
    sp.add_argument("--d", type=int, default=2, help="lag-augmentation order")


def _add_test_options(sp):
    sp.add_argument("--alpha", type=float, default=0.1, help="significance level")
    sp.add_argument("--stat", choices=("chi2", "f"), default="chi2")
    sp.add_argument(
        "--adaptive",
        choices=("on", "off", "none"),
        default="on",
        help="adaptive lasso (on), plain lasso (off), or no selection (none)",
    )
    sp.add_argument("--n-lambda", type=int, default=100)
    sp.add_argument("--lambda-ratio", type=float, default=1e-3)
    sp.add_argument(
        "--df-augment-per-equation",
        action="store_true",
        help="count augmentation degrees of freedom once per caused equation",
    )
    sp.add_argument("--threads", type=int, default=None)


def _threads_default(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("HDGC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"HDGC_THREADS={env!r} is not an integer") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdgc",
        description="Granger causality testing in high-dimensional levels VARs",
    )
    parser.add_argument("--version", action="version", version=f"hdgc {__version__}")
    sub = parser.add_subparsers(dest="mode", required=True)

    sp = sub.add_parser("test", help="one Granger-causality test")
    _add_data_options(sp)
    _add_lag_options(sp)
    _add_test_options(sp)
    sp.add_argument("--caused", required=True, help="comma list of caused series")
    sp.add_argument("--causing", required=True, help="comma list of causing series")
    sp.add_argument("--json", dest="json_path", help="write the result to this file")

    sp = sub.add_parser("network", help="all pairwise tests plus exports")
    _add_data_options(sp)
    _add_lag_options(sp)
    _add_test_options(sp)
    sp.add_argument("--out-dir", default=".", help="directory for emitted files")

    for mode, extra in (
        ("paths", ("--from", "--to")),
        ("cycles", ("--via",)),
        ("cluster", ()),
    ):
        sp = sub.add_parser(mode, help=f"{mode} on a causal network")
        _add_data_options(sp)
        _add_lag_options(sp)
        _add_test_options(sp)
        sp.add_argument(
            "--network",
            dest="network_path",
            help="re-use a network.json instead of recomputing",
        )
        if "--from" in extra:
            sp.add_argument("--from", dest="source", required=True)
            sp.add_argument("--to", dest="target", required=True)
            sp.add_argument("--max-len", type=int, help="maximum path length (edges)")
        if "--via" in extra:
            sp.add_argument("--via", required=True)
        sp.add_argument("--json", dest="json_path")

    sp = sub.add_parser("simulate", help="Monte Carlo size/power study")
    sp.add_argument(
        "--dgp", choices=("h0", "power", "unitroot", "cointegrated"), default="h0"
    )
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--T", type=int, default=300)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--p", type=int, default=1)
    sp.add_argument("--strength", type=float, default=0.4)
    sp.add_argument("--stat", choices=("chi2", "f"), default="chi2")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--json", dest="json_path")

    sp = sub.add_parser("convert", help="gas concentration to radiative forcing")
    sp.add_argument("--gas", choices=("co2", "ch4", "n2o"), required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--ppm", type=float, help="concentration in ppm (CO2)")
    group.add_argument("--ppb", type=float, help="concentration in ppb (CH4/N2O)")
    sp.add_argument("--co2-baseline", type=float, default=280.0)
    sp.add_argument("--ch4-baseline", type=float, default=700.0)
    sp.add_argument("--n2o-baseline", type=float, default=275.0)
    sp.add_argument("--json", dest="json_path")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    mode = args.mode
    kwargs: dict = {"mode": mode}
    if mode in ("test", "network", "paths", "cycles", "cluster"):
        kwargs.update(
            data=args.data,
            time_col=args.time_col,
            variables=args.vars.split(",") if args.vars else None,
            trim_common=args.trim_common,
            do_demean=args.demean,
            diff_orders=_parse_diff_spec(args.difference),
            p=args.p,
            p_auto=args.p_auto,
            p_max=args.p_max,
            d=args.d,
            alpha=args.alpha,
            statistic=args.stat,
            selection={"on": "adaptive", "off": "plain", "none": "none"}[args.adaptive],
            n_lambda=args.n_lambda,
            lambda_ratio=args.lambda_ratio,
            df_augment_per_equation=args.df_augment_per_equation,
            threads=_threads_default(args.threads),
        )
    if mode == "test":
        kwargs.update(
            caused=args.caused.split(","),
            causing=args.causing.split(","),
            json_path=args.json_path,
        )
    elif mode == "network":
        kwargs.update(out_dir=args.out_dir)
    elif mode in ("paths", "cycles", "cluster"):
        kwargs.update(network_path=args.network_path, json_path=args.json_path)
        if args.network_path is None and args.p is None and not args.p_auto:
            raise ValidationError("one of --p, --p-auto, or --network is required")
        if mode == "paths":
            kwargs.update(source=args.source, target=args.target, max_len=args.max_len)
        elif mode == "cycles":
            kwargs.update(via=args.via)
    elif mode == "simulate":
        kwargs.update(
            dgp=args.dgp,
            reps=args.reps,
            T=args.T,
            alpha=args.alpha,
            d=args.d,
            p=args.p,
            strength=args.strength,
            statistic=args.stat,
            seed=args.seed,
            threads=_threads_default(args.threads),
            json_path=args.json_path,
        )
    elif mode == "convert":
        kwargs.update(
            gas=args.gas,
            concentration=args.ppm if args.ppm is not None else args.ppb,
            co2_baseline=args.co2_baseline,
            ch4_baseline=args.ch4_baseline,
            n2o_baseline=args.n2o_baseline,
            json_path=args.json_path,
        )
    return RunConfig(**kwargs)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
