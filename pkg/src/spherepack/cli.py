"""Command-line front end.

    spherepack curve     --family bpsk-awgn --n 500 --rate 0.8 --bounds sp59,vf,isp,rc
    spherepack threshold --family qpsk-awgn --n 2790 --rate 1.467 --pe 1e-4
    spherepack region    --family bpsk-awgn --rate-start 0.75 --rate-stop 0.8 --pe 1e-6
    spherepack exponent  --family bsc --p 0.1
    spherepack check

CSV output starts with ``#`` lines carrying the package version and the
full run configuration; ``--format json`` writes the same content as one
JSON document. Exit status: 0 on success, 2 on invalid configuration,
3 on numerical failure. SPHEREPACK_THREADS sets the worker count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, analysis
from .channel import make_bsc, make_mpsk_awgn, read_dmc_file
from .exponents import capacity, esp, random_coding_exponent

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
AWGN_FAMILIES = {"bpsk-awgn": "bpsk", "qpsk-awgn": "qpsk", "8psk-awgn": "8psk"}
ALL_FAMILIES = ("bsc", *AWGN_FAMILIES, "dmc-file")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class RunConfig:
    subcommand: str
    family: str = "bpsk-awgn"
    n: int | None = None
    rate: float | None = None
    rate_unit: str = "bits"
    list_size: int = 1
    alpha: float = 0.5
    bounds: list[str] = field(default_factory=list)
    snr_start: float = 0.0
    snr_stop: float = 5.0
    snr_step: float = 0.25
    snr_unit: str = "db"
    snr: float | None = None
    p: float | None = None
    dmc_file: str | None = None
    rate_start: float | None = None
    rate_stop: float | None = None
    rate_step: float = 0.01
    pe: list[float] = field(default_factory=list)
    pairs: list[str] = field(default_factory=list)
    n_min: int = 16
    n_max: int = 10**6
    quad_order: int = 96
    output: str | None = None
    format: str = "csv"

    def validate(self) -> "RunConfig":
        if self.family not in ALL_FAMILIES:
            raise ConfigError("family", f"must be one of {', '.join(ALL_FAMILIES)}")
        if self.rate_unit not in ("bits", "nats"):
            raise ConfigError("rate_unit", "must be 'bits' or 'nats'")
        if self.snr_unit not in ("db", "linear"):
            raise ConfigError("snr_unit", "must be 'db' or 'linear'")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", "must be 'csv' or 'json'")
        if self.n is not None and self.n < 1:
            raise ConfigError("n", "block length must be positive")
        if self.rate is not None and not self.rate > 0:
            raise ConfigError("rate", "must be positive")
        if self.list_size < 1:
            raise ConfigError("list_size", "must be at least 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha", "must lie in (0, 1)")
        for i, pe in enumerate(self.pe):
            if not 0 < pe < 1:
                raise ConfigError(f"pe[{i}]", "target error probability must lie in (0, 1)")
        if self.quad_order < 16:
            raise ConfigError("quad_order", "must be at least 16")
        if self.snr_unit == "linear" and self.snr is not None and not self.snr > 0:
            raise ConfigError("snr", "linear SNR must be positive")
        if self.snr_step <= 0:
            raise ConfigError("snr_step", "must be positive")
        if self.rate_step <= 0:
            raise ConfigError("rate_step", "must be positive")
        if self.family == "bsc" and self.subcommand == "exponent" and (self.p is None or not 0 <= self.p <= 1):
            raise ConfigError("p", "bsc needs --p in [0, 1]")
        if self.family == "dmc-file" and self.subcommand == "exponent" and not self.dmc_file:
            raise ConfigError("dmc_file", "dmc-file family needs --dmc-file PATH")
        if self.subcommand in ("curve", "threshold", "region") and self.family not in AWGN_FAMILIES:
            raise ConfigError("family", f"{self.subcommand} works on SNR axes and needs an AWGN family")
        return self

    def rate_bits(self, value: float) -> float:
        return value if self.rate_unit == "bits" else value / math.log(2)


def _snr_db(cfg: RunConfig) -> float:
    if cfg.snr is None:
        raise ConfigError("snr", "required for AWGN exponent tables")
    return cfg.snr if cfg.snr_unit == "db" else 10 * math.log10(cfg.snr)


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) in (None, []):
            raise ConfigError(name, "required")


def _grid(start: float, stop: float, step: float, path: str) -> list[float]:
    if stop < start:
        raise ConfigError(path, "stop must not be below start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


# ---------------------------------------------------------------------------
# subcommands; each returns (columns, rows)

def run_curve(cfg: RunConfig):
    _require(cfg, "n", "rate", "bounds")
    kinds = [analysis.bound_kind(b) for b in cfg.bounds]
    grid = _grid(cfg.snr_start, cfg.snr_stop, cfg.snr_step, "snr_stop")
    rows = analysis.curve(AWGN_FAMILIES[cfg.family], cfg.n, cfg.rate_bits(cfg.rate), kinds, grid,
                          quad_order=cfg.quad_order, alpha=cfg.alpha)
    return ["ebn0_db", *[f"ln_pe_{k}" for k in kinds]], [
        [r["ebn0_db"], *[r[k] for k in kinds]] for r in rows]


def run_threshold(cfg: RunConfig):
    _require(cfg, "n", "rate", "pe")
    kinds = [analysis.bound_kind(b) for b in (cfg.bounds or ["sp59", "vf", "isp", "rc", "clb"])]
    fam = AWGN_FAMILIES[cfg.family]
    jobs = [(k, pe) for pe in cfg.pe for k in kinds]

    def one(job):
        q = analysis.ThresholdQuery(job[0], fam, cfg.n, cfg.rate_bits(cfg.rate), job[1], cfg.alpha)
        return analysis.snr_threshold(q, quad_order=cfg.quad_order)

    found = analysis.sweep(one, jobs)
    rows = [[k, pe, round(t.ebn0_db, 4), t.log_residual] for (k, pe), t in zip(jobs, found)]
    return ["bound", "target_pe", "ebn0_db", "ln_residual"], rows


def run_region(cfg: RunConfig):
    _require(cfg, "rate_start", "pe")
    stop = cfg.rate_stop if cfg.rate_stop is not None else cfg.rate_start
    rates = [cfg.rate_bits(r) for r in _grid(cfg.rate_start, stop, cfg.rate_step, "rate_stop")]
    pairs = [tuple(p.split(":")) for p in (cfg.pairs or ["isp:sp59", "vf:sp59"])]
    for i, p in enumerate(pairs):
        if len(p) != 2:
            raise ConfigError(f"pairs[{i}]", "expected A:B")
    columns = ["rate_bits", "target_pe", *[f"n_{a}_vs_{b}" for a, b in pairs]]
    rows = []
    for pe in cfg.pe:
        rm = analysis.region_map(AWGN_FAMILIES[cfg.family], rates, pe, pairs, bracket=(cfg.n_min, cfg.n_max))
        for i, r in enumerate(rm.rates):
            vals = [rm.lengths[(analysis.bound_kind(a), analysis.bound_kind(b))][i] for a, b in pairs]
            rows.append([r, pe, *["censored" if v is None else v for v in vals]])
    return columns, rows


def _channel(cfg: RunConfig):
    if cfg.family == "bsc":
        return make_bsc(cfg.p)
    if cfg.family == "dmc-file":
        return read_dmc_file(cfg.dmc_file)
    fam = analysis.family(AWGN_FAMILIES[cfg.family])
    return make_mpsk_awgn(fam.order, 10 ** (_snr_db(cfg) / 10), quad_order=cfg.quad_order)


def run_exponent(cfg: RunConfig):
    ch = _channel(cfg)
    cap = capacity(ch)
    if cfg.rate_start is None:
        rates = [cap * f for f in np.linspace(0.05, 1.1, 22)]
    else:
        stop = cfg.rate_stop if cfg.rate_stop is not None else cfg.rate_start
        grid = _grid(cfg.rate_start, stop, cfg.rate_step, "rate_stop")
        rates = [r * math.log(2) if cfg.rate_unit == "bits" else r for r in grid]

    def one(r):
        sp, rc = esp(ch, r), random_coding_exponent(ch, r)
        return [r, r / math.log(2), sp.value, sp.optimizer_rho, rc.value, rc.optimizer_rho]

    rows = analysis.sweep(one, rates)
    return ["rate_nats", "rate_bits", "esp", "rho_sp", "er", "rho_r"], rows


def run_check(cfg: RunConfig):
    from .selfcheck import run_all
    results = run_all()
    return ["check", "passed", "detail"], [[r.name, r.passed, r.detail] for r in results]


COMMANDS = {"curve": run_curve, "threshold": run_threshold, "region": run_region,
            "exponent": run_exponent, "check": run_check}


# ---------------------------------------------------------------------------
# output

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def render(cfg: RunConfig, columns, rows) -> str:
    config = {k: v for k, v in asdict(cfg).items() if k != "output"}
    if cfg.format == "json":
        doc = {"version": __version__, "config": config, "columns": list(columns),
               "rows": [[_json_cell(v) for v in r] for r in rows]}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# spherepack {__version__}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _json_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else repr(float(v))
    return v


def parse_csv(text: str) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of the CSV writer: (header metadata, columns, rows)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# config: "):
            meta["config"] = json.loads(line[len("# config: "):])
        elif line.startswith("# spherepack "):
            meta["version"] = line.split()[-1]
        elif line and not line.startswith("#"):
            body.append(line)
    reader = list(csv.reader(body))
    return meta, reader[0], reader[1:]


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in _csv_list(text)]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spherepack", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("--version", action="version", version=f"spherepack {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--family", default="bpsk-awgn", help=f"one of {', '.join(ALL_FAMILIES)}")
        sp.add_argument("--quad-order", type=int, default=96)
        sp.add_argument("--output", "-o", help="write here instead of stdout")
        sp.add_argument("--format", default="csv", choices=["csv", "json"])
        sp.add_argument("--json", dest="format", action="store_const", const="json", help="same as --format json")

    def code(sp):
        sp.add_argument("--n", type=int, help="block length in channel uses (symbols)")
        sp.add_argument("--rate", type=float, help="code rate per channel use")
        sp.add_argument("--rate-unit", default="bits", choices=["bits", "nats"])
        # the rate already means ln(M/L)/N, so L is recorded for provenance only
        sp.add_argument("--list-size", type=int, default=1)
        sp.add_argument("--alpha", type=float, default=0.5, help="expurgation fraction")

    c = sub.add_parser("curve", help="ln P_e of several bounds over an Eb/N0 grid")
    common(c)
    code(c)
    c.add_argument("--bounds", type=_csv_list, default=["sp59", "vf", "isp", "rc"])
    c.add_argument("--snr-start", type=float, default=0.0)
    c.add_argument("--snr-stop", type=float, default=5.0)
    c.add_argument("--snr-step", type=float, default=0.25)
    c.add_argument("--plot-script", help="also write a matplotlib script that plots the CSV")

    t = sub.add_parser("threshold", help="Eb/N0 threshold of each bound at target error probabilities")
    common(t)
    code(t)
    t.add_argument("--bounds", type=_csv_list, default=[])
    t.add_argument("--pe", type=_float_list, required=True)

    r = sub.add_parser("region", help="crossover block lengths over a rate grid")
    common(r)
    r.add_argument("--rate-start", type=float, required=True)
    r.add_argument("--rate-stop", type=float)
    r.add_argument("--rate-step", type=float, default=0.01)
    r.add_argument("--rate-unit", default="bits", choices=["bits", "nats"])
    r.add_argument("--pe", type=_float_list, required=True)
    r.add_argument("--pairs", type=_csv_list, default=[], help="e.g. isp:sp59,vf:sp59")
    r.add_argument("--n-min", type=int, default=16)
    r.add_argument("--n-max", type=int, default=10**6)

    e = sub.add_parser("exponent", help="sphere-packing and random-coding exponents over rate")
    common(e)
    e.add_argument("--p", type=float, help="BSC crossover probability")
    e.add_argument("--dmc-file", help="text file: 'K J' then K rows of J probabilities")
    e.add_argument("--snr", type=float, help="Es/N0 for AWGN families")
    e.add_argument("--snr-unit", default="db", choices=["db", "linear"])
    e.add_argument("--rate-start", type=float)
    e.add_argument("--rate-stop", type=float)
    e.add_argument("--rate-step", type=float, default=0.01)
    e.add_argument("--rate-unit", default="bits", choices=["bits", "nats"])

    k = sub.add_parser("check", help="run the built-in invariant self-tests")
    k.add_argument("--output", "-o")
    k.add_argument("--format", default="csv", choices=["csv", "json"])
    return p


_PLOT = """\
import csv
import matplotlib.pyplot as plt

with open({path!r}) as fh:
    rows = list(csv.reader(line for line in fh if not line.startswith("#")))
head, body = rows[0], rows[1:]
x = [float(r[0]) for r in body]
for i, name in enumerate(head[1:], start=1):
    plt.semilogy(x, [10 ** (float(r[i]) / 2.302585092994046) for r in body], label=name[6:])
plt.xlabel("Eb/N0 [dB]")
plt.ylabel("block error probability")
plt.legend()
plt.grid(True, which="both")
plt.show()
"""


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    raw = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__ and v is not None}
    plot_script = getattr(ns, "plot_script", None)
    try:
        cfg = RunConfig(**raw).validate()
        columns, rows = COMMANDS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"spherepack: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, RuntimeError) as exc:
        print(f"spherepack: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, OSError) as exc:
        print(f"spherepack: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(cfg, columns, rows)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
        if plot_script:
            with open(plot_script, "w") as fh:
                fh.write(_PLOT.format(path=cfg.output))
    else:
        sys.stdout.write(text)
    if cfg.subcommand == "check" and not all(r[1] for r in rows):
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
