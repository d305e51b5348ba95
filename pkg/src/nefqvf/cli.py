"""Experiment command line: subcommand dispatch, config files, CSV reports.

Subcommands
    families list | check
    orthopoly build | dump
    tau dump
    ldlr exact | mc | compare | sbm
    spiked simulate | power-curve | entrywise-bound
    mix test

Exit codes: 0 ok, 2 config error, 3 enumeration cap exceeded, 4 numeric
instability.  Values may come from an INI-style ``--config`` file (section
named after the subcommand, e.g. ``[ldlr.exact]``); command-line flags
override file values.  Every report is CSV with one provenance comment
line (full parameters, seed, git revision) so that identical inputs give
byte-identical outputs.

Model files are plain text, one ``key = value`` per line, ``#`` comments:

    family = binomial{m=1}        # or: families = binomial{m=1}; poisson
    kind = kin                    # kin | additive | z  (z: offsets in
    null_means = 0.5              #   z-score units, used by `ldlr compare`)
    atom = 0.75 : 1.0             # coordinates, colon, probability
"""

from __future__ import annotations

import argparse
import configparser
import math
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapExceededError, ConfigError, NefqvfError, NumericInstabilityError
from .families import ALL_KINDS, Family, parse_family
from .ldlr import (
    AdditiveSpikedModel,
    KinSpikedModel,
    SpikePrior,
    channel_compare,
    ldlr_exact,
    ldlr_exact_additive,
    overlap_bound_mc,
    sbm_ks_scan,
)
from .orthopoly import a_const, basis_rows, build_basis
from .spiked import (
    entrywise_ldlr_exact,
    entrywise_ldlr_mc_bound,
    mixed_test,
    pca_test,
    power_curve,
    sample_wig,
    tpca_test,
    MAX_EXACT_N,
)
from .translation import DEFAULT_TABLE_DEGREE, build_translation_table, table_rows

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_NUMERIC = 4


# ---------------------------------------------------------------------------
# declarative flags, shared by argparse and the config-file merge
# ---------------------------------------------------------------------------

def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    if str(s).lower() in ("1", "true", "yes"):
        return True
    if str(s).lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _degree(s) -> int | None:
    if str(s).lower() in ("inf", "infinity"):
        return None
    return int(s)


def _float_list(s) -> tuple[float, ...]:
    return tuple(float(tok) for tok in str(s).split(",") if tok.strip())


@dataclass(frozen=True)
class Flag:
    name: str
    convert: object
    help: str
    required: bool = False
    default: object = None


COMMON = [
    Flag("out", str, "output path (stdout when omitted)"),
    Flag("seed", int, "random seed", default=0),
]

FLAGS: dict[tuple[str, str], list[Flag]] = {
    ("families", "list"): [Flag("out", str, "output path")],
    ("families", "check"): [Flag("out", str, "output path")],
    ("orthopoly", "build"): [
        Flag("family", str, "family tag, e.g. gamma{alpha=2}", required=True),
        Flag("mu0", float, "null mean", required=True),
        Flag("degree", int, "maximum degree", required=True),
        Flag("float_mode", _bool, "float arithmetic instead of exact", default=False),
        Flag("out", str, "output path"),
    ],
    ("orthopoly", "dump"): [
        Flag("family", str, "family tag", required=True),
        Flag("mu0", float, "null mean", required=True),
        Flag("degree", int, "maximum degree", required=True),
        Flag("out", str, "output path"),
    ],
    ("tau", "dump"): [
        Flag("degree", int, "maximum degree", default=DEFAULT_TABLE_DEGREE),
        Flag("out", str, "output path"),
    ],
    ("ldlr", "exact"): [
        Flag("model", str, "model file path", required=True),
        Flag("degree", _degree, "degree bound D", required=True),
        Flag("out", str, "output path"),
    ],
    ("ldlr", "mc"): [
        Flag("model", str, "model file path", required=True),
        Flag("degree", _degree, "degree bound D, or 'inf'", required=True),
        Flag("samples", int, "Monte Carlo sample count", required=True),
    ] + COMMON,
    ("ldlr", "compare"): [
        Flag("model", str, "model file with families list and z-unit prior", required=True),
        Flag("degree", _degree, "degree bound D", required=True),
        Flag("out", str, "output path"),
    ],
    ("ldlr", "sbm"): [
        Flag("n", int, "number of vertices", required=True),
        Flag("a", _float_list, "inside rate(s), comma separated", required=True),
        Flag("b", _float_list, "across rate(s), comma separated", required=True),
        Flag("degree", int, "degree bound D", default=20),
        Flag("samples", int, "Monte Carlo sample count", required=True),
    ] + COMMON,
    ("spiked", "simulate"): [
        Flag("n", int, "matrix size", required=True),
        Flag("lam", float, "signal strength lambda", required=True),
        Flag("noise", str, "sech | heavy | mixed", required=True),
        Flag("alpha", float, "heavy-tail exponent"),
        Flag("planted", _bool, "sample the planted side", default=False),
        Flag("trials", int, "number of instances", default=1),
        Flag("test", str, "pca | tpca | mixed | none", default="none"),
    ] + COMMON,
    ("spiked", "power-curve"): [
        Flag("test", str, "pca | tpca | mixed", required=True),
        Flag("noise", str, "sech | heavy | mixed", required=True),
        Flag("n", int, "matrix size", required=True),
        Flag("lambdas", _float_list, "signal strengths, comma separated", required=True),
        Flag("trials", int, "trials per rate and side", required=True),
        Flag("alpha", float, "heavy-tail exponent"),
    ] + COMMON,
    ("spiked", "entrywise-bound"): [
        Flag("n", int, "matrix size", required=True),
        Flag("lam", float, "signal strength lambda", required=True),
        Flag("degree", int, "entrywise degree bound D", required=True),
        Flag("samples", int, "Monte Carlo sample count", required=True),
        Flag("exact", _bool, f"also run the exact sum (n <= {MAX_EXACT_N})", default=False),
    ] + COMMON,
    ("mix", "test"): [
        Flag("n", int, "matrix size", required=True),
        Flag("lam", float, "signal strength lambda", required=True),
        Flag("alpha", float, "heavy-tail exponent", required=True),
        Flag("trials", int, "trials per side", required=True),
    ] + COMMON,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated subcommand invocation: command pair plus parameter map."""

    command: tuple[str, str]
    values: dict


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nefqvf",
        description="likelihood-ratio norms and spiked-matrix experiments",
    )
    parser.add_argument("--config", help="INI file with per-subcommand defaults")
    groups = parser.add_subparsers(dest="group", required=True)
    seen: dict[str, argparse._SubParsersAction] = {}
    for (group, action), flags in FLAGS.items():
        if group not in seen:
            gp = groups.add_parser(group)
            seen[group] = gp.add_subparsers(dest="action", required=True)
        sub = seen[group].add_parser(action)
        for flag in flags:
            names = [f"--{flag.name.replace('_', '-')}"]
            if flag.name == "lam":
                names.append("--lambda")
            sub.add_argument(*names, dest=flag.name, default=None, help=flag.help)
    return parser


def merge_config(args: argparse.Namespace) -> ExperimentConfig:
    """Apply config-file defaults, convert types, check required keys."""
    command = (args.group, args.action)
    flags = FLAGS[command]
    file_vals: dict[str, str] = {}
    if args.config:
        ini = configparser.ConfigParser()
        read = ini.read(args.config)
        if not read:
            raise ConfigError(f"config: cannot read file {args.config!r}")
        section = f"{command[0]}.{command[1]}"
        if ini.has_section(section):
            file_vals = dict(ini.items(section))
        known = {f.name for f in flags}
        for key in file_vals:
            if key not in known:
                raise ConfigError(f"config: unknown key {key!r} in [{section}]")
    values = {}
    for flag in flags:
        raw = getattr(args, flag.name, None)
        if raw is None:
            raw = file_vals.get(flag.name)
        if raw is None:
            if flag.required:
                raise ConfigError(f"config: missing required key {flag.name!r}")
            values[flag.name] = flag.default
            continue
        try:
            values[flag.name] = flag.convert(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"config: bad value for {flag.name!r}: {raw!r}") from exc
    return ExperimentConfig(command=command, values=values)


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

def parse_model_file(path: str) -> dict:
    """Parse the documented key-value model format (see module docstring)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"model: cannot read file {path!r}: {exc}") from exc
    out: dict = {"atoms": []}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"model: line {lineno} is not 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "family":
            out["families"] = [parse_family(val)]
        elif key == "families":
            out["families"] = [parse_family(tok) for tok in val.split(";") if tok.strip()]
        elif key == "kind":
            if val not in ("kin", "additive", "z"):
                raise ConfigError(f"model: kind must be kin, additive or z, got {val!r}")
            out["kind"] = val
        elif key == "null_means":
            try:
                out["null_means"] = tuple(float(tok) for tok in val.split())
            except ValueError as exc:
                raise ConfigError(f"model: bad null_means {val!r}") from exc
        elif key == "atom":
            if ":" not in val:
                raise ConfigError(f"model: atom needs 'coords : prob', got {val!r}")
            coords, prob = val.rsplit(":", 1)
            try:
                vec = tuple(float(tok) for tok in coords.split())
                out["atoms"].append((vec, float(prob)))
            except ValueError as exc:
                raise ConfigError(f"model: bad atom {val!r}") from exc
        else:
            raise ConfigError(f"model: unknown key {key!r} on line {lineno}")
    for key in ("families", "kind", "null_means"):
        if key not in out:
            raise ConfigError(f"model: missing required key {key!r}")
    if not out["atoms"]:
        raise ConfigError("model: needs at least one 'atom' line")
    return out


def _model_from(desc: dict):
    fam = desc["families"][0]
    if desc["kind"] == "kin":
        prior = SpikePrior.from_atoms("kin", desc["atoms"])
        return KinSpikedModel(fam, desc["null_means"], prior)
    if desc["kind"] == "additive":
        prior = SpikePrior.from_atoms("additive", desc["atoms"])
        return AdditiveSpikedModel(fam, desc["null_means"], prior)
    raise ConfigError("model: kind 'z' is only usable with `ldlr compare`")


# ---------------------------------------------------------------------------
# report writing
# ---------------------------------------------------------------------------

def _git_revision() -> str:
    try:
        res = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5,
        )
        if res.returncode == 0:
            return res.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_report(config: ExperimentConfig, header: list[str], rows: list[tuple]) -> None:
    params = ",".join(
        f"{k}={_cell(v)}" for k, v in sorted(config.values.items()) if k != "out"
    )
    lines = [
        f"# nefqvf {config.command[0]} {config.command[1]} | {params} | rev={_git_revision()}",
        ",".join(header),
    ]
    lines += [",".join(_cell(c) for c in row) for row in rows]
    text = "\n".join(lines) + "\n"
    out = config.values.get("out")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _run_families_list(config):
    rows = []
    for kind in ALL_KINDS:
        fam = {
            "gaussian": Family.gaussian(1.0), "poisson": Family.poisson(),
            "gamma": Family.gamma(2.0), "binomial": Family.binomial(1),
            "negbinomial": Family.negbinomial(2), "sech": Family.sech(),
        }[kind]
        v0, v1, v2 = fam.variance_coeffs()
        dom = fam.mean_domain
        rows.append((kind, fam.tag(), v0, v1, v2, dom.lo, dom.hi))
    write_report(config, ["kind", "example_tag", "v0", "v1", "v2", "mean_lo", "mean_hi"], rows)


def _run_families_check(config):
    rows, worst = [], 0.0
    for fam, mu_ref in [
        (Family.gaussian(1.3), 0.7), (Family.poisson(), 2.5),
        (Family.gamma(2.5), 1.8), (Family.binomial(10), 3.7),
        (Family.negbinomial(3), 1.4), (Family.sech(), 0.6),
    ]:
        lo = max(fam.natural_domain.lo, -1.0) + 0.1
        hi = min(fam.natural_domain.hi, 1.0) - 0.1
        h, err_v = 1e-4, 0.0
        for theta in np.linspace(lo, hi, 9):
            d2 = (fam.cumulant(theta + h) - 2 * fam.cumulant(theta) + fam.cumulant(theta - h)) / h**2
            v = fam.variance(fam.natural_to_mean(theta))
            err_v = max(err_v, abs(d2 - v) / abs(v))
        err_rt = abs(fam.natural_to_mean(fam.mean_to_natural(mu_ref)) - mu_ref)
        rows.append((fam.tag(), "cumulant_curvature_vs_variance", err_v, 1e-6,
                     "pass" if err_v < 1e-6 else "fail"))
        rows.append((fam.tag(), "mean_natural_round_trip", err_rt, 1e-10,
                     "pass" if err_rt < 1e-10 else "fail"))
        worst = max(worst, err_v / 1e-6, err_rt / 1e-10)
    write_report(config, ["family", "check", "max_error", "tolerance", "status"], rows)
    if worst >= 1.0:
        raise NumericInstabilityError("families check failed; see report")


def _run_orthopoly(config, dump: bool):
    fam = parse_family(config.values["family"])
    exact = not config.values.get("float_mode", False)
    basis = build_basis(fam, config.values["mu0"], config.values["degree"], exact=exact)
    if dump:
        rows = basis_rows(basis)
        width = max(len(r) for r in rows)
        header = ["k"] + [f"c{i}" for i in range(width - 2)] + ["norm_sq"]
        padded = [r[:-1] + (None,) * (width - len(r)) + (r[-1],) for r in rows]
        write_report(config, header, padded)
    else:
        v2 = fam.v2
        rows = [
            (k, float(basis.norm_sq[k]), float(a_const(k, v2)) * fam.variance(basis.mu0) ** k)
            for k in range(basis.max_degree + 1)
        ]
        write_report(config, ["k", "norm_sq", "closed_form"], rows)


def _run_tau_dump(config):
    table = build_translation_table(config.values["degree"])
    write_report(config, ["k", "l", "numerator", "denominator"], table_rows(table))


HEADER_LDLR = ["mode", "D", "value", "stderr", "samples", "seed"]


def _dcell(D):
    return "inf" if D is None else D


def _run_ldlr_exact(config):
    desc = parse_model_file(config.values["model"])
    model = _model_from(desc)
    D = config.values["degree"]
    if D is None:
        raise ConfigError("config: degree 'inf' requires `ldlr mc`")
    if isinstance(model, AdditiveSpikedModel):
        res = ldlr_exact_additive(model, D)
    else:
        res = ldlr_exact(model, D)
    write_report(config, HEADER_LDLR, [("exact", D, res.value, None, None, None)])


def _run_ldlr_mc(config):
    desc = parse_model_file(config.values["model"])
    model = _model_from(desc)
    if not isinstance(model, KinSpikedModel):
        raise ConfigError("config: `ldlr mc` runs on kin models")
    seed = config.values["seed"]
    rng = np.random.default_rng(seed)
    res = overlap_bound_mc(model, config.values["degree"], config.values["samples"], rng)
    rows = [("monte-carlo", _dcell(res.degree), res.value, res.stderr, res.samples, seed)]
    if res.upper_value is not None:
        rows.append(("monte-carlo-exp-upper", _dcell(res.degree), res.upper_value,
                     res.upper_stderr, res.samples, seed))
    write_report(config, HEADER_LDLR, rows)


def _run_ldlr_compare(config):
    desc = parse_model_file(config.values["model"])
    if desc["kind"] != "z":
        raise ConfigError("config: `ldlr compare` needs a model with kind = z "
                          "(prior offsets in z-score units)")
    prior = SpikePrior.from_atoms("kin", desc["atoms"])
    D = config.values["degree"]
    if D is None:
        raise ConfigError("config: degree 'inf' is not supported by compare")
    rows = channel_compare(desc["families"], desc["null_means"], prior, D)
    write_report(
        config,
        ["family", "v2", "mode", "D", "value"],
        [(r.family.tag(), r.v2, "exact", D, r.result.value) for r in rows],
    )


def _run_ldlr_sbm(config):
    a_list, b_list = config.values["a"], config.values["b"]
    if len(a_list) != len(b_list):
        raise ConfigError("config: 'a' and 'b' need the same number of entries")
    seed = config.values["seed"]
    rng = np.random.default_rng(seed)
    rows = sbm_ks_scan(config.values["n"], config.values["degree"],
                       list(zip(a_list, b_list)), config.values["samples"], rng)
    write_report(
        config,
        ["a", "b", "n", "D", "estimate", "stderr", "samples", "seed",
         "ks_lhs", "ks_rhs", "above_threshold"],
        [(r.a, r.b, r.n, r.degree, r.estimate, r.stderr, r.samples, seed,
          r.ks_lhs, r.ks_rhs, r.above_threshold) for r in rows],
    )


_TEST_FNS = {"pca": pca_test, "tpca": tpca_test, "mixed": mixed_test}


def _run_spiked_simulate(config):
    v = config.values
    seed = v["seed"]
    rng = np.random.default_rng(seed)
    rows = []
    for trial in range(v["trials"]):
        inst = sample_wig(v["n"], v["lam"], v["noise"], v["planted"], rng, alpha=v["alpha"])
        if v["test"] == "none":
            stat = thr = label = None
        elif v["test"] in _TEST_FNS:
            verdict = _TEST_FNS[v["test"]](inst)
            stat, thr, label = verdict.statistic, verdict.threshold, verdict.label
        else:
            raise ConfigError(f"config: unknown test {v['test']!r}")
        rows.append((trial, inst.n, inst.lam, inst.noise_kind, inst.alpha,
                     inst.planted, inst.branch, v["test"], stat, thr, label, seed))
    write_report(config, ["trial", "n", "lambda", "noise", "alpha", "planted",
                          "branch", "test", "statistic", "threshold", "verdict", "seed"], rows)


def _run_spiked_power_curve(config):
    v = config.values
    rng = np.random.default_rng(v["seed"])
    rows = power_curve(v["test"], v["noise"], v["lambdas"], v["n"], v["trials"],
                       rng, alpha=v["alpha"])
    write_report(
        config,
        ["test", "noise", "n", "lambda", "trials", "type_i", "type_ii",
         "power", "se_type_i", "se_type_ii", "seed"],
        [(r.test, r.noise_kind, r.n, r.lam, r.trials, r.type_i, r.type_ii,
          r.power, r.se_type_i, r.se_type_ii, v["seed"]) for r in rows],
    )


def _run_spiked_entrywise(config):
    v = config.values
    rng = np.random.default_rng(v["seed"])
    res = entrywise_ldlr_mc_bound(v["n"], v["lam"], v["degree"], v["samples"], rng)
    rows = [("mc-bound", v["n"], v["lam"], v["degree"], res.c, res.value,
             res.stderr, res.samples, v["seed"])]
    if v["exact"]:
        exact = entrywise_ldlr_exact(v["n"], v["lam"], v["degree"])
        rows.append(("exact", v["n"], v["lam"], v["degree"], None, exact, None, None, v["seed"]))
    write_report(config, ["method", "n", "lambda", "D", "c", "value",
                          "stderr", "samples", "seed"], rows)


def _run_mix_test(config):
    v = config.values
    rng = np.random.default_rng(v["seed"])
    rows = power_curve("mixed", "mixed", [v["lam"]], v["n"], v["trials"],
                       rng, alpha=v["alpha"])
    r = rows[0]
    avg_error = 0.5 * (r.type_i + r.type_ii)
    write_report(
        config,
        ["n", "lambda", "alpha", "trials", "type_i", "type_ii", "avg_error",
         "se_type_i", "se_type_ii", "seed"],
        [(r.n, r.lam, v["alpha"], r.trials, r.type_i, r.type_ii, avg_error,
          r.se_type_i, r.se_type_ii, v["seed"])],
    )


RUNNERS = {
    ("families", "list"): _run_families_list,
    ("families", "check"): _run_families_check,
    ("orthopoly", "build"): lambda c: _run_orthopoly(c, dump=False),
    ("orthopoly", "dump"): lambda c: _run_orthopoly(c, dump=True),
    ("tau", "dump"): _run_tau_dump,
    ("ldlr", "exact"): _run_ldlr_exact,
    ("ldlr", "mc"): _run_ldlr_mc,
    ("ldlr", "compare"): _run_ldlr_compare,
    ("ldlr", "sbm"): _run_ldlr_sbm,
    ("spiked", "simulate"): _run_spiked_simulate,
    ("spiked", "power-curve"): _run_spiked_power_curve,
    ("spiked", "entrywise-bound"): _run_spiked_entrywise,
    ("mix", "test"): _run_mix_test,
}


def run(config: ExperimentConfig) -> int:
    RUNNERS[config.command](config)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return run(merge_config(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except NumericInstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NefqvfError as exc:
        # remaining domain violations are bad configuration
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
