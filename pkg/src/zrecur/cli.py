"""Command line runner: ``zrecur <subcommand> [--config FILE] [--preset NAME] ...``.

Every run writes ``manifest.json`` (the resolved configuration), one or more
CSV data files and ``verdicts.json`` under ``--out``. All of them carry the
manifest hash, computed over the manifest without ``version`` and ``out``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import subprocess
import sys
from pathlib import Path

from . import __version__, analysis, laws, spectral
from .gibbs import ModelError
from .presets import canonical_json, preset_names, resolve
from .spectral import SpectralError
from .zext import default_workers, write_tau_csv

DEFAULTS = {
    "toy-tau": {"dim": 1, "eps": 2.0**-12, "n_samples": 20000, "mode": "idealized", "norm": "euclidean",
                "step_cap": 2**62},
    "toy-exponent": {"dim": 1, "eps_list": [2.0**-j for j in range(6, 15)], "n_samples": 2000},
    "toy-rn": {"n": 1000, "n_samples": 100000},
    "sft-build": {},
    "sft-spectral": {"grid_size": 1024},
    "zext-llt": {"n_list": [500, 1000, 2000], "word_a": None, "word_b": None},
    "zext-tau": {"k": 6, "n_samples": 1000, "step_cap": 10**8, "t_max": 3.0},
    "zext-exponent": {"k_list": [3, 4, 5, 6, 7, 8], "n_samples": 1000, "step_cap": 10**6},
    "hirata": {"k": 5, "n_samples": 10000, "step_cap": 10**7},
    "limits-verify": {"n_draws": 10**7, "beta": 1.0},
}
MODEL_KINDS = {"sft-build", "sft-spectral", "zext-llt", "zext-tau", "zext-exponent", "hirata"}
DEFAULT_PRESET = {"hirata": "uniform2"}


class ConfigError(ValueError):
    pass


def artifact_version() -> str:
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def manifest_hash(manifest: dict) -> str:
    core = {k: v for k, v in manifest.items() if k not in ("version", "out")}
    return hashlib.sha256(canonical_json(core).encode()).hexdigest()[:16]


def build_manifest(kind: str, config: dict, args) -> dict:
    """Merge defaults, the config file and command line flags; reject unknown fields."""
    params = dict(DEFAULTS[kind])
    given = dict(config.get("parameters", {}))
    unknown = sorted(set(given) - set(params))
    if unknown:
        raise ConfigError(f"parameters.{unknown[0]}: unknown field for {kind}")
    params.update(given)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    manifest = {"kind": kind, "seed": seed, "parameters": params}
    if kind in MODEL_KINDS:
        if args.preset:
            manifest["model"] = args.preset
        elif "model" in config:
            manifest["model"] = config["model"]
        else:
            manifest["model"] = DEFAULT_PRESET.get(kind, "lazy-walk")
    manifest["version"] = artifact_version()
    manifest["out"] = str(args.out)
    return manifest


def _model(manifest):
    spec = manifest["model"]
    return resolve(preset=spec) if isinstance(spec, str) else resolve(model=spec)


def _write_csv(path: Path, header, rows, digest: str):
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest_hash={digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _f(x) -> str:
    return repr(float(x))


def run(manifest: dict, workers: int) -> list[dict]:
    """Execute one manifest; returns the verdict records."""
    kind, p, seed = manifest["kind"], manifest["parameters"], manifest["seed"]
    out = Path(manifest["out"])
    digest = manifest_hash(manifest)
    samples = out / "samples.csv"

    if kind == "toy-rn":
        st = analysis.toy_rn_study(p["n"], p["n_samples"], seed)
        _write_csv(samples, ["sample_index", "r_n"], enumerate(st.data["r_n"].tolist()), digest)
    elif kind == "toy-tau":
        st = analysis.toy_tau_study(p["dim"], p["eps"], p["n_samples"], seed, p["mode"], p["norm"], p["step_cap"])
        rows = [(i, s.tau, s.t_count, int(s.censored), _f(v))
                for i, (s, v) in enumerate(zip(st.data["samples"], st.data["scaled"]))]
        _write_csv(samples, ["sample_index", "tau", "t_count", "censored", "scaled"], rows, digest)
    elif kind == "toy-exponent":
        st = analysis.toy_exponent_study(p["eps_list"], p["dim"], p["n_samples"], seed)
        rows = [(_f(x), _f(y), _f(c)) for x, y, c in zip(st.data["x"], st.data["y"], st.data["censored"])]
        _write_csv(out / "regression.csv", ["neg_log_eps", "log_median_tau", "censored"], rows, digest)
    elif kind == "sft-build":
        m = _model(manifest)
        g = m.gibbs
        rows = [("".join(m.spec.symbols[i] for i in s), _f(g.stationary[a]),
                 *(_f(x) for x in g.transitions[a])) for a, s in enumerate(g.states)]
        _write_csv(out / "states.csv", ["state", "p"] + [f"pi_{j}" for j in range(g.n_states)], rows, digest)
        st = analysis.Study([analysis.verdict("model_valid", g.entropy, None, True, entropy=g.entropy,
                                              dimension=g.dimension, primitivity=m.spec.primitivity,
                                              perron_value=g.perron_value,
                                              sigma2_h=spectral.information_variance(g))])
    elif kind == "sft-spectral":
        st = analysis.spectral_study(_model(manifest), p["grid_size"])
        spectral.write_curve_csv(out / "curve.csv", st.data["curve"], f"manifest_hash={digest}")
    elif kind == "zext-llt":
        st = analysis.llt_study(_model(manifest), p["n_list"], p["word_a"], p["word_b"])
        rows = [(n, _f(pr), _f(r)) for n, pr, r in st.data["rows"]]
        _write_csv(out / "llt.csv", ["n", "probability", "ratio"], rows, digest)
    elif kind in ("zext-tau", "zext-exponent", "hirata"):
        m = _model(manifest)
        if kind == "zext-tau":
            st = analysis.zext_shape_study(m, p["k"], p["n_samples"], p["step_cap"], seed, p["t_max"], workers)
        elif kind == "zext-exponent":
            st = analysis.zext_exponent_study(m, p["k_list"], p["n_samples"], p["step_cap"], seed, workers)
        else:
            st = analysis.hirata_study(m, p["k"], p["n_samples"], p["step_cap"], seed, workers)
        write_tau_csv(samples, st.data["tables"], f"manifest_hash={digest}")
    elif kind == "limits-verify":
        st = analysis.identities_study(seed, p["n_draws"], p["beta"])
        rows = [(_f(r.s), _f(r.estimate), _f(r.target), _f(r.se), variant)
                for variant, key in (("stated", "laplace_rows"), ("sqrt2", "laplace_rows_sqrt2"))
                for r in st.data[key]]
        _write_csv(out / "laplace.csv", ["s", "estimate", "target", "se", "variant"], rows, digest)
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"kind: unknown experiment {kind!r}")
    return st.verdicts


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def report(paths) -> tuple[list[dict], bool]:
    """Collect ``verdicts.json`` files under ``paths`` into one summary."""
    rows = []
    for root in paths:
        root = Path(root)
        for f in sorted([root] if root.is_file() else root.rglob("verdicts.json")):
            data = json.loads(f.read_text())
            for v in data["verdicts"]:
                rows.append({"source": str(f.parent), "kind": data.get("kind"), **v})
    return rows, bool(rows) and all(r["verdict"] for r in rows)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zrecur", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in DEFAULTS:
        sp = sub.add_parser(kind)
        sp.add_argument("--config", type=Path, help="JSON file with seed, parameters and model")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, default=None, help="default: $ZRECUR_WORKERS or 1")
        sp.add_argument("--out", type=Path, default=Path("out") / kind)
        if kind in MODEL_KINDS:
            sp.add_argument("--preset", choices=preset_names())
    rp = sub.add_parser("report")
    rp.add_argument("paths", nargs="+", type=Path)
    rp.add_argument("--out", type=Path, default=None)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "report":
        rows, ok = report(args.paths)
        for r in rows:
            print(f"{'PASS' if r['verdict'] else 'FAIL'}  {r['kind']:<14} {r['name']:<28} {r['statistic']}")
        print(f"overall: {'PASS' if ok else 'FAIL'} ({sum(r['verdict'] for r in rows)}/{len(rows)})")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            write_json(args.out / "report.json", {"overall": ok, "verdicts": rows})
        return 0 if ok else 1
    try:
        config = json.loads(args.config.read_text()) if args.config else {}
        if not isinstance(config, dict):
            raise ConfigError("config: top level must be an object")
        manifest = build_manifest(args.command, config, args)
        workers = args.workers or default_workers()
        out = Path(manifest["out"])
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "manifest.json", {**manifest, "manifest_hash": manifest_hash(manifest)})
        verdicts = run(manifest, workers)
    except (ConfigError, ModelError, SpectralError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_json(out / "verdicts.json", {"kind": args.command, "manifest_hash": manifest_hash(manifest),
                                       "verdicts": verdicts})
    for v in verdicts:
        print(f"{'PASS' if v['verdict'] else 'FAIL'}  {v['name']}: {v['statistic']}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
