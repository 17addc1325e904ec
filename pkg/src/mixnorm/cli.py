"""Command-line front end.

    mixnorm certify --weight std:0
    mixnorm norm --f "1,1" --weight std:0 --p 2 --q 2
    mixnorm kernel-sweep --weight log:2 --N 0 1 2 --out runs/k
    mixnorm projection-probe --weight std:0 --q 2
    mixnorm accept --out runs/acc [--only kernel] [--tolerance 1e-30]

Exit codes: 0 on completion, 1 when a hard check fails (or a sweep does
not converge without ``--allow-unconverged``), 2 on invalid input.
Thread count comes from ``MIXNORM_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import ALL_IDS, SuiteConfig, manifest_json, run_suite, summary_line
from .diskfn import (
    WITH_R,
    WITHOUT_R,
    AnalyticPoly,
    DiskDomainError,
    NormSpec,
    mixed_norm,
    mixed_norm_weak,
    space_norm_Xq,
)
from .operators import (
    annulus_test_weighted,
    bergman_project,
    divergence_trace,
    kernel_mean_sweep,
    kernel_sweep_grid,
    kernel_truncate,
    maximal_project,
    schur_test_check,
)
from .ratios import _jsonable
from .weights import (
    WeightDomainError,
    certify_lower_doubling,
    certify_upper_doubling,
    doubling_diagnostics,
    inverse_tail_diagnostic,
    load_weight,
)

log = logging.getLogger("mixnorm")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad command-line or config input; maps to exit code 2."""


@dataclass
class RunConfig:
    """Resolved options of one invocation; written next to the outputs."""

    command: str
    weight: str | None = None
    p: float = 2.0
    q: float = 2.0
    f: str | None = None
    inner: str = "hp"
    convention: str = WITH_R
    N: list[int] = field(default_factory=lambda: [0, 1, 2])
    points: int = 40
    s_max: float = 0.999
    a_abs: float = 0.9995
    seed: int | None = None
    tolerance: float | None = None
    only: list[str] = field(default_factory=list)
    allow_unconverged: bool = False
    out: str | None = None

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        for k in ("p", "q"):
            if data.get(k) == "inf":
                data[k] = math.inf
        return cls(**data)


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixnorm", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"mixnorm {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, weight=True):
        p.add_argument("--config", help="JSON file with option defaults")
        p.add_argument("--out", help="output directory")
        if weight:
            p.add_argument("--weight", help="weight spec, e.g. std:0, log:2, exp:1, file:w.csv, pow:std:0:2")
        return p

    c = common(sub.add_parser("certify", help="doubling classification and diagnostics"))
    c.set_defaults(handler=cmd_certify)

    n = common(sub.add_parser("norm", help="mixed and decomposition-space norms of a polynomial"))
    n.add_argument("--f", help='coefficients "1,1", a JSON list, or @file')
    n.add_argument("--p", type=_float)
    n.add_argument("--q", type=_float, help="outer exponent; inf for the weak norm")
    n.add_argument("--inner", choices=("hp", "bloch", "bmoa"))
    n.add_argument("--convention", choices=(WITH_R, WITHOUT_R))
    n.set_defaults(handler=cmd_norm)

    k = common(sub.add_parser("kernel-sweep", help="integral means of kernel derivatives"))
    k.add_argument("--N", type=int, nargs="+")
    k.add_argument("--points", type=int)
    k.add_argument("--s-max", dest="s_max", type=_float)
    k.add_argument("--a-abs", dest="a_abs", type=_float)
    k.add_argument("--allow-unconverged", dest="allow_unconverged", action="store_true", default=None)
    k.set_defaults(handler=cmd_kernel_sweep)

    pp = common(sub.add_parser("projection-probe", help="divergence functional and Schur test"))
    pp.add_argument("--q", type=_float)
    pp.set_defaults(handler=cmd_projection_probe)

    a = common(sub.add_parser("accept", help="run the acceptance suite"), weight=False)
    a.add_argument("--only", nargs="+", help=f"subset by check id substring ({', '.join(ALL_IDS)})")
    a.add_argument("--tolerance", type=_float, help="override every exactness tolerance")
    a.add_argument("--seed", type=int)
    a.set_defaults(handler=cmd_accept)
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    data: dict = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
    data.pop("command", None)
    for key, val in vars(args).items():
        if key in ("config", "handler", "verbose", "command") or val is None:
            continue
        data[key] = val
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("p", "q", "s_max", "a_abs", "tolerance"):
        if isinstance(data.get(key), str):
            data[key] = float(data[key])
    cfg = RunConfig(command=args.command, **data)
    if isinstance(cfg.only, str):
        cfg.only = [cfg.only]
    return cfg


def _weight(cfg: RunConfig):
    if not cfg.weight:
        raise InputError("--weight is required")
    try:
        return load_weight(cfg.weight)
    except (WeightDomainError, ValueError, OSError, KeyError) as exc:
        raise InputError(f"invalid weight {cfg.weight!r}: {exc}") from exc


def _poly(text: str | None) -> AnalyticPoly:
    if text is None:
        raise InputError("--f is required")
    try:
        if text.startswith("@"):
            text = Path(text[1:]).read_text()
        return AnalyticPoly.parse(text)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed function: {exc}") from exc


def _outdir(cfg: RunConfig) -> Path | None:
    if not cfg.out:
        return None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json())
    return out


def _emit(obj: dict, out: Path | None, name: str) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if out is not None:
        (out / name).write_text(text)
    sys.stdout.write(text)


# ---------------------------------------------------------------- commands
def cmd_certify(cfg: RunConfig) -> int:
    w = _weight(cfg)
    up = certify_upper_doubling(w)
    low = certify_lower_doubling(w)
    report = {"weight": w.spec(), "upper_doubling": up.to_dict(), "lower_doubling": low.to_dict()}
    if up.certified:
        report["diagnostics"] = [r.to_dict() for r in doubling_diagnostics(w)]
        report["inverse_tail"] = inverse_tail_diagnostic(w).to_dict()
    else:
        report["diagnostics"] = "skipped: not upper doubling"
    _emit(report, _outdir(cfg), "certify.json")
    log.info("%s: upper %s, lower %s", w.spec(), up.certified, low.certified)
    return EXIT_OK


def cmd_norm(cfg: RunConfig) -> int:
    w = _weight(cfg)
    f = _poly(cfg.f)
    try:
        if math.isinf(cfg.q):
            val = mixed_norm_weak(f, w, cfg.p)
            rep = {"mixed_norm_weak": val}
        else:
            val = mixed_norm(f, w, cfg.p, cfg.q, cfg.convention)
            check = mixed_norm(f, w, cfg.p, cfg.q, cfg.convention, rtol=1e-12)
            rep = {"mixed_norm": val, "audit": {"rtol": 1e-10, "tight_rtol_value": check,
                                                "rel_change": abs(check - val) / check if check else 0.0}}
        spec = NormSpec(cfg.q, w, cfg.inner, cfg.p, WITHOUT_R)
        rep["space_norm"] = space_norm_Xq(f, spec)
    except DiskDomainError as exc:
        raise InputError(str(exc)) from exc
    rep.update(weight=w.spec(), p=cfg.p, q=cfg.q, inner=cfg.inner, convention=cfg.convention,
               degree=f.degree)
    _emit(rep, _outdir(cfg), "norm.json")
    return EXIT_OK


def cmd_kernel_sweep(cfg: RunConfig) -> int:
    w = _weight(cfg)
    if not certify_upper_doubling(w).certified:
        log.warning("%s is not certified upper doubling; the estimate need not hold", w.spec())
    if cfg.points < 2 or not 0 < cfg.s_max < cfg.a_abs < 1:
        raise InputError("need points >= 2 and 0 < s_max < a_abs < 1")
    out = _outdir(cfg)
    grid = np.concatenate([[0.0], kernel_sweep_grid(cfg.points, cfg.s_max)])
    status = EXIT_OK
    summary = []
    for N in cfg.N:
        if N < 0:
            raise InputError("N must be nonnegative")
        pr = kernel_mean_sweep(w, N, grid, a_abs=cfg.a_abs)
        if out is not None:
            pr.to_json(out / f"kernel_N{N}.json")
            pr.to_csv(out / f"kernel_N{N}.csv")
        summary.append({"N": N, "verdict": pr.ratio.verdict, "ratio_min": pr.ratio.ratio_min,
                        "ratio_max": pr.ratio.ratio_max, "spread": pr.ratio.spread,
                        "max_rel_change": pr.audit["max_rel_change"], "converged": pr.converged})
        if not pr.converged and not cfg.allow_unconverged:
            status = EXIT_FAIL
    _emit({"weight": w.spec(), "sweeps": summary}, out, "kernel_summary.json")
    return status


def _domination_samples(w, q: float) -> list[dict]:
    """``|P f| <= P^+ |f|`` on annulus test functions."""
    ker = kernel_truncate(w, 32)
    rows = []
    for t in (0.5, 0.9):
        ws = annulus_test_weighted(t, q, w, angle_count=128)
        pts = np.array([0.0, 0.5, 0.9 + 0.0j, 0.5j])
        pv = np.abs(bergman_project(w, ws, ker, pts))
        pm = np.real(maximal_project(w, ws, ker, pts))
        rows.append({"t": t, "abs_P": pv.tolist(), "P_plus": pm.tolist(),
                     "dominated": bool(np.all(pv <= pm * (1 + 1e-12)))})
    return rows


def cmd_projection_probe(cfg: RunConfig) -> int:
    w = _weight(cfg)
    if not 1 < cfg.q < math.inf:
        raise InputError("projection-probe needs 1 < q < inf")
    out = _outdir(cfg)
    u = np.concatenate([[0.5], 10.0 ** -np.arange(1.0, 15.25, 0.5)])
    trace = divergence_trace(w, cfg.q, u)
    schur = schur_test_check(w, cfg.q)
    if out is not None:
        trace.to_json(out / "divergence.json")
        trace.to_csv(out / "divergence.csv")
        schur.to_json(out / "schur.json")
        schur.to_csv(out / "schur.csv")
    rep = {
        "weight": w.spec(), "q": cfg.q,
        "divergence": {"verdict": trace.ratio.verdict, "trace": list(zip(trace.grid, trace.lhs)),
                       "coarse_max": trace.ratio.coarse_max, "max": trace.ratio.ratio_max},
        "schur": {"verdict": schur.ratio.verdict, "coarse_max": schur.ratio.coarse_max,
                  "max": schur.ratio.ratio_max},
        "domination": _domination_samples(w, cfg.q),
    }
    _emit(rep, out, "projection_probe.json")
    return EXIT_OK


def cmd_accept(cfg: RunConfig) -> int:
    suite = SuiteConfig(only=tuple(cfg.only), tolerance=cfg.tolerance)
    if cfg.seed is not None:
        suite.seed = cfg.seed
    try:
        manifest = run_suite(suite, progress=lambda r: print(summary_line(r.to_dict()), flush=True))
    except KeyError as exc:
        raise InputError(str(exc)) from exc
    out = _outdir(cfg)
    if out is not None:
        (out / "acceptance_manifest.json").write_text(manifest_json(manifest))
    if manifest["passed"]:
        print("all checks passed")
        return EXIT_OK
    print("failed: " + ", ".join(manifest["failed"]))
    return EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return args.handler(cfg)
    except (InputError, TypeError) as exc:
        print(f"mixnorm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
