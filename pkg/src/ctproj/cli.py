"""Command-line entry point binding all modules.

Exit codes: 0 success, 2 usage error, 1 runtime error.  Diagnostics go to
stderr; output data paths (or benchmark/check results) go to stdout.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
import tracemalloc

import numpy as np

from .datamodel import AngleMask, ProjectionSet, Volume, read_array, write_array
from .errors import CtprojError, SpecMismatchError
from .geometry import parse_config
from .operator import ProjectorPair, adjoint_check
from .phantom import analytic_project, load_phantom, rasterize
from .recon import LsConfig, complete_sinogram, fbp_parallel, reconstruct_ls, refine_data_consistency

ADJOINT_TOL = 1e-5


def _load_config(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def _load_volume(path, spec):
    obj = read_array(path)
    if not isinstance(obj, Volume):
        raise SpecMismatchError(f"{path} is not a volume file")
    if obj.spec != spec:
        raise SpecMismatchError(f"{path}: volume spec disagrees with the config")
    return obj


def _load_projections(path, g):
    obj = read_array(path)
    if not isinstance(obj, ProjectionSet):
        raise SpecMismatchError(f"{path} is not a projection file")
    if obj.geometry.shape != g.shape:
        raise SpecMismatchError(f"{path}: projection shape disagrees with the config")
    return obj


def _parse_mask(value):
    if value.lstrip().startswith("["):
        data = json.loads(value)
    else:
        with open(value, "r", encoding="utf-8") as f:
            data = json.load(f)
    return AngleMask(np.asarray(data, dtype=bool))


def _ls_config(args):
    step = "auto" if args.step == "auto" else float(args.step)
    return LsConfig(maxIters=args.iters, tol=args.tol, step=step, nonneg=args.nonneg)


def _write_trace(path, trace):
    with open(path, "w", encoding="utf-8") as f:
        f.write("iteration,cost\n")
        for i, c in enumerate(trace):
            f.write(f"{i},{c!r}\n")


def _add_common(p, model=True):
    p.add_argument("--config", required=True, help="geometry/volume config JSON")
    if model:
        p.add_argument("--model", choices=["siddon", "sf"], default="siddon")
    p.add_argument("--threads", type=int, default=0, help="worker cap, 0 = all cores")


def _add_ls_flags(p):
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--step", default="auto")
    p.add_argument("--nonneg", action="store_true")
    p.add_argument("--trace", help="write per-iteration cost CSV here")


def build_parser():
    ap = argparse.ArgumentParser(prog="ctproj", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("project", help="forward project a volume")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("backproject", help="apply the matched transpose")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fbp", help="parallel-beam filtered backprojection")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("recon-ls", help="iterative least-squares reconstruction")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--x0", help="optional initial volume")
    _add_ls_flags(p)

    p = sub.add_parser("refine", help="data-consistency refinement on kept views")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True, help="projection data (full grid)")
    p.add_argument("--mask", required=True, help="JSON 0/1 array (inline or file)")
    p.add_argument("--x0", required=True, help="initial volume")
    p.add_argument("--out", required=True)
    _add_ls_flags(p)

    p = sub.add_parser("complete", help="fill masked views from a volume estimate")
    _add_common(p)
    p.add_argument("--in", dest="inp", required=True, help="measured projections")
    p.add_argument("--mask", required=True)
    p.add_argument("--x0", required=True, help="volume estimate")
    p.add_argument("--out", required=True)

    p = sub.add_parser("phantom", help="rasterize or analytically project a phantom")
    _add_common(p, model=False)
    p.add_argument("--phantom", required=True, help="phantom JSON file")
    p.add_argument("--out", required=True)
    p.add_argument("--supersample", type=int, default=2)
    p.add_argument("--analytic", action="store_true", help="write projections instead")

    p = sub.add_parser("adjoint-check", help="verify the matched-pair property")
    _add_common(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="time the projector pair and report memory")
    _add_common(p)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    return ap


def _set_threads(n):
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if n <= 0 else min(n, limit))


def _run(args) -> int:
    g, spec = _load_config(args.config)
    _set_threads(getattr(args, "threads", 0))

    if args.verb == "project":
        P = ProjectorPair(args.model, g, spec)
        y = P.apply(_load_volume(args.inp, spec))
        write_array(y, args.out)
        print(args.out)
    elif args.verb == "backproject":
        P = ProjectorPair(args.model, g, spec)
        x = P.apply_adjoint(_load_projections(args.inp, g))
        write_array(x, args.out)
        print(args.out)
    elif args.verb == "fbp":
        P = ProjectorPair(args.model, g, spec)
        x = fbp_parallel(_load_projections(args.inp, g), spec, P)
        write_array(x, args.out)
        print(args.out)
    elif args.verb == "recon-ls":
        P = ProjectorPair(args.model, g, spec)
        x0 = _load_volume(args.x0, spec) if args.x0 else None
        x, trace = reconstruct_ls(_load_projections(args.inp, g), P, _ls_config(args), x0)
        write_array(x, args.out)
        if args.trace:
            _write_trace(args.trace, trace)
        print(args.out)
    elif args.verb == "refine":
        P = ProjectorPair(args.model, g, spec)
        mask = _parse_mask(args.mask)
        x = refine_data_consistency(
            _load_volume(args.x0, spec),
            _load_projections(args.inp, g),
            mask,
            P,
            _ls_config(args),
        )
        write_array(x, args.out)
        print(args.out)
    elif args.verb == "complete":
        P = ProjectorPair(args.model, g, spec)
        y = complete_sinogram(
            _load_volume(args.x0, spec),
            _load_projections(args.inp, g),
            _parse_mask(args.mask),
            P,
        )
        write_array(y, args.out)
        print(args.out)
    elif args.verb == "phantom":
        with open(args.phantom, "r", encoding="utf-8") as f:
            ph = load_phantom(f.read())
        if args.analytic:
            write_array(analytic_project(ph, g), args.out)
        else:
            write_array(rasterize(ph, spec, args.supersample), args.out)
        print(args.out)
    elif args.verb == "adjoint-check":
        P = ProjectorPair(args.model, g, spec)
        report = adjoint_check(P, args.trials, args.seed)
        print(json.dumps(report))
        return 0 if report["maxRelErr"] < ADJOINT_TOL else 1
    elif args.verb == "bench":
        return _bench(args, g, spec)
    return 0


def _bench(args, g, spec) -> int:
    import numba

    P = ProjectorPair(args.model, g, spec)
    rng = np.random.default_rng(args.seed)
    x = Volume(spec, rng.random(spec.shape, dtype=np.float32))
    y = ProjectionSet(g, rng.random(g.shape, dtype=np.float32))
    vol_bytes = x.values.nbytes
    proj_bytes = y.values.nbytes
    # warm-up compiles the kernels outside the timed region
    P.apply(x)
    P.apply_adjoint(y)

    nthreads = numba.get_num_threads()
    det = g.detector
    # float64 scratch the SF kernels allocate per in-flight worker
    scratch = 0
    if args.model == "sf":
        scratch = nthreads * 8 * max(
            det.numRows * det.numCols + det.numCols, spec.numZ + det.numCols
        )

    fwd_times, bwd_times, peaks = [], [], []
    for _ in range(args.repeat):
        tracemalloc.start()
        t0 = time.perf_counter()
        P.apply(x)
        t1 = time.perf_counter()
        P.apply_adjoint(y)
        t2 = time.perf_counter()
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        fwd_times.append(t1 - t0)
        bwd_times.append(t2 - t1)
        peaks.append(peak + scratch)
    result = {
        "model": args.model,
        "threads": nthreads,
        "forward_median_s": statistics.median(fwd_times),
        "backproject_median_s": statistics.median(bwd_times),
        "peak_extra_bytes": max(peaks),
        "volume_bytes": vol_bytes,
        "projection_bytes": proj_bytes,
    }
    print(json.dumps(result))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (CtprojError, OSError, json.JSONDecodeError) as e:
        print(f"ctproj: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
