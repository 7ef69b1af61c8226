"""Command-line driver: stream ingestion, verification, generation, benchmarks.

Stream grammar (one operation per line, `#` starts a comment):

    h <n>          header; vertices are 1..n, the source is vertex 1
    a <u> <v> <w>  insert arc (u, v) with integer length w >= 1
    q <v>          print the maintained distance estimate:  d <v> <est>
    p <v>          print a maintained path:  path <v> <k> <v_1..v_k> <len>

Modes: ``run`` prints estimates; ``verify`` appends ``<exact> <ratio>`` to
every ``d`` line and fails (exit 2) on any estimate outside
``[exact, (1+eps)*exact]`` or any invalid path; ``bench`` writes a per-
insertion CSV; ``conformance`` is verify with acceleration disabled (pure
theoretical step sizes); ``generate`` emits a reproducible random stream.

Exit codes: 0 ok, 1 usage, 2 invariant violation, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import random
import sys
import time
from dataclasses import dataclass

from .engine import DegreeReducedSssp, EngineConfig, make_sssp
from .graph import DynamicGraph
from .oracle import dijkstra

log = logging.getLogger("ipm_sssp")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2
EXIT_IO = 3


class StreamFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class InvariantViolation(RuntimeError):
    pass


@dataclass
class Header:
    n: int


@dataclass
class Insert:
    u: int
    v: int
    w: int


@dataclass
class DistQuery:
    v: int


@dataclass
class PathQuery:
    v: int


def parse_stream(text: str) -> list:
    """Parse stream text into the operation list (1-based vertex ids kept)."""
    ops: list = []
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag, args = parts[0], parts[1:]

        def ints(k):
            if len(args) != k:
                raise StreamFormatError(lineno, f"'{tag}' takes {k} argument(s), got {len(args)}")
            try:
                return [int(a) for a in args]
            except ValueError:
                raise StreamFormatError(lineno, f"non-integer argument in {line!r}") from None

        if tag == "h":
            if n is not None:
                raise StreamFormatError(lineno, "duplicate header")
            (n,) = ints(1)
            if n < 1:
                raise StreamFormatError(lineno, f"vertex count must be >= 1, got {n}")
            ops.append(Header(n))
            continue
        if n is None:
            raise StreamFormatError(lineno, f"'{tag}' before header")
        if tag == "a":
            u, v, w = ints(3)
            if not (1 <= u <= n and 1 <= v <= n):
                raise StreamFormatError(lineno, f"vertex out of range 1..{n}")
            if w < 1:
                raise StreamFormatError(lineno, f"length must be >= 1, got {w}")
            ops.append(Insert(u, v, w))
        elif tag in ("q", "p"):
            (v,) = ints(1)
            if not (1 <= v <= n):
                raise StreamFormatError(lineno, f"vertex out of range 1..{n}")
            ops.append(DistQuery(v) if tag == "q" else PathQuery(v))
        else:
            raise StreamFormatError(lineno, f"unknown operation {tag!r}")
    if n is None:
        raise StreamFormatError(1, "missing header")
    return ops


# -- generation ---------------------------------------------------------------


@dataclass
class GeneratorSpec:
    n: int
    insertions: int
    wmax: int = 16
    pattern: str = "uniform"
    seed: int = 0


def generate(spec: GeneratorSpec) -> str:
    """Reproducible random stream; see module docstring for patterns."""
    if spec.n < 2:
        raise ValueError(f"need n >= 2, got {spec.n}")
    if spec.pattern not in ("uniform", "shortcut-heavy", "distance-collapse"):
        raise ValueError(f"unknown pattern {spec.pattern!r}")
    if spec.insertions < 1:
        raise ValueError("need at least one insertion")
    rng = random.Random(spec.seed)
    n, wmax = spec.n, spec.wmax
    g = DynamicGraph(n, source=0)
    lines = [f"h {n}"]
    count = 0

    def add(u0: int, v0: int, w: int) -> None:
        nonlocal count
        g.insert_edge(u0, v0, w)
        lines.append(f"a {u0 + 1} {v0 + 1} {w}")
        count += 1

    # spanning arborescence out of the source first, so everything is reachable
    for v in range(1, n):
        if count >= spec.insertions:
            break
        add(rng.randrange(0, v), v, rng.randint(max(1, wmax // 2), wmax))

    while count < spec.insertions:
        if spec.pattern == "uniform":
            u = rng.randrange(n)
            v = rng.randrange(n)
            while v == u:
                v = rng.randrange(n)
            add(u, v, rng.randint(1, wmax))
        else:
            dist = dijkstra(g).dist
            order = sorted(range(1, n), key=lambda x: (-dist[x], x))
            v = order[rng.randrange(max(1, min(3, len(order))))]
            if spec.pattern == "distance-collapse":
                u, w = 0, max(1, int(dist[v]) // 2)
            else:  # shortcut-heavy
                near = [x for x in range(n) if dist[x] <= dist[v] and x != v]
                u = near[rng.randrange(len(near))]
                w = max(1, int(0.7 * (dist[v] - dist[u])))
            add(u, v, w)
        if count % 4 == 0:
            lines.append(f"q {rng.randrange(2, n + 1)}")
        if count % 16 == 0:
            lines.append(f"p {rng.randrange(2, n + 1)}")
    for v in range(2, n + 1):
        lines.append(f"q {v}")
    return "\n".join(lines) + "\n"


# -- driving ------------------------------------------------------------------


@dataclass
class RunConfig:
    mode: str = "run"
    input: str | None = None
    output: str | None = None
    csv: str | None = None
    epsilon: float = 0.2
    levels: int = 2
    p: int | None = None
    seed: int = 0
    degree_reduce: bool = False
    accelerate: bool = True
    gen_n: int = 16
    gen_insertions: int = 32
    gen_wmax: int = 16
    gen_pattern: str = "uniform"


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


class _Driver:
    """Replays one operation stream against the engine and an exact mirror."""

    def __init__(self, cfg: RunConfig, ops: list, out: io.TextIOBase):
        self.cfg = cfg
        self.ops = ops
        self.out = out
        self.verify = cfg.mode in ("verify", "conformance")
        header = ops[0]
        config = EngineConfig(
            epsilon=cfg.epsilon,
            levels=cfg.levels,
            p=cfg.p,
            accelerate=cfg.accelerate and cfg.mode != "conformance",
        )
        self.mirror = DynamicGraph(header.n, source=0)
        if cfg.degree_reduce:
            self.engine = DegreeReducedSssp(header.n, 0, config)
        else:
            self.engine = make_sssp(DynamicGraph(header.n, source=0), config)
        self._oracle_dirty = True
        self._oracle = None
        self.rows: list[dict] = []
        self.step = 0

    def oracle(self):
        if self._oracle_dirty:
            self._oracle = dijkstra(self.mirror)
            self._oracle_dirty = False
        return self._oracle

    def run(self) -> None:
        bench = self.cfg.mode == "bench"
        for op in self.ops[1:]:
            if isinstance(op, Insert):
                t0 = time.perf_counter()
                self.engine.insert(op.u - 1, op.v - 1, op.w)
                wall = time.perf_counter() - t0
                self.mirror.insert_edge(op.u - 1, op.v - 1, op.w)
                self._oracle_dirty = True
                self.step += 1
                if bench:
                    self.rows.append(self._bench_row(wall))
                elif self.verify:
                    self._check_all()
            elif isinstance(op, DistQuery):
                self._answer_dist(op.v)
            else:
                self._answer_path(op.v)

    def _estimate(self, v0: int) -> float:
        return float(self.engine.query_distance(v0))

    def _answer_dist(self, v: int) -> None:
        est = self._estimate(v - 1)
        line = f"d {v} {_fmt(est)}"
        if self.verify:
            exact = float(self.oracle().dist[v - 1])
            ratio = 1.0 if est == exact else (est / exact if exact > 0 else math.inf)
            line += f" {_fmt(exact)} {ratio:.6f}"
            self._assert_sandwich(v - 1, est, exact)
        self.out.write(line + "\n")

    def _answer_path(self, v: int) -> None:
        est = self._estimate(v - 1)
        if math.isinf(est):
            self.out.write(f"path {v} 0 inf\n")
            return
        edges = self.engine.query_path(v - 1)
        verts, plen = self._walk(edges, v - 1)
        body = " ".join(str(x + 1) for x in verts)
        self.out.write(f"path {v} {len(verts)} {body} {_fmt(plen)}\n")
        if self.verify:
            exact = float(self.oracle().dist[v - 1])
            if plen > (1 + self.cfg.epsilon) * exact + 1e-9:
                raise InvariantViolation(
                    f"path to {v} has length {plen} > (1+eps) * exact {exact}"
                )

    def _walk(self, edges: list, v0: int) -> tuple[list, float]:
        g = self.mirror
        at = g.source
        verts = [at]
        plen = 0
        for e in edges:
            if not (0 <= e < g.m) or g.tail[e] != at:
                raise InvariantViolation(f"reported path broken at edge {e}")
            plen += g.length[e]
            at = g.head[e]
            verts.append(at)
        if at != v0:
            raise InvariantViolation(f"reported path ends at {at + 1}, wanted {v0 + 1}")
        return verts, plen

    def _assert_sandwich(self, v0: int, est: float, exact: float) -> None:
        eps = self.cfg.epsilon
        if math.isinf(exact):
            ok = math.isinf(est)
        else:
            ok = exact - 1e-9 <= est <= (1 + eps) * exact + 1e-9
        if not ok:
            raise InvariantViolation(
                f"estimate {est} for vertex {v0 + 1} outside [exact, (1+eps)*exact] with exact={exact}"
            )

    def _check_all(self) -> None:
        dist = self.oracle().dist
        for v0 in range(self.mirror.n):
            self._assert_sandwich(v0, self._estimate(v0), float(dist[v0]))

    def _bench_row(self, wall: float) -> dict:
        met = self.engine.metrics_snapshot()
        dist = self.oracle().dist
        max_ratio = 1.0
        for v0 in range(self.mirror.n):
            exact = float(dist[v0])
            if 0 < exact < math.inf:
                max_ratio = max(max_ratio, self._estimate(v0) / exact)
        return {
            "step": self.step,
            "m": self.mirror.m,
            "ipm_iterations_total": met.get("ipm_steps", 0),
            "recourse_total": met.get("recourse", 0),
            "gradient_updates": met.get("gradient_updates", 0),
            "phases": met.get("phases", 0),
            "max_ratio": f"{max_ratio:.6f}",
            "wall_ms": f"{wall * 1000:.3f}",
        }


BENCH_COLUMNS = [
    "step", "m", "ipm_iterations_total", "recourse_total",
    "gradient_updates", "phases", "max_ratio", "wall_ms",
]


def run(cfg: RunConfig) -> int:
    try:
        if cfg.mode == "generate":
            text = generate(GeneratorSpec(
                n=cfg.gen_n, insertions=cfg.gen_insertions, wmax=cfg.gen_wmax,
                pattern=cfg.gen_pattern, seed=cfg.seed,
            ))
            _write_output(cfg.output, text)
            return EXIT_OK
        if cfg.input is None:
            text = sys.stdin.read()
        else:
            with open(cfg.input) as fh:
                text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        ops = parse_stream(text)
    except StreamFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = io.StringIO()
    driver = _Driver(cfg, ops, out)
    try:
        driver.run()
    except InvariantViolation as exc:
        sys.stdout.write(out.getvalue())
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

    try:
        if cfg.mode == "bench":
            _write_csv(cfg.csv, driver.rows)
        _write_output(cfg.output, out.getvalue())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _write_output(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_csv(path: str | None, rows: list) -> None:
    fh = sys.stdout if path is None else open(path, "w", newline="")
    try:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if path is not None:
            fh.close()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ipm-sssp",
        description="incremental (1+eps)-approximate single-source shortest paths",
    )
    ap.add_argument("--mode", choices=["run", "verify", "bench", "conformance", "generate"], default="run")
    ap.add_argument("--epsilon", type=float, default=0.2)
    ap.add_argument("--levels", type=int, default=2, help="approximation levels (0 = exact)")
    ap.add_argument("--p", type=int, default=None, help="barrier power override")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--input", default=None, help="stream file (default: stdin)")
    ap.add_argument("--output", default=None, help="answer file (default: stdout)")
    ap.add_argument("--csv", default=None, help="bench CSV path (default: stdout)")
    ap.add_argument("--degree-reduce", action="store_true")
    ap.add_argument("--accelerate", dest="accelerate", action="store_true", default=True)
    ap.add_argument("--no-accelerate", dest="accelerate", action="store_false")
    ap.add_argument("--gen-n", type=int, default=16)
    ap.add_argument("--gen-insertions", type=int, default=32)
    ap.add_argument("--gen-wmax", type=int, default=16)
    ap.add_argument("--gen-pattern", choices=["uniform", "shortcut-heavy", "distance-collapse"], default="uniform")
    return ap


def main(argv=None) -> int:
    level = os.environ.get("IPM_SSSP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    cfg = RunConfig(
        mode=ns.mode, input=ns.input, output=ns.output, csv=ns.csv,
        epsilon=ns.epsilon, levels=ns.levels, p=ns.p, seed=ns.seed,
        degree_reduce=ns.degree_reduce, accelerate=ns.accelerate,
        gen_n=ns.gen_n, gen_insertions=ns.gen_insertions,
        gen_wmax=ns.gen_wmax, gen_pattern=ns.gen_pattern,
    )
    try:
        return run(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
