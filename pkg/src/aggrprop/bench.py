"""Deterministic benchmark families and the CSV runner.

``countgrid``
    Rows ``x`` with a colour ``z`` (``a(x,z)``) guess cells in a band of
    width three.  Four counting constraints of the shape
    ``:- a(X,Z), c(Z), #count{Y: b(X,Y)} >= K`` bound the cells per row and
    column.  Every constraint has two body variables, so naive grounding
    produces ``n*n`` instances of each, while the guessing part stays linear.
``sumknap``
    Items with small weights are placed in one of two bins; a ``#sum``
    constraint caps each bin.  Capacities leave enough slack for a greedy
    packing, so every instance is coherent.
"""

from __future__ import annotations

import csv
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .grounder import DEFAULT_GROUND_CAP
from .parser import parse
from .solver import SolveStats, check_model, solve

FAMILIES = ("countgrid", "sumknap")


@dataclass(frozen=True)
class BenchSpec:
    family: str
    size: int
    seed: int = 0

    @property
    def name(self) -> str:
        return f"{self.family}-{self.size}-s{self.seed}"


def countgrid(n: int, seed: int = 0) -> str:
    rng = random.Random(f"countgrid/{n}/{seed}")
    lines = [f"% countgrid n={n} seed={seed}"]
    for x in range(1, n + 1):
        lines.append(f"a({x},{rng.randint(1, n)}).")
    lines += [f"c({z})." for z in range(1, n + 1) if rng.random() < 0.5]
    width = min(3, n)
    for x in range(1, n + 1):
        cells = sorted({(x - 1 + d) % n + 1 for d in range(width)})
        lines += [f"{{b({x},{y})}}." for y in cells]
    lines += [
        ":- a(X,Z), c(Z), #count{Y: b(X,Y)} >= 2.",
        ":- a(X,Z), c(Z), #count{Y: b(X,Y)} < 1.",
        ":- a(X,Z), c(Z), #count{Y: b(Y,X)} >= 3.",
        ":- a(X,Z), not c(Z), #count{Y: b(X,Y)} >= 1.",
    ]
    return "\n".join(lines) + "\n"


def countgrid_ground_rules(n: int, n_colours: int) -> int:
    """Naive ground rule count of ``countgrid(n)`` with ``n_colours`` c-facts.

    The guards 1, 2 and 3 are constants too, so the universe has
    ``max(n, 3)`` elements.
    """
    u = max(n, 3)
    width = min(3, n)
    return 4 * u * u + n + n_colours + 2 * width * n


def sumknap(n: int, seed: int = 0) -> str:
    rng = random.Random(f"sumknap/{n}/{seed}")
    weights = [rng.randint(1, 3) for _ in range(n)]
    cap = (sum(weights) + 1) // 2 + 2
    lines = [f"% sumknap n={n} seed={seed}", "bin(1).", "bin(2)."]
    for i, w in enumerate(weights, 1):
        lines += [f"item({i}).", f"w({i},{w})."]
    lines += [f"cap(1,{cap}).", f"cap(2,{cap})."]
    lines += [
        "{sel(I,B)} :- item(I), bin(B).",
        ":- item(I), #count{B: sel(I,B)} >= 2.",
        ":- item(I), #count{B: sel(I,B)} < 1.",
        ":- cap(B,C), #sum{W,I: sel(I,B), w(I,W)} > C.",
    ]
    return "\n".join(lines) + "\n"


def generate(spec: BenchSpec) -> str:
    if spec.size < 1:
        raise ValueError("benchmark size must be at least 1")
    if spec.family == "countgrid":
        return countgrid(spec.size, spec.seed)
    if spec.family == "sumknap":
        return sumknap(spec.size, spec.seed)
    raise ValueError(f"unknown family {spec.family!r}; expected one of {', '.join(FAMILIES)}")


def parse_sizes(text: str) -> list[int]:
    """``"4..7"`` or ``"8,16,32"`` (ranges and lists may be mixed)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


@dataclass
class BenchRecord:
    instance: str
    mode: str
    outcome: str
    seconds: float | None      # None when the budget ran out
    stats: SolveStats
    model_ok: bool | None      # check_model on the returned model


def run_one(spec: BenchSpec, mode: str, timeout: float = 60.0,
            ground_cap: int = DEFAULT_GROUND_CAP, verify: bool = True) -> BenchRecord:
    program = parse(generate(spec))
    t0 = time.perf_counter()
    res = solve(program, mode, ground_cap=ground_cap, timeout=timeout)
    seconds = time.perf_counter() - t0
    ok = None
    if res.coherent and verify:
        ok = check_model(program, res.model).ok
    solved = res.outcome in ("coherent", "incoherent")
    return BenchRecord(spec.name, mode, res.outcome, seconds if solved else None, res.stats, ok)


def bench_run(specs, modes, timeout: float = 60.0, ground_cap: int = DEFAULT_GROUND_CAP,
              jobs: int = 1, verify: bool = True) -> list[BenchRecord]:
    tasks = [(s, m) for s in specs for m in modes]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: run_one(t[0], t[1], timeout, ground_cap, verify), tasks))
    return [run_one(s, m, timeout, ground_cap, verify) for s, m in tasks]


def _cell(seconds):
    return "" if seconds is None else f"{seconds:.3f}"


def write_csv(path, specs, modes, records):
    """One row per instance, one column per mode; blank cells for budget overruns."""
    by = {(r.instance, r.mode): r for r in records}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=";")
        w.writerow(["instance", *modes])
        for s in specs:
            w.writerow([s.name, *(_cell(by[(s.name, m)].seconds) if (s.name, m) in by else ""
                                  for m in modes)])


def write_cactus(path, modes, records):
    """Per-mode solve times sorted ascending; row k holds the k-th fastest."""
    series = {m: sorted(r.seconds for r in records if r.mode == m and r.seconds is not None)
              for m in modes}
    rows = max((len(v) for v in series.values()), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=";")
        w.writerow(["solved", *modes])
        for k in range(rows):
            w.writerow([k + 1, *(_cell(series[m][k]) if k < len(series[m]) else "" for m in modes)])


def write_stats(path, records):
    with open(path, "w", newline="") as fh:
        fh.write("instance;mode;outcome;model_ok;" + SolveStats.header() + "\n")
        for r in records:
            ok = "" if r.model_ok is None else str(r.model_ok).lower()
            fh.write(f"{r.instance};{r.mode};{r.outcome};{ok};{r.stats.row()}\n")
