"""Write, index, slice and re-read a large synthetic trace and time each step."""
import argparse
import logging
import random
import tempfile
import time
from pathlib import Path

from driftlens.runtime import DATA, RETURN, START, CaptureSession, TraceReader
from driftlens.tools import build_index, record_at, slice_trace

log = logging.getLogger(__name__)


def timed(label: str, fn):
    started = time.perf_counter()
    out = fn()
    log.info("%-22s %8.2f s", label, time.perf_counter() - started)
    return out


def write(path: Path, n: int, seed: int):
    rng = random.Random(seed)
    with CaptureSession(path) as cap:
        cap.record(START, 1, "MAIN")
        for i in range(n - 2):
            if i % 4 == 3:
                cap.record(DATA, 2 + i % 8, "N", "i4", rng.randint(-2**31, 2**31 - 1))
            else:
                cap.record(DATA, 2 + i % 8, "A(i)", "r8", rng.gauss(0.0, 1e3))
        cap.record(RETURN, 1, "MAIN")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", "--records", type=int, default=1_000_000)
    ap.add_argument("--stride", type=int, default=4096)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "big.trc"
        timed(f"capture {args.records}", lambda: write(path, args.records, args.seed))
        log.info("%-22s %8.1f MB", "file size", path.stat().st_size / 1e6)
        count = timed("sequential read", lambda: sum(1 for _ in TraceReader(path)))
        index = timed("build index", lambda: build_index(path, args.stride))
        sliced = timed("slice all", lambda: sum(1 for _ in slice_trace(path, index, 1, count)))
        rng = random.Random(args.seed)
        seqs = [rng.randint(1, count) for _ in range(args.samples)]
        recs = timed(f"{args.samples} random seeks", lambda: [record_at(path, index, s) for s in seqs])
    ok = count == sliced == args.records and all(r.seq == s for r, s in zip(recs, seqs))
    log.info("consistent: %s", ok)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
