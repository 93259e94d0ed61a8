"""Drift removal on the 1000-step accumulation.

Runs the program under two environments in plain mode (the results drift
apart), then captures under the first and compares under the second (the
compare run ends on the reference value bit for bit).
"""
import argparse
import logging
import tempfile
from pathlib import Path

from driftlens.frontend import parse_file
from driftlens.instrument import instrument
from driftlens.interp import FPEnvironment, Mode, RunConfig, run
from driftlens.runtime import SimilarityPolicy

log = logging.getLogger(__name__)

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--program", default=str(CORPUS / "accumulate.mf"))
    ap.add_argument("--env-a", default="left,storage,aswritten,space")
    ap.add_argument("--env-b", default="pairwise,extended,aswritten,space")
    ap.add_argument("--rel", type=float, default=1.0e-3)
    ap.add_argument("--abs", type=float, default=1.0e-10)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    unit, _ = instrument(parse_file(args.program))
    env_a, env_b = FPEnvironment.parse(args.env_a), FPEnvironment.parse(args.env_b)
    policy = SimilarityPolicy(args.rel, args.abs)

    plain_a = run(unit, RunConfig(env=env_a)).final_state
    plain_b = run(unit, RunConfig(env=env_b)).final_state
    log.info("plain run, env A: %r", plain_a)
    log.info("plain run, env B: %r", plain_b)

    with tempfile.TemporaryDirectory() as tmp:
        trace = Path(tmp) / "ref.trc"
        ref = run(unit, RunConfig(Mode.CAPTURE, trace, policy, env_a))
        cmp = run(unit, RunConfig(Mode.COMPARE, trace, policy, env_b))
    r = cmp.report
    log.info("captured %d records under A", ref.records)
    log.info("compare under B: identical %d, similar %d, different %d, exit %d",
             r.identical, r.similar, r.different, cmp.exit_status)
    log.info("final state, capture: %r", ref.final_state)
    log.info("final state, compare: %r", cmp.final_state)
    same = ref.final_state == cmp.final_state
    log.info("compare run ends on the reference state: %s", same)
    return 0 if same and cmp.exit_status == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
