"""Reproduce the uninitialised-argument and .OR.-order scenarios.

Prints the rendered difference reports and checks the hoisting rewrite
removes the sequence error.
"""
import argparse
import logging
import tempfile
from pathlib import Path

from driftlens.frontend import parse_file
from driftlens.instrument import instrument
from driftlens.interp import FPEnvironment, Mode, RunConfig, run
from driftlens.interp.hoist import rewrite_hoist_condition
from driftlens.tools import render_report

log = logging.getLogger(__name__)

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "corpus"


def relative_run(unit, env_ref: str, env_new: str, tmp: Path):
    inst, sites = instrument(unit)
    trace = tmp / "ref.trc"
    run(inst, RunConfig(Mode.CAPTURE, trace, env=FPEnvironment.parse(env_ref)))
    result = run(inst, RunConfig(Mode.COMPARE, trace, env=FPEnvironment.parse(env_new)))
    return result, sites


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1, help="seed of the second run's fill")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        log.info("== uninitialised INTENT(INOUT) actual (space fill vs seeded fill)")
        result, sites = relative_run(parse_file(CORPUS / "case1.mf"),
                                     "left,storage,aswritten,space",
                                     f"left,storage,aswritten,seeded:{args.seed}", tmp)
        log.info("%s", render_report(result.report, sites).rstrip())
        log.info("exit %d", result.exit_status)
        ok &= result.exit_status == 1

        log.info("\n== .OR. chain with a repeated call (as written vs reversed)")
        unit = parse_file(CORPUS / "case3.mf")
        result, sites = relative_run(unit, "left,storage,aswritten,zero",
                                     "left,storage,reversed,zero", tmp)
        log.info("%s", render_report(result.report, sites).rstrip())
        log.info("exit %d", result.exit_status)
        ok &= result.exit_status == 2

        result, _ = relative_run(rewrite_hoist_condition(unit), "left,storage,aswritten,zero",
                                 "left,storage,reversed,zero", tmp)
        log.info("after hoisting the call out of the condition: exit %d", result.exit_status)
        ok &= result.exit_status == 0
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
