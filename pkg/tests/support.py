"""Helpers shared by the test modules."""
from pathlib import Path

from driftlens.frontend import parse_file, parse_source
from driftlens.instrument import InstrumentOptions, instrument
from driftlens.interp import FPEnvironment, Mode, RunConfig, run
from driftlens.runtime import SimilarityPolicy

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"


def corpus_files() -> list:
    return sorted(CORPUS.glob("*.mf"))


def load(name: str):
    path = Path(name)
    if not path.is_absolute():
        path = CORPUS / name if (CORPUS / name).exists() else FIXTURES / name
    return parse_file(path)


def instrumented(name_or_unit, **opts):
    unit = load(name_or_unit) if isinstance(name_or_unit, str) else name_or_unit
    return instrument(unit, InstrumentOptions(**opts))


def env(text: str) -> FPEnvironment:
    return FPEnvironment.parse(text)


def capture(unit, trace, env_text="left,storage,aswritten,zero",
            policy=SimilarityPolicy(), **kw):
    return run(unit, RunConfig(Mode.CAPTURE, Path(trace), policy, env(env_text), **kw))


def compare(unit, trace, env_text="left,storage,aswritten,zero",
            policy=SimilarityPolicy(), **kw):
    return run(unit, RunConfig(Mode.COMPARE, Path(trace), policy, env(env_text), **kw))


def plain(unit, env_text="left,storage,aswritten,zero"):
    return run(unit, RunConfig(env=env(env_text)))


def program(body: str, decls: str = "", extra: str = "") -> object:
    """Parse a one-PROGRAM unit built from declaration and body text."""
    return parse_source(f"PROGRAM testprog\n{decls}\n{body}\nEND PROGRAM testprog\n{extra}")
