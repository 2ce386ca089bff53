import numpy as np
import pytest

from vocalremix.dataset import SongSpec, make_corpus, synth_song


@pytest.fixture(scope="session")
def short_song():
    """A 2 s seeded song, cheap enough for per-test use."""
    spec = SongSpec(seed=11, duration_s=2.0)
    return spec, synth_song(spec)


@pytest.fixture(scope="session")
def tiny_corpus():
    return make_corpus(2, 1, 300, SongSpec(duration_s=1.5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
