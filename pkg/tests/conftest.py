import pytest

from salsy.generate import corpus_spec, generate
from salsy.tech import build_mock65


@pytest.fixture(scope="session")
def tech():
    return build_mock65()


@pytest.fixture(scope="session")
def tech4():
    return build_mock65(4)


@pytest.fixture(scope="session")
def small_bundle():
    """(layout, assets, score_cfg) for a small corpus layout; copy before mutating."""
    return generate(corpus_spec(0))


@pytest.fixture
def small(small_bundle):
    layout, assets, cfg = small_bundle
    return layout.copy(), assets, cfg


_VERDICTS: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(num, title, ok, detail=""):
        line = f"criterion {num} {title}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        _VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
