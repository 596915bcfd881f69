import sys
from pathlib import Path

import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

from slotforge.corpus import Utterance


def utt(text: str) -> Utterance:
    """Build an utterance from ``word/TAG`` items; bare words are tagged O."""
    tokens, tags = [], []
    for item in text.split():
        word, _, tag = item.partition("/")
        tokens.append(word)
        tags.append(tag or "O")
    return Utterance(tuple(tokens), tuple(tags))


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


ACCEPTANCE: dict[int, tuple[str, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = ("PASS" if passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
