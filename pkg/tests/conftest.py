import itertools

import pytest

from disctag.scheme import TAGS, is_well_formed


class WellFormedLanguage:
    """Brute-force enumeration of well-formed tag sequences, cached per length.

    This is the independent oracle for everything automaton- or DP-based:
    it only relies on the rule checker, never on the grammar automaton.
    """

    def __init__(self):
        self._cache: dict[int, tuple[tuple, ...]] = {}

    def sequences(self, n: int) -> tuple[tuple, ...]:
        if n not in self._cache:
            self._cache[n] = tuple(
                seq for seq in itertools.product(TAGS, repeat=n) if is_well_formed(seq)
            )
        return self._cache[n]

    def as_set(self, n: int) -> frozenset:
        return frozenset(self.sequences(n))


@pytest.fixture(scope="session")
def language():
    return WellFormedLanguage()
