import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kbmap.triples import ClosedKB, ClosedTriple, OpenKB, OpenTriple, RelationSchema


@pytest.fixture
def schema():
    return RelationSchema(("AtLocation", "CapableOf", "HasA", "UsedFor", "Causes",
                           "PartOf", "Desires", "HasProperty", "ReceivesAction",
                           "DistinctFrom"))


@pytest.fixture
def fish_closed_kb():
    return ClosedKB("conceptnet-slice", (
        ClosedTriple("fish", "AtLocation", "ocean"),
        ClosedTriple("fish", "CapableOf", "swim in the ocean"),
    ))


@pytest.fixture
def fish_open_kb():
    return OpenKB("open-slice", (
        OpenTriple("fish", "live in", "the ocean"),
        OpenTriple("ocean", "contain", "fish"),
        OpenTriple("fish", "swim in", "the ocean"),
    ))
