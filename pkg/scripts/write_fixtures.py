#!/usr/bin/env python3
"""Regenerate the bundled fixture files from the in-code registry.

Writes the canonical YAML for every fixture variant into the package data
directory (src/flowmend/fixtures/) and mirrors it into the repository-level
fixtures/ directory used by the command-line examples.  Run after editing
flowmend.fixtures; the test suite asserts both copies stay in sync.
"""

from pathlib import Path

from flowmend.fileformat import serialize_network, serialize_truth
from flowmend.fixtures import FIXTURE_FILES, TRUTH_FILES, fixture_document, get_fixture

ROOT = Path(__file__).resolve().parent.parent
TARGETS = [ROOT / "src" / "flowmend" / "fixtures", ROOT / "fixtures"]


def main() -> None:
    for target in TARGETS:
        target.mkdir(parents=True, exist_ok=True)
    for stem in FIXTURE_FILES:
        text = serialize_network(fixture_document(stem))
        for target in TARGETS:
            (target / f"{stem}.yaml").write_text(text)
            print(f"wrote {target / f'{stem}.yaml'}")
    for stem, name in TRUTH_FILES.items():
        truth = get_fixture(name).truth()
        assert truth is not None
        text = serialize_truth(truth)
        for target in TARGETS:
            (target / f"{stem}.truth.yaml").write_text(text)
            print(f"wrote {target / f'{stem}.truth.yaml'}")


if __name__ == "__main__":
    main()
