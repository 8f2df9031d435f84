import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import json
import os

from properties import CASES


def pytest_sessionfinish(session, exitstatus):
    path = os.environ.get("CLIFFINIT_CASE_COUNT_FILE")
    if path and CASES:
        with open(path, "w") as fh:
            json.dump({"total": sum(CASES.values()), "by_property": dict(CASES)}, fh, sort_keys=True)
