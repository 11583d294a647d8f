import os

import pytest


def pytest_collection_modifyitems(config, items):
    if os.environ.get("LINEWORLD_LONGRUN") == "1":
        return
    skip = pytest.mark.skip(reason="full-scale run; set LINEWORLD_LONGRUN=1")
    for item in items:
        if "longrun" in item.keywords:
            item.add_marker(skip)
