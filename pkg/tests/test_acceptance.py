"""Acceptance battery: every criterion at its stated tolerance.

Runs the same checks as `wtf-lab verify` (shared engine in wtf_lab.verify),
one test per criterion, printing a PASS/FAIL line each.
"""

import pytest

from wtf_lab.verify import CHECKS, BatteryContext


@pytest.fixture(scope="module")
def ctx():
    return BatteryContext()


@pytest.mark.parametrize("cid,title,fn", CHECKS, ids=[c[0] for c in CHECKS])
def test_criterion(ctx, cid, title, fn):
    passed, detail = fn(ctx)
    print(f"{'PASS' if passed else 'FAIL'} {title}\n     {detail}")
    assert passed, f"{title}: {detail}"
