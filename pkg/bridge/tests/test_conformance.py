from iqa_bridge.conformance import conformance_check


def test_conformance_against_live_bridge(live_bridge):
    report = conformance_check(live_bridge, timeout=30.0)
    failed = [name for name, ok, _ in report.checks if not ok]
    assert report.passed, f"failed checks: {failed}"
    names = {name for name, _, _ in report.checks}
    assert {"determinism", "score range", "lpips identity", "lpips symmetry"} <= names


def test_conformance_reports_unreachable_endpoint():
    report = conformance_check("http://127.0.0.1:9", timeout=0.5)
    assert not report.passed
