import pytest

from helpers import ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture(scope="session")
def slide_runs(tmp_path_factory):
    """Adaptive default slide (all snapshots), its uniform depth-2 reference and the coarse run."""
    from lrcontact.scenarios import resolve_config, run

    out = tmp_path_factory.mktemp("slide")
    cfg = resolve_config({"scenario": "slide", "snapshots": "all"})
    return {
        "cfg": cfg,
        "dir": out / "lr",
        "lr": run(cfg, out / "lr"),
        "uniform": run(resolve_config({"scenario": "slide", "snapshots": "none"}, uniform_depth=2)),
        "coarse": run(resolve_config({"scenario": "slide", "snapshots": "none"}, uniform_depth=0)),
    }
