import run


def test_dependency_check_reports_every_module():
    deps = run.check_dependencies()
    assert set(deps) == set(run.REQUIRED + run.OPTIONAL)
    assert all(deps[name] for name in run.REQUIRED)
