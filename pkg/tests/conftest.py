import numpy as np
import pytest

from upcheck.cli import main
from upcheck.tinymodel import ModelHandle, init_params

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_model():
    return ModelHandle(init_params([16, 12, 8, 3], seed=7))


def run_pipeline(out_dir):
    """synth -> train -> batch(saliency) -> check, all with default seeds."""
    out_dir.mkdir(parents=True, exist_ok=True)
    data, model, batch = out_dir / "data.jsonl", out_dir / "model.json", out_dir / "batch"
    assert main(["synth", "--out", str(data)]) == 0
    assert main(["train", "--dataset", str(data), "--out", str(model)]) == 0
    assert main(["batch", "--model", str(model), "--dataset", str(data), "--method", "saliency",
                 "--out", str(batch)]) == 0
    assert main(["check", "--pairs", str(batch / "pairs-saliency.jsonl"),
                 "--out", str(out_dir / "check.json")]) == 0
    return out_dir


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("pipeline-a"))
