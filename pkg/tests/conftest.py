import textwrap

import pytest

from progspace.cohort import ColumnSpec, write_cohort, write_schema
from progspace.synth import CohortSpec, generate_cohort

ACCEPTANCE_LINES = []

SMALL_CONFIG = """
[synth]
n_subjects = 150
[gmm]
restarts = 2
k_max = 4
[forest]
n_trees = 10, 20
max_depth = 4, none
mtry = sqrt
min_samples_leaf = 1
[plot]
kinds = space, zones, roc, apoe4, reversion, control_age
"""


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def write_config(tmp_path):
    def make(text=SMALL_CONFIG, name="run.ini"):
        p = tmp_path / name
        p.write_text(textwrap.dedent(text))
        return p
    return make


@pytest.fixture(scope="session")
def small_cohort():
    spec = CohortSpec(n_subjects=120, seed=3)
    return generate_cohort(spec)


@pytest.fixture
def cohort_files(tmp_path, small_cohort):
    cohort, _ = small_cohort
    write_cohort(cohort, tmp_path / "cohort.csv")
    write_schema(cohort.schema, tmp_path / "schema.txt")
    return tmp_path / "cohort.csv", tmp_path / "schema.txt"


TOY_SCHEMA = [ColumnSpec("mem_a", "numeric", "memory"), ColumnSpec("cog_a", "numeric", "cognition"),
              ColumnSpec("cat_a", "categorical", "other")]


def toy_csv(rows):
    head = "subject_id,visit_month,diagnosis,age,sex,apoe4,mem_a,cog_a,cat_a\n"
    return head + "".join(",".join(str(v) for v in r) + "\n" for r in rows)
