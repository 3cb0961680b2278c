from __future__ import annotations

import json
from importlib import resources

import pytest

from uiq.bank import QuestionBank, bundled_bank
from uiq.scale import Scale, bundled_scale


def fixture_text(name: str) -> str:
    return resources.files("uiq.fixtures").joinpath(name).read_text("utf-8")


def fixture_json(name: str) -> dict:
    return json.loads(fixture_text(name))


@pytest.fixture(scope="session")
def scale_2014() -> Scale:
    return bundled_scale()


@pytest.fixture(scope="session")
def bank_2014() -> QuestionBank:
    return bundled_bank()


@pytest.fixture(scope="session")
def table2() -> dict:
    return fixture_json("table2.json")


@pytest.fixture(scope="session")
def table3() -> dict:
    return fixture_json("table3.json")


@pytest.fixture(scope="session")
def table4_expected() -> dict:
    return fixture_json("table4_expected.json")
