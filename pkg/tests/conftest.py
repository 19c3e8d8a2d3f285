import json
import os
from importlib import resources

import pytest
from hypothesis import settings

from peplogic.mol import parse_smiles

settings.register_profile("default", deadline=None)
settings.load_profile("default")

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "fixtures")
STUBS = os.path.join(HERE, "stubs")


def load_corpus():
    with resources.files("peplogic").joinpath("data/desk_corpus.json").open() as fh:
        return json.load(fh)["molecules"]


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def corpus_mols(corpus):
    return [(m["id"], m["kind"], parse_smiles(m["smiles"])) for m in corpus]
