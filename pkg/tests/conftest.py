import pytest

from synthetic import make_refinement_batch


@pytest.fixture
def refinement_batch():
    return make_refinement_batch()
