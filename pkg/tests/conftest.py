import pytest

from imbes.utils.base import SearchBudget
from imbes.utils.custom_exceptions import ExceptionHandler
from imbes.utils.logger import logger
from imbes.utils.syntax import parse_frames

logger.log_file = None


@pytest.fixture(autouse=True)
def raise_custom_exceptions():
    ExceptionHandler.initialize(True)
    yield
    ExceptionHandler.initialize(True)


@pytest.fixture
def small_budget():
    return SearchBudget(depth=8, modal_uses=2, fresh=2)


@pytest.fixture
def frames():
    return parse_frames
