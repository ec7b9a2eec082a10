import pytest
from hypothesis import settings

from defalloc import kernels

settings.register_profile("suite", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("suite")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    kernels.warmup()
