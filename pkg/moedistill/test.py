import os

import fixtures
import numpy as np
from oslo_config import fixture as config_fixture
import testtools

from moedistill.autograd import tensor


def slow_test(func):
    """Skip unless MOEDISTILL_SLOW_TESTS is set (multi-seed training runs)."""
    return testtools.skipUnless(os.environ.get("MOEDISTILL_SLOW_TESTS"),
                                "slow test")(func)


class TestCase(testtools.TestCase, fixtures.TestWithFixtures):
    def setUp(self):
        """Run before each test method to initialize test environment."""
        super(TestCase, self).setUp()
        self.conf = self.useFixture(config_fixture.Config()).conf

    def assertArrayClose(self, expected, observed, rtol=0, atol=1e-12):
        if isinstance(expected, tensor.Tensor):
            expected = expected.data
        if isinstance(observed, tensor.Tensor):
            observed = observed.data
        np.testing.assert_allclose(observed, expected, rtol=rtol, atol=atol)

    def tempdir(self):
        return self.useFixture(fixtures.TempDir()).path
