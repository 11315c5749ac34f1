from moedistill import adaptation
from moedistill.adaptation import strategies
from moedistill import exception
from moedistill import test


class LoaderTest(test.TestCase):
    def setUp(self):
        super(LoaderTest, self).setUp()
        self.loader = adaptation.AdapterHandler()

    def test_package_of_loader(self):
        self.assertEqual("moedistill.adaptation", self.loader.package)

    def test_all_classes(self):
        self.assertEqual(
            set([strategies.ImportanceAdapter, strategies.RandomAdapter,
                 strategies.InverseAdapter]),
            set(self.loader.get_all_classes()))
        self.assertNotIn(adaptation.BaseAdapter,
                         self.loader.get_all_classes())

    def test_matching_classes(self):
        self.assertEqual(
            [strategies.RandomAdapter],
            self.loader.get_matching_classes(
                ["moedistill.adaptation.strategies.RandomAdapter"]))

    def test_matching_wrong_type(self):
        self.assertRaises(exception.ClassNotFound,
                          self.loader.get_matching_classes,
                          ["moedistill.test.TestCase"])
