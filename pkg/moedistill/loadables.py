"""
Discovery of pluggable classes living next to their loader.

A package declares a base class and a loader in its ``__init__``::

    class BaseAdapter(object):
        pass

    class AdapterHandler(moedistill.loadables.BaseLoader):
        def __init__(self):
            super(AdapterHandler, self).__init__(BaseAdapter)

Every public subclass of the base class defined in a module of that
package is then returned by ``AdapterHandler().get_all_classes()``.
"""

import inspect
import os
import pkgutil
import sys

from moedistill import exception
from moedistill import utils


class BaseLoader(object):
    def __init__(self, loadable_cls_type):
        mod = sys.modules[self.__class__.__module__]
        self.path = os.path.abspath(mod.__path__[0])
        self.package = mod.__name__
        self.loadable_cls_type = loadable_cls_type

    def _is_correct_class(self, obj):
        return (inspect.isclass(obj) and
                not obj.__name__.startswith('_') and
                obj is not self.loadable_cls_type and
                issubclass(obj, self.loadable_cls_type))

    def _get_classes_from_module(self, module_name):
        module = utils.import_module(module_name)
        return [obj for name, obj in sorted(vars(module).items())
                if not name.startswith('_') and self._is_correct_class(obj)]

    def get_all_classes(self):
        """Loadable classes of every module of the loader's package."""
        classes = []
        for info in pkgutil.walk_packages([self.path], self.package + '.'):
            for cls in self._get_classes_from_module(info.name):
                if cls not in classes:
                    classes.append(cls)
        return classes

    def get_matching_classes(self, loadable_class_names):
        """Classes named by their full import path."""
        classes = []
        for cls_name in loadable_class_names:
            obj = utils.import_class(cls_name)
            if not self._is_correct_class(obj):
                raise exception.ClassNotFound(
                    class_name=cls_name,
                    exception='Not a class of the correct type')
            classes.append(obj)
        return classes
