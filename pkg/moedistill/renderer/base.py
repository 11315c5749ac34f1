import abc


class Renderer(object, metaclass=abc.ABCMeta):
    """Base class for all renderers.

    Results are added with append_metric and rendered together into the
    renderer's output format.
    """

    def __init__(self):
        self.metrics = []

    @abc.abstractmethod
    def append_metric(self, title, metric, metric_definition):
        """Add a metric (series name -> value(s)) for rendering."""

    @abc.abstractmethod
    def render(self):
        """Generator of the rendered documents, one per metric."""

    @abc.abstractmethod
    def render_to_file(self, filename):
        """Render and write the result to `filename`."""
