import logging
import os

import pygal

from moedistill import exception
import moedistill.renderer.base

logger = logging.getLogger(__name__)

CHART_TYPES = {
    "bar": pygal.Bar,
    "horizontal_bar": pygal.HorizontalBar,
    "line": pygal.Line,
}


class Chart(moedistill.renderer.base.Renderer):
    """SVG charts of ablation results, rendered with PyGal.

    A metric maps series names to a value (bar charts) or to a list of
    values over the definition's ``x_labels`` (line charts).
    """

    def append_metric(self, title, metric, metric_definition):
        chart = metric_definition.get("chart")
        if chart is None:
            logger.debug("Not charting metric %s (no chart definition "
                         "found)", title)
            return
        if chart not in CHART_TYPES:
            raise exception.UnknownChartType(chart=chart)
        self.metrics.append((title, metric, metric_definition))

    def _generate_charts(self):
        for title, metric, definition in self.metrics:
            chart = CHART_TYPES[definition["chart"]]()
            chart.title = title
            if "x_labels" in definition:
                chart.x_labels = [str(x) for x in definition["x_labels"]]
            for series, values in sorted(metric.items()):
                chart.add(str(series), values)
            yield chart

    def render(self):
        """Yield one SVG document per appended metric."""
        for chart in self._generate_charts():
            yield chart.render()

    def render_to_file(self, filename):
        """Write the charts; from the second on, files get a ``-N`` suffix.

        Returns the written paths.
        """
        root, ext = os.path.splitext(filename)
        paths = []
        for i, chart in enumerate(self._generate_charts()):
            path = filename if i == 0 else "%s-%d%s" % (root, i, ext)
            chart.render_to_file(path)
            paths.append(path)
        return paths
