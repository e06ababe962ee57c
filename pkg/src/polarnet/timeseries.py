"""Sliding-window time series of whole-layer metrics.

Windows are half-open day ranges [start, start + width) advanced by a fixed
step from the first link's date to the last.  Windows where the metric is
undefined (for instance an empty slice) carry the undefined flag rather than
a zero, so gaps stay visible.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from typing import Callable, Sequence

from .errors import UndefinedMetricError, ValidationError
from .network import MISSING_DAY, Layer, Partition


@dataclass(frozen=True)
class WindowSpec:
    """Window width and step, both in whole days."""

    width_days: int = 60
    step_days: int = 1

    def __post_init__(self) -> None:
        if self.width_days < 1 or self.step_days < 1:
            raise ValidationError("window width and step must be positive day counts")


@dataclass(frozen=True)
class WindowRecord:
    """One window: its start date, metric value (None if undefined), link count."""

    start: date
    value: float | None
    links_in_window: int


@dataclass(frozen=True)
class EventAnnotation:
    """A labeled calendar event aligned to the series' window grid."""

    day: date
    label: str
    in_span: bool
    window_start: date | None


@dataclass(frozen=True)
class WindowedSeries:
    layer_name: str
    spec: WindowSpec
    records: tuple[WindowRecord, ...]
    annotations: tuple[EventAnnotation, ...] = ()


def window_slice(
    layer: Layer, start: date, width_days: int, *, permissive: bool = False
) -> Layer:
    """Sub-layer with exactly the links dated in [start, start + width).

    The node registry is unchanged.  An untimestamped link raises a
    validation error unless ``permissive`` is set, in which case it is
    excluded from every window.
    """
    if width_days < 1:
        raise ValidationError("window width must be a positive day count")
    if layer.days is None:
        raise ValidationError(f"layer {layer.name!r} has no timestamps")
    missing = layer.days == MISSING_DAY
    if missing.any() and not permissive:
        raise ValidationError(
            f"layer {layer.name!r} has {int(missing.sum())} untimestamped links"
        )
    lo = start.toordinal()
    hi = lo + width_days
    keep = (layer.days >= lo) & (layer.days < hi) & ~missing
    return layer._masked(keep)


def sweep(
    layer: Layer,
    partition: Partition | None,
    metric: Callable[[Layer, Partition | None], float],
    spec: WindowSpec = WindowSpec(),
    *,
    permissive: bool = False,
) -> WindowedSeries:
    """Evaluate a scalar layer metric over every window of the layer's span.

    One record per window start from the first link's date to the last,
    stepped by ``spec.step_days``; window count is floor((last - first) /
    step) + 1.  The metric is called as metric(sub_layer, partition).
    """
    if layer.days is None:
        raise ValidationError(f"layer {layer.name!r} has no timestamps")
    dated = layer.days[layer.days != MISSING_DAY]
    if len(dated) == 0:
        raise ValidationError(f"layer {layer.name!r} has no timestamped links")
    first = int(dated.min())
    last = int(dated.max())
    records = []
    for day in range(first, last + 1, spec.step_days):
        start = date.fromordinal(day)
        sub = window_slice(layer, start, spec.width_days, permissive=permissive)
        value: float | None
        if sub.n_links == 0:
            value = None
        else:
            try:
                value = float(metric(sub, partition))
            except UndefinedMetricError:
                value = None
        records.append(WindowRecord(start, value, sub.n_links))
    return WindowedSeries(layer.name, spec, tuple(records))


def event_annotation(
    series: WindowedSeries, events: Sequence[tuple[date, str]]
) -> WindowedSeries:
    """Attach labeled events to the series, flagging out-of-span dates.

    An in-span event lands on the window grid position floor((event - first)
    / step); events before the first or after the last window start are kept
    with in_span False and no window.
    """
    if not series.records:
        raise ValidationError("cannot annotate an empty series")
    first = series.records[0].start.toordinal()
    last = series.records[-1].start.toordinal()
    step = series.spec.step_days
    annotations = list(series.annotations)
    for day, label in events:
        ordinal = day.toordinal()
        if first <= ordinal <= last + step - 1:
            offset = (ordinal - first) // step
            window_start = date.fromordinal(first + offset * step)
            annotations.append(EventAnnotation(day, label, True, window_start))
        else:
            annotations.append(EventAnnotation(day, label, False, None))
    return replace(series, annotations=tuple(annotations))
