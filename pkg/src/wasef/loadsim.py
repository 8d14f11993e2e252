"""Deterministic event-driven page-load simulation over a resource graph.

Model, in full:

* Fetch: every resource fetch pays one RTT of request latency (no bytes
  flow during it), then its body transfers on a single shared downlink whose
  bandwidth is divided equally among all in-flight transfers, recomputed at
  every event boundary. At most ``max_connections_per_host`` fetches (latency
  or transfer phase) run per host; the rest queue FIFO per host.
* Root: the HTML fetch starts at t = 0; parsing begins once it completes.
* Parser: consumes the document at the device parse rate. Reaching a tag
  issues its fetch. A synchronous external script blocks the parser until it
  is fetched and executed; an inline script executes immediately. Script
  execution occupies the single main thread for bytes / js_exec rate. Async
  scripts execute FIFO as their fetches land, whenever the thread is free;
  deferred scripts execute in document order after parsing completes.
* Paint: a text block paints when the parser passes it and every
  render-blocking resource discovered before it has completed; an image
  additionally waits for its own fetch. Visual completeness at time t is
  painted weight over total weight.
* Ties: simultaneous events process in (time, sequence) order with sequence
  numbers assigned at scheduling time, so runs are bit-identical.

Duplicate URLs are fetched once; a missing resource costs one RTT and
transfers zero bytes (a fast 404).
"""

from __future__ import annotations

import heapq
import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field
from urllib.parse import urlsplit

from . import pagemodel
from .pagemodel import (
    KIND_HTML,
    KIND_IFRAME,
    KIND_IMAGE,
    KIND_SCRIPT_ASYNC,
    KIND_SCRIPT_DEFER,
    KIND_SCRIPT_INLINE,
    KIND_SCRIPT_SYNC,
    KIND_STYLESHEET,
    Resource,
    ResourceGraph,
    TextBlock,
)

_EPS_BYTES = 1e-6
_EPS_TIME = 1e-15


@dataclass(frozen=True)
class NetworkProfile:
    bandwidth_bytes_per_sec: float
    rtt_seconds: float
    max_connections_per_host: int = 6
    name: str = ""


@dataclass(frozen=True)
class DeviceProfile:
    js_exec_bytes_per_sec: float = 100000.0
    html_parse_bytes_per_sec: float = 2000000.0
    name: str = "lowend"
    cost_coefficients: tuple[float, float] = (1.0, 1e-6)  # (alpha_cpu, beta_bytes)


# 1.6 Mbps is 200000 bytes/sec.
NETWORK_PROFILES = {
    "3g": NetworkProfile(200000.0, 0.4, 6, "3g"),
    "wifi": NetworkProfile(12500000.0, 0.05, 6, "wifi"),
}

DEVICE_PROFILES = {
    "lowend": DeviceProfile(100000.0, 2000000.0, "lowend", (1.0, 1e-6)),
    "highend": DeviceProfile(1000000.0, 20000000.0, "highend", (1.0, 1e-6)),
}


@dataclass
class PageMetrics:
    fcp_seconds: float
    plt_seconds: float
    speed_index_seconds: float
    js_processing_seconds: float
    page_size_bytes: int
    request_count: int
    cpu_proxy_seconds: float
    energy_proxy_units: float
    memory_proxy_bytes: int
    paint_timeline: list[tuple[float, float]] = field(default_factory=list)


def speed_index(paint_timeline: list[tuple[float, float]], fcp: float = 0.0) -> float:
    """Integral of (1 - visual completeness) from 0 to the last paint, exact
    for the right-continuous step timeline. An empty timeline is the
    zero-visual convention and returns the supplied FCP."""
    if not paint_timeline:
        return fcp
    total = 0.0
    prev_t = 0.0
    prev_vc = 0.0
    for t, vc in paint_timeline:
        total += (t - prev_t) * (1.0 - prev_vc)
        prev_t, prev_vc = t, vc
    return total


class _Fetch:
    __slots__ = ("url", "host", "size", "missing", "seq", "state", "remaining", "done_time")

    def __init__(self, url: str, host: str, size: int, missing: bool, seq: int):
        self.url = url
        self.host = host
        self.size = size
        self.missing = missing
        self.seq = seq
        self.state = "queued"
        self.remaining = float(size)
        self.done_time = 0.0


class _PendingPaint:
    __slots__ = ("weight", "fetch", "blockers")

    def __init__(self, weight: float, fetch: _Fetch | None, blockers: list):
        self.weight = weight
        self.fetch = fetch
        self.blockers = blockers


class _Simulation:
    def __init__(self, graph: ResourceGraph, net: NetworkProfile, dev: DeviceProfile):
        self.graph = graph
        self.net = net
        self.dev = dev
        self.t = 0.0
        self.seq = itertools.count()
        self.events: list = []  # heap of (time, seq, kind, payload)
        self.transfers: dict[_Fetch, None] = {}
        self.fetches: dict[str, _Fetch] = {}
        self.host_active: dict[str, int] = defaultdict(int)
        self.host_queues: dict[str, deque] = defaultdict(deque)

        items: list = list(graph.sub_resources()) + list(graph.text_blocks)
        items.sort(key=lambda item: item.discovery_index)
        self.items = items
        self.item_idx = 0
        self.parse_pos = 0.0
        self.parse_active = False
        self.parse_blocked = False
        self.parse_finished = False
        self.parse_end = 0.0

        self.thread_busy = False
        self.pending_inline: Resource | None = None
        self.pending_sync: Resource | None = None
        self.blocking_fetch: _Fetch | None = None
        self.blocking_resource: Resource | None = None
        self.async_waiting: dict[int, list[Resource]] = defaultdict(list)  # fetch seq -> tags
        self.async_ready: deque[Resource] = deque()
        self.defer_order: list[Resource] = []
        self.defer_idx = 0

        self.blockers: list[tuple[str, object]] = []  # ("fetch", _Fetch) | ("exec", id(resource))
        self.exec_done: set[int] = set()
        self.pending_paints: list[_PendingPaint] = []
        self.paints: list[tuple[float, float]] = []

        self.js_total = 0.0
        self.plt = 0.0
        self.root_fetch: _Fetch | None = None

    # -- plumbing -------------------------------------------------------

    def _bump_plt(self, t: float) -> None:
        if t > self.plt:
            self.plt = t

    def _schedule(self, t: float, kind: str, payload) -> None:
        heapq.heappush(self.events, (t, next(self.seq), kind, payload))

    def _host_of(self, url: str) -> str:
        return urlsplit(url).netloc or "local"

    def _issue_fetch(self, url: str, size: int, missing: bool) -> _Fetch:
        fetch = self.fetches.get(url)
        if fetch is not None:
            return fetch
        fetch = _Fetch(url, self._host_of(url), size, missing, next(self.seq))
        self.fetches[url] = fetch
        self.host_queues[fetch.host].append(fetch)
        return fetch

    def _pump_hosts(self) -> None:
        for host, queue in self.host_queues.items():
            while queue and self.host_active[host] < self.net.max_connections_per_host:
                fetch = queue.popleft()
                fetch.state = "latency"
                self.host_active[host] += 1
                self._schedule(self.t + self.net.rtt_seconds, "latency_done", fetch)

    def _complete_fetch(self, fetch: _Fetch) -> None:
        fetch.state = "done"
        fetch.done_time = self.t
        self._bump_plt(self.t)
        self.host_active[fetch.host] -= 1
        if fetch is self.root_fetch:
            self.parse_active = True
        if self.blocking_fetch is fetch:
            self.pending_sync = self.blocking_resource
            self.blocking_fetch = None
        for res in self.async_waiting.pop(fetch.seq, []):
            self.async_ready.append(res)

    # -- main thread ------------------------------------------------------

    def _exec_duration(self, res: Resource) -> float:
        return res.bytes / self.dev.js_exec_bytes_per_sec

    def _start_exec(self, res: Resource, role: str) -> None:
        self.thread_busy = True
        dur = self._exec_duration(res)
        self._schedule(self.t + dur, "task_done", ("exec", res, role, dur))

    def _dispatch_thread(self) -> None:
        if self.thread_busy:
            return
        if self.pending_inline is not None:
            res, self.pending_inline = self.pending_inline, None
            self._start_exec(res, "inline")
            return
        if self.pending_sync is not None:
            res, self.pending_sync = self.pending_sync, None
            self._start_exec(res, "sync")
            return
        if self.parse_active and not self.parse_blocked and not self.parse_finished:
            if self.item_idx < len(self.items):
                target = min(self.items[self.item_idx].doc_offset, float(self.graph.root.bytes))
            else:
                target = float(self.graph.root.bytes)
            dur = max(0.0, target - self.parse_pos) / self.dev.html_parse_bytes_per_sec
            self.thread_busy = True
            self._schedule(self.t + dur, "task_done", ("parse", target))
            return
        if self.parse_finished and self.defer_idx < len(self.defer_order):
            res = self.defer_order[self.defer_idx]
            fetch = self.fetches.get(res.url)
            if fetch is not None and fetch.state == "done":
                self.defer_idx += 1
                self._start_exec(res, "defer")
                return
            # head-of-line defer waits for its fetch; async may fill the gap
        if self.async_ready:
            self._start_exec(self.async_ready.popleft(), "async")

    def _parse_reached(self, target: float) -> None:
        self.parse_pos = target
        if self.item_idx >= len(self.items):
            self.parse_finished = True
            self.parse_end = self.t
            self._bump_plt(self.t)
            return
        item = self.items[self.item_idx]
        self.item_idx += 1
        if isinstance(item, TextBlock):
            if item.weight > 0:
                self.pending_paints.append(_PendingPaint(item.weight, None, list(self.blockers)))
            return
        kind = item.kind
        if kind == KIND_SCRIPT_INLINE:
            self.parse_blocked = True
            self.pending_inline = item
        elif kind == KIND_SCRIPT_SYNC:
            fetch = self._issue_fetch(item.url, item.bytes, item.missing)
            self.parse_blocked = True
            self.blockers.append(("exec", id(item)))
            if fetch.state == "done":
                self.pending_sync = item
            else:
                self.blocking_fetch = fetch
                self.blocking_resource = item
        elif kind == KIND_SCRIPT_ASYNC:
            fetch = self._issue_fetch(item.url, item.bytes, item.missing)
            if fetch.state == "done":
                self.async_ready.append(item)
            else:
                self.async_waiting[fetch.seq].append(item)
        elif kind == KIND_SCRIPT_DEFER:
            self._issue_fetch(item.url, item.bytes, item.missing)
            self.defer_order.append(item)
        elif kind == KIND_STYLESHEET:
            fetch = self._issue_fetch(item.url, item.bytes, item.missing)
            self.blockers.append(("fetch", fetch))
        else:  # image, iframe, other: plain fetches
            fetch = self._issue_fetch(item.url, item.bytes, item.missing)
            if kind == KIND_IMAGE and item.visual_weight > 0:
                self.pending_paints.append(_PendingPaint(item.visual_weight, fetch, list(self.blockers)))

    def _finish_task(self, payload) -> None:
        self.thread_busy = False
        if payload[0] == "parse":
            self._parse_reached(payload[1])
            return
        _, res, role, dur = payload
        self.js_total += dur
        self.exec_done.add(id(res))
        self._bump_plt(self.t)
        if role in ("inline", "sync"):
            self.parse_blocked = False

    # -- paints -----------------------------------------------------------

    def _blocker_satisfied(self, blocker) -> bool:
        kind, obj = blocker
        if kind == "fetch":
            return obj.state == "done"
        return obj in self.exec_done

    def _check_paints(self) -> None:
        if not self.pending_paints:
            return
        still = []
        for paint in self.pending_paints:
            if paint.fetch is not None and paint.fetch.state != "done":
                still.append(paint)
                continue
            if all(self._blocker_satisfied(b) for b in paint.blockers):
                self.paints.append((self.t, paint.weight))
            else:
                still.append(paint)
        self.pending_paints = still

    # -- engine -----------------------------------------------------------

    def _next_time(self) -> float | None:
        candidates = []
        if self.events:
            candidates.append(self.events[0][0])
        if self.transfers:
            min_rem = min(f.remaining for f in self.transfers)
            candidates.append(
                self.t + min_rem * len(self.transfers) / self.net.bandwidth_bytes_per_sec
            )
        return min(candidates) if candidates else None

    def _advance_to(self, t_next: float) -> None:
        dt = max(0.0, t_next - self.t)
        if self.transfers and dt > 0.0:
            share = self.net.bandwidth_bytes_per_sec * dt / len(self.transfers)
            for fetch in self.transfers:
                fetch.remaining -= share
        self.t = t_next

    def run(self) -> PageMetrics:
        pagemodel.visual_weights(self.graph)  # idempotent; hand-built graphs arrive unweighted
        root = self.graph.root
        self.root_fetch = self._issue_fetch(root.url, root.bytes, root.missing)
        self._pump_hosts()
        self._dispatch_thread()

        while True:
            t_next = self._next_time()
            if t_next is None:
                break
            self._advance_to(t_next)

            batch = []
            while self.events and self.events[0][0] <= self.t + _EPS_TIME:
                _, seq, kind, payload = heapq.heappop(self.events)
                batch.append((seq, kind, payload))
            for fetch in list(self.transfers):
                if fetch.remaining <= _EPS_BYTES:
                    del self.transfers[fetch]
                    batch.append((fetch.seq, "transfer_done", fetch))
            batch.sort(key=lambda ev: ev[0])

            for _, kind, payload in batch:
                if kind == "latency_done":
                    fetch = payload
                    if fetch.size <= 0:
                        self._complete_fetch(fetch)
                    else:
                        fetch.state = "transfer"
                        self.transfers[fetch] = None
                elif kind == "transfer_done":
                    self._complete_fetch(payload)
                elif kind == "task_done":
                    self._finish_task(payload)

            self._pump_hosts()
            self._dispatch_thread()
            self._check_paints()

        return self._finalize()

    def _finalize(self) -> PageMetrics:
        total_weight = self.graph.total_visual_weight
        timeline: list[tuple[float, float]] = []
        if total_weight > 0:
            cumulative = 0.0
            for t, weight in self.paints:
                cumulative += weight
                vc = cumulative / total_weight
                if timeline and timeline[-1][0] == t:
                    timeline[-1] = (t, vc)
                else:
                    timeline.append((t, vc))
            if timeline and abs(timeline[-1][1] - 1.0) < 1e-9:
                timeline[-1] = (timeline[-1][0], 1.0)
        if timeline:
            fcp = timeline[0][0]
            si = speed_index(timeline)
        else:
            fcp = self.plt  # zero-visual convention
            si = fcp
        page_size = sum(f.size for f in self.fetches.values())
        cpu = self.js_total + self.graph.root.bytes / self.dev.html_parse_bytes_per_sec
        alpha, beta = self.dev.cost_coefficients
        return PageMetrics(
            fcp_seconds=fcp,
            plt_seconds=self.plt,
            speed_index_seconds=si,
            js_processing_seconds=self.js_total,
            page_size_bytes=page_size,
            request_count=len(self.fetches),
            cpu_proxy_seconds=cpu,
            energy_proxy_units=alpha * cpu + beta * page_size,
            memory_proxy_bytes=page_size,
            paint_timeline=timeline,
        )


def simulate_load(graph: ResourceGraph, net: NetworkProfile, dev: DeviceProfile) -> PageMetrics:
    """Simulate one page load; all times in seconds, bit-deterministic."""
    return _Simulation(graph, net, dev).run()


def metrics_from_dict(row: dict) -> PageMetrics:
    return PageMetrics(
        fcp_seconds=row["fcp_seconds"],
        plt_seconds=row["plt_seconds"],
        speed_index_seconds=row["speed_index_seconds"],
        js_processing_seconds=row["js_processing_seconds"],
        page_size_bytes=row["page_size_bytes"],
        request_count=row["request_count"],
        cpu_proxy_seconds=row["cpu_proxy_seconds"],
        energy_proxy_units=row["energy_proxy_units"],
        memory_proxy_bytes=row["memory_proxy_bytes"],
        paint_timeline=[(t, vc) for t, vc in row.get("paint_timeline", [])],
    )


def metrics_to_dict(metrics: PageMetrics) -> dict:
    return {
        "fcp_seconds": metrics.fcp_seconds,
        "plt_seconds": metrics.plt_seconds,
        "speed_index_seconds": metrics.speed_index_seconds,
        "js_processing_seconds": metrics.js_processing_seconds,
        "page_size_bytes": metrics.page_size_bytes,
        "request_count": metrics.request_count,
        "cpu_proxy_seconds": metrics.cpu_proxy_seconds,
        "energy_proxy_units": metrics.energy_proxy_units,
        "memory_proxy_bytes": metrics.memory_proxy_bytes,
        "paint_timeline": [[t, vc] for t, vc in metrics.paint_timeline],
    }
