"""Page-simplification transforms: archive-to-archive rewrites picked by name.

Every transform is a pure function from an ArchivedPage to a new
ArchivedPage, so each one sees identical frozen input and re-running it is
byte-deterministic. Five built-ins ship with the registry; custom transforms
register through register_transform().
"""

from __future__ import annotations

import logging
import math
import re
import subprocess
import tempfile
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urlsplit

from . import jsscan
from .archive import ArchivedExchange, ArchivedPage, is_js_content_type, normalize_url
from .errors import MalformedUrl, TransformFailed, UnknownTransform

log = logging.getLogger(__name__)

_NAME_RE = re.compile(r"^[a-z0-9_-]+$")
_ON_ATTR_RE = re.compile(r"""\s+on[a-zA-Z]+\s*=\s*("[^"]*"|'[^']*'|[^\s>]+)""")

# Appended to every thinned image body; its length is the transform's
# declared rounding overhead.
DOWNSCALE_MARKER = b"#thinned-marker#"


@dataclass
class TransformSpec:
    name: str
    params: dict[str, str] = field(default_factory=dict)
    version: str = "1"


@dataclass
class VariantPage:
    base_page_id: str
    transform: TransformSpec
    page: ArchivedPage
    provenance: dict


class _TagScanner(HTMLParser):
    """Locates script element spans and start tags carrying on* attributes,
    as character offsets into the document text."""

    def __init__(self, text: str):
        super().__init__(convert_charrefs=True)
        self._text = text
        self._line_starts = [0]
        for line in text.split("\n")[:-1]:
            self._line_starts.append(self._line_starts[-1] + len(line) + 1)
        self.script_spans: list[tuple[int, int, str | None]] = []  # (start, end, src)
        self.handler_tags: list[tuple[int, int, str]] = []  # (start, end, replacement)
        self._open_script: tuple[int, str | None] | None = None

    def _offset(self) -> int:
        line, col = self.getpos()
        return self._line_starts[line - 1] + col

    def handle_starttag(self, tag, attrs):
        start = self._offset()
        if tag == "script":
            src = None
            for name, value in attrs:
                if name.lower() == "src" and value:
                    src = value
                    break
            self._open_script = (start, src)
            return
        raw = self.get_starttag_text() or ""
        cleaned = _ON_ATTR_RE.sub("", raw)
        if cleaned != raw:
            self.handler_tags.append((start, start + len(raw), cleaned))

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag == "script":
            self._finish_script(self._offset() + len(self.get_starttag_text() or ""))

    def handle_endtag(self, tag):
        if tag == "script" and self._open_script is not None:
            close_start = self._offset()
            end = self._text.find(">", close_start)
            end = len(self._text) if end == -1 else end + 1
            self._finish_script(end)

    def _finish_script(self, end: int):
        if self._open_script is None:
            return
        start, src = self._open_script
        self.script_spans.append((start, end, src))
        self._open_script = None

    def finish(self):
        if self._open_script is not None:  # unclosed script runs to EOF
            self._finish_script(len(self._text))


def _scan_html(text: str) -> _TagScanner:
    scanner = _TagScanner(text)
    scanner.feed(text)
    scanner.close()
    scanner.finish()
    return scanner


def _decode_html(body: bytes) -> tuple[str, str]:
    try:
        return body.decode("utf-8"), "utf-8"
    except UnicodeDecodeError:
        return body.decode("latin-1"), "latin-1"


def _apply_edits(text: str, removals: list[tuple[int, int]], replacements: list[tuple[int, int, str]]) -> str:
    """Apply span edits back-to-front; replacements nested inside a removed
    span are dropped."""
    removal_spans = sorted(removals)
    edits: list[tuple[int, int, str]] = [(s, e, "") for s, e in removals]
    for start, end, new in replacements:
        if any(s <= start and end <= e for s, e in removal_spans):
            continue
        edits.append((start, end, new))
    edits.sort(key=lambda edit: edit[0], reverse=True)
    for start, end, new in edits:
        text = text[:start] + new + text[end:]
    return text


def _rebuild_page(page: ArchivedPage, new_root_body: bytes | None, dropped_urls: set[str],
                  replaced_bodies: dict[str, bytes] | None = None) -> ArchivedPage:
    replaced_bodies = replaced_bodies or {}
    exchanges: dict[tuple[str, str], ArchivedExchange] = {}
    for (method, url), ex in page.exchanges.items():
        if url in dropped_urls and url != page.root_url:
            continue
        body = ex.body
        if url == page.root_url and new_root_body is not None:
            body = new_root_body
        elif url in replaced_bodies:
            body = replaced_bodies[url]
        exchanges[(method, url)] = ArchivedExchange(
            method=ex.method,
            url=ex.url,
            status=ex.status,
            headers=list(ex.headers),
            body=body,
            content_type=ex.content_type,
        )
    return ArchivedPage(
        page_id=page.page_id,
        root_url=page.root_url,
        exchanges=exchanges,
        recorded_at=page.recorded_at,
        source=page.source,
    )


def _script_urls_in_html(page: ArchivedPage, spans) -> set[str]:
    urls = set()
    for _, _, src in spans:
        if src:
            try:
                urls.add(normalize_url(src, base=page.root_url))
            except MalformedUrl:
                continue
    return urls


def _script_exchange_urls(page: ArchivedPage) -> set[str]:
    return {url for (_, url), ex in page.exchanges.items() if is_js_content_type(ex.content_type)}


# --- built-in transforms ---------------------------------------------------


def _identity(page: ArchivedPage, params: dict[str, str]) -> ArchivedPage:
    return _rebuild_page(page, None, set())


def _js_strip(page: ArchivedPage, params: dict[str, str]) -> ArchivedPage:
    """Remove every script element and inline handler attribute, and drop
    script exchanges from the archive."""
    text, codec = _decode_html(page.root_exchange().body)
    scanner = _scan_html(text)
    removals = [(s, e) for s, e, _ in scanner.script_spans]
    new_text = _apply_edits(text, removals, scanner.handler_tags)
    dropped = _script_urls_in_html(page, scanner.script_spans) | _script_exchange_urls(page)
    return _rebuild_page(page, new_text.encode(codec), dropped)


def _js_block_thirdparty(page: ArchivedPage, params: dict[str, str]) -> ArchivedPage:
    """Remove external script elements whose host differs from the root host
    (exact host comparison), and drop their exchanges."""
    root_host = urlsplit(page.root_url).hostname or ""
    text, codec = _decode_html(page.root_exchange().body)
    scanner = _scan_html(text)
    removals = []
    dropped = set()
    for start, end, src in scanner.script_spans:
        if not src:
            continue
        try:
            url = normalize_url(src, base=page.root_url)
        except MalformedUrl:
            continue
        if (urlsplit(url).hostname or "") != root_host:
            removals.append((start, end))
            dropped.add(url)
    if not removals:
        return _rebuild_page(page, None, set())
    new_text = _apply_edits(text, removals, [])
    return _rebuild_page(page, new_text.encode(codec), dropped)


def _js_dce(page: ArchivedPage, params: dict[str, str]) -> ArchivedPage:
    """Delete top-level function declarations from archived scripts when the
    name is never referenced outside its own body, iterating to a fixpoint.

    References are counted lexically over every script (external and inline)
    plus inline handler attributes; names that only appear inside strings
    still count as references, so the pass only ever under-deletes.
    """
    html_text, _ = _decode_html(page.root_exchange().body)
    scanner = _scan_html(html_text)
    inline_texts = [
        html_text[s:e] for s, e, src in scanner.script_spans if not src
    ]
    handler_text = " ".join(
        match.group(1) for match in _ON_ATTR_RE.finditer(html_text)
    )

    script_texts: dict[str, tuple[str, str]] = {}  # url -> (text, codec)
    for (_, url), ex in page.exchanges.items():
        if is_js_content_type(ex.content_type):
            script_texts[url] = _decode_html(ex.body)

    base_sources = "\n".join(inline_texts + [handler_text])
    changed = True
    while changed:
        changed = False
        all_spans = {url: jsscan.top_level_function_spans(text) for url, (text, _) in script_texts.items()}
        for url, spans in all_spans.items():
            text, codec = script_texts[url]
            elsewhere = "\n".join(
                other_text for other_url, (other_text, _) in script_texts.items() if other_url != url
            )
            doomed = []
            for name, start, end in spans:
                outside = (
                    jsscan.count_references(name, text)
                    - jsscan.count_references(name, text[start:end])
                    + jsscan.count_references(name, elsewhere)
                    + jsscan.count_references(name, base_sources)
                )
                if outside == 0:
                    doomed.append((start, end))
            if doomed:
                for start, end in sorted(doomed, reverse=True):
                    text = text[:start] + text[end:]
                script_texts[url] = (text, codec)
                changed = True

    replaced = {url: text.encode(codec) for url, (text, codec) in script_texts.items()}
    return _rebuild_page(page, None, set(), replaced)


def _img_downscale(page: ArchivedPage, params: dict[str, str]) -> ArchivedPage:
    """Thin each image body to ceil(quality * len) bytes plus a fixed marker.

    The output is not a decodable image; the pipeline measures bytes, not
    pixels. Bodies that would not shrink are left untouched so the variant
    never grows.
    """
    quality = float(params.get("quality", "0.5"))
    if not 0.0 < quality <= 1.0:
        raise ValueError(f"quality must be in (0, 1], got {quality}")
    replaced = {}
    for (_, url), ex in page.exchanges.items():
        if not ex.content_type.startswith("image/"):
            continue
        keep = math.ceil(quality * len(ex.body))
        thinned = ex.body[:keep] + DOWNSCALE_MARKER
        if len(thinned) < len(ex.body):
            replaced[url] = thinned
    return _rebuild_page(page, None, set(), replaced)


# --- registry ---------------------------------------------------------------


@dataclass(frozen=True)
class _TransformEntry:
    name: str
    description: str
    param_schema: dict
    fn: object


_REGISTRY: dict[str, _TransformEntry] = {}


def register_transform(name: str, description: str, fn, param_schema: dict | None = None) -> None:
    """Add a transform to the registry. Names are lowercase [a-z0-9_-] and
    must be unique."""
    if not _NAME_RE.match(name):
        raise ValueError(f"invalid transform name {name!r}")
    if name in _REGISTRY:
        raise ValueError(f"transform {name!r} is already registered")
    _REGISTRY[name] = _TransformEntry(name, description, dict(param_schema or {}), fn)


def list_transforms() -> list[tuple[str, str, dict]]:
    """Registered transforms in registration order (built-ins first)."""
    return [(e.name, e.description, dict(e.param_schema)) for e in _REGISTRY.values()]


def register_subprocess_transform(
    name: str,
    command: list[str],
    description: str = "external transform",
    timeout_seconds: float = 120.0,
) -> None:
    """Register an out-of-process transform.

    Contract: the command reads the stored page directory path from stdin,
    writes the variant page directory path to stdout, and exits 0 on
    success. Transform params are exported as WASEF_PARAM_<key> environment
    variables.
    """
    from .archive import load_page, store_page  # local import avoids a cycle

    def fn(page: ArchivedPage, params: dict[str, str]) -> ArchivedPage:
        import os

        with tempfile.TemporaryDirectory(prefix="wasef-xform-") as tmp:
            store_page(page, tmp)
            env = dict(os.environ)
            for key, value in params.items():
                env[f"WASEF_PARAM_{key.upper()}"] = value
            proc = subprocess.run(
                command,
                input=str(Path(tmp) / page.page_id) + "\n",
                capture_output=True,
                text=True,
                timeout=timeout_seconds,
                env=env,
            )
            if proc.returncode != 0:
                raise RuntimeError(f"exit {proc.returncode}: {proc.stderr.strip()[:400]}")
            lines = [line for line in proc.stdout.splitlines() if line.strip()]
            if not lines:
                raise RuntimeError("subprocess printed no variant directory path")
            variant_dir = Path(lines[-1].strip())
            return load_page(variant_dir.name, variant_dir.parent)

    register_transform(name, description, fn)


def apply_transform(spec: TransformSpec, page: ArchivedPage) -> VariantPage:
    """Run one named transform over a page, producing a variant page whose
    id is ``<base_page_id>:<transform name>``.

    Raises UnknownTransform for unregistered names and TransformFailed
    (carrying the cause) when the transform itself errors; callers treat the
    latter as a per-page skip, not an abort.
    """
    entry = _REGISTRY.get(spec.name)
    if entry is None:
        raise UnknownTransform(f"no transform named {spec.name!r}")
    try:
        new_page = entry.fn(page, dict(spec.params))
    except Exception as exc:
        raise TransformFailed(f"{spec.name} failed on {page.page_id}: {exc}") from exc
    if new_page.root_url != page.root_url:
        raise TransformFailed(f"{spec.name} changed the root URL of {page.page_id}")
    if not any(url == new_page.root_url for (_, url) in new_page.exchanges):
        raise TransformFailed(f"{spec.name} dropped the root document of {page.page_id}")
    new_page.page_id = f"{page.page_id}:{spec.name}"
    provenance = {
        "bytes_removed": page.total_bytes() - new_page.total_bytes(),
        "resources_dropped": len(page.exchanges) - len(new_page.exchanges),
        "notes": f"{spec.name} v{spec.version}",
    }
    return VariantPage(
        base_page_id=page.page_id,
        transform=spec,
        page=new_page,
        provenance=provenance,
    )


register_transform("identity", "no-op baseline; the variant equals the original", _identity)
register_transform("js-strip", "remove all script elements and inline handler attributes", _js_strip)
register_transform(
    "js-block-thirdparty",
    "remove external scripts hosted off the root host",
    _js_block_thirdparty,
)
register_transform(
    "js-dce",
    "delete top-level functions never referenced outside their own body",
    _js_dce,
)
register_transform(
    "img-downscale",
    "thin image bodies to a fraction of their size",
    _img_downscale,
    {"quality": "fraction of image bytes to keep, in (0, 1]; default 0.5"},
)
