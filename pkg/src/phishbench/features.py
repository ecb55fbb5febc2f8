"""48-feature extraction from a URL and, optionally, its HTML.

The column set and order come from :mod:`phishbench.schema`.  Every feature
definition and threshold is catalogued in ``docs/features.md``.

Without HTML, content features default to 0 and are flagged ``unavailable``;
the rule-term columns that depend on content then fall back to their
"legitimate" band (1).
"""
from __future__ import annotations

import ipaddress
import re
from collections import Counter
from dataclasses import dataclass, field
from html.parser import HTMLParser
from urllib.parse import urljoin, urlsplit

import numpy as np

from .schema import CONTENT_FEATURES, FEATURE_NAMES, RT_FEATURES, URL_FEATURES

SENSITIVE_WORDS = ("secure", "account", "webscr", "login", "signin", "banking", "confirm")
SENSITIVE_WORDS_VERSION = 1

# Second-level labels that act as public suffixes under a ccTLD (co.uk, com.au, ...).
_SECOND_LEVEL = frozenset(
    "ac co com edu gov net org ltd plc nhs sch mil nom or ne go gob".split()
)
TLD_TOKENS = frozenset(
    "com net org edu gov mil int info biz io co uk us de fr ru cn jp br in au ca it es nl "
    "se ch pl be at dk no fi cz gr pt hu ro tr ua kr tw hk sg my id th vn ph pk ir za ng "
    "mx ar cl pe ve tk ml ga cf gq xyz top online site club".split()
)

_VOWELS = frozenset("aeiou")
_HOST_RE = re.compile(r"^[a-z0-9._\-]+$")
_SCHEME_RE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*)://")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class FetchError(RuntimeError):
    def __init__(self, category: str, message: str):
        super().__init__(f"{category}: {message}")
        self.category = category


# --------------------------------------------------------------------------- URLs


@dataclass(frozen=True)
class UrlParts:
    scheme: str
    hostname: str
    registrable_domain: str
    subdomains: tuple[str, ...]
    path: str
    path_segments: tuple[str, ...]
    query: str
    fragment: str
    port: int | None = None

    @property
    def is_ip(self) -> bool:
        return _is_ip(self.hostname)

    def serialize(self) -> str:
        host = f"[{self.hostname}]" if ":" in self.hostname else self.hostname
        netloc = host if self.port is None else f"{host}:{self.port}"
        out = f"{self.scheme}://{netloc}{self.path}"
        if self.query:
            out += "?" + self.query
        if self.fragment:
            out += "#" + self.fragment
        return out


def _is_ip(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        return bool(re.fullmatch(r"0x[0-9a-f]+(\.0x[0-9a-f]+)*", host))


def registrable_domain(hostname: str) -> str:
    if _is_ip(hostname):
        return hostname
    labels = [lab for lab in hostname.split(".") if lab]
    if len(labels) <= 2:
        return ".".join(labels)
    if len(labels[-1]) == 2 and labels[-2] in _SECOND_LEVEL:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


def parse_url(text: str) -> UrlParts:
    """Split ``text`` into URL components; a missing scheme defaults to ``http``."""
    if text is None or not text.strip():
        raise ParseError("empty URL", 0)
    raw = text.strip()
    m = _SCHEME_RE.match(raw)
    offset = 0
    if not m:
        if raw.startswith("//"):
            raw = "http:" + raw
            offset = -5
        else:
            raw = "http://" + raw
            offset = -7
    try:
        split = urlsplit(raw)
        port = split.port
    except ValueError as exc:
        raise ParseError(str(exc), 0) from None
    host = (split.hostname or "").rstrip(".")
    host_start = raw.find(split.netloc) + offset if split.netloc else len(raw) + offset
    if not host:
        raise ParseError("empty host", max(host_start, 0))
    if ":" not in host and not _HOST_RE.match(host):
        bad = next(i for i, ch in enumerate(host) if not re.match(r"[a-z0-9._\-]", ch))
        raise ParseError(f"invalid character {host[bad]!r} in host", max(host_start + bad, 0))
    domain = registrable_domain(host)
    sub = host[: -len(domain)].rstrip(".") if host != domain else ""
    path = split.path
    return UrlParts(
        scheme=split.scheme.lower(),
        hostname=host,
        registrable_domain=domain,
        subdomains=tuple(lab for lab in sub.split(".") if lab),
        path=path,
        path_segments=tuple(seg for seg in path.split("/") if seg),
        query=split.query,
        fragment=split.fragment,
        port=port,
    )


def _random_label(label: str) -> bool:
    letters = [ch for ch in label if ch.isalpha()]
    if len(label) >= 8 and letters and not any(ch in _VOWELS for ch in letters):
        return True
    run = 0
    for ch in label:
        if ch.isalpha() and ch not in _VOWELS:
            run += 1
            if run >= 5:
                return True
        else:
            run = 0
    return False


def extract_url_features(parts: UrlParts, full_text: str, brands=()) -> dict[str, float]:
    text = full_text.strip()
    lower = text.lower()
    host = parts.hostname
    query_components = [c for c in re.split(r"[&;]", parts.query) if c] if parts.query else []
    name_labels = list(parts.subdomains)
    if not parts.is_ip:
        name_labels.append(parts.registrable_domain.split(".")[0])
    path_lower = parts.path.lower()
    outside_domain = ".".join(parts.subdomains).lower() + " " + path_lower
    brand_hit = any(
        b and b.lower() in outside_domain and b.lower() not in parts.registrable_domain
        for b in brands
    )
    feats = {
        "NumDots": text.count("."),
        "SubdomainLevel": len(parts.subdomains),
        "PathLevel": len(parts.path_segments),
        "UrlLength": len(text),
        "NumDash": text.count("-"),
        "NumDashInHostname": host.count("-"),
        "AtSymbol": int("@" in text),
        "TildeSymbol": int("~" in text),
        "NumUnderscore": text.count("_"),
        "NumPercent": text.count("%"),
        "NumQueryComponents": len(query_components),
        "NumAmpersand": text.count("&"),
        "NumHash": text.count("#"),
        "NumNumericChars": sum(ch in "0123456789" for ch in text),
        "NoHttps": int(parts.scheme != "https"),
        "RandomString": int(any(_random_label(lab) for lab in name_labels)),
        "IpAddress": int(parts.is_ip),
        "DomainInSubdomains": int(any(lab in TLD_TOKENS for lab in parts.subdomains)),
        "DomainInPaths": int(bool(re.search(
            r"\.(%s)(?=$|[/.?#\-_])" % "|".join(sorted(TLD_TOKENS)), path_lower))),
        "HttpsInHostname": int("https" in host),
        "HostnameLength": len(host),
        "PathLength": len(parts.path),
        "QueryLength": len(parts.query),
        "DoubleSlashInPath": int("//" in parts.path),
        "NumSensitiveWords": sum(w in lower for w in SENSITIVE_WORDS),
        "EmbeddedBrandName": int(brand_hit),
    }
    return {k: float(v) for k, v in feats.items()}


# --------------------------------------------------------------------------- HTML


@dataclass
class FormInfo:
    action: str | None
    method: str
    has_text: bool = False
    n_images: int = 0


@dataclass
class PageInventory:
    anchors: list[str | None] = field(default_factory=list)
    forms: list[FormInfo] = field(default_factory=list)
    images: list[str] = field(default_factory=list)
    resources: list[str] = field(default_factory=list)
    meta_script_link: list[str] = field(default_factory=list)
    n_frames: int = 0
    title: str | None = None
    favicon: str | None = None
    handlers: list[str] = field(default_factory=list)
    script_text: str = ""


class _InventoryParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.inv = PageInventory()
        self._form: FormInfo | None = None
        self._in_title = False
        self._title_parts: list[str] = []
        self._in_script = False
        self._scripts: list[str] = []

    def handle_starttag(self, tag, attrs):
        a = {k.lower(): (v if v is not None else "") for k, v in attrs}
        inv = self.inv
        for key, val in a.items():
            if key.startswith("on"):
                inv.handlers.append(f"{key}={val}")
        if tag == "a":
            inv.anchors.append(a.get("href"))
        elif tag == "form":
            self._form = FormInfo(a.get("action"), a.get("method", "get").lower())
            inv.forms.append(self._form)
        elif tag in ("iframe", "frame"):
            inv.n_frames += 1
            if a.get("src"):
                inv.resources.append(a["src"])
        elif tag == "img":
            if a.get("src"):
                inv.images.append(a["src"])
                inv.resources.append(a["src"])
            if self._form is not None:
                self._form.n_images += 1
        elif tag == "input" and self._form is not None:
            kind = a.get("type", "text").lower()
            if kind == "image":
                self._form.n_images += 1
            elif kind not in ("hidden",):
                self._form.has_text = True
        elif tag in ("textarea", "select", "button") and self._form is not None:
            self._form.has_text = True
        elif tag == "script":
            self._in_script = True
            if a.get("src"):
                inv.resources.append(a["src"])
                inv.meta_script_link.append(a["src"])
        elif tag == "link":
            rel = a.get("rel", "").lower()
            href = a.get("href")
            if href:
                if "icon" in rel.split():
                    inv.favicon = href
                inv.resources.append(href)
                inv.meta_script_link.append(href)
        elif tag == "meta":
            content = a.get("content", "")
            m = re.search(r"url\s*=\s*['\"]?([^'\";\s]+)", content, re.I)
            if m:
                inv.meta_script_link.append(m.group(1))
            elif re.match(r"https?://", content):
                inv.meta_script_link.append(content)
        elif tag in ("embed", "audio", "video", "source") and a.get("src"):
            inv.resources.append(a["src"])
        elif tag == "title":
            self._in_title = True

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag == "form":
            self._form = None

    def handle_endtag(self, tag):
        if tag == "form":
            self._form = None
        elif tag == "title":
            self._in_title = False
            self.inv.title = "".join(self._title_parts).strip()
        elif tag == "script":
            self._in_script = False

    def handle_data(self, data):
        if self._in_script:
            self._scripts.append(data)
            return
        if self._in_title:
            self._title_parts.append(data)
        if self._form is not None and data.strip():
            self._form.has_text = True

    def close(self):
        super().close()
        if self._in_title and self.inv.title is None:
            self.inv.title = "".join(self._title_parts).strip()
        self.inv.script_text = "\n".join(self._scripts)


def parse_html(html: str) -> PageInventory:
    """Inventory of links, forms, resources and scripts; malformed markup is scanned best-effort."""
    parser = _InventoryParser()
    try:
        parser.feed(html or "")
        parser.close()
    except Exception:  # html.parser is lenient; anything left is a parser bug we must not surface
        parser.inv.script_text = "\n".join(parser._scripts)
    return parser.inv


@dataclass
class PageDocument:
    base: UrlParts
    html: str
    inventory: PageInventory = None
    truncated: bool = False

    def __post_init__(self):
        if self.inventory is None:
            self.inventory = parse_html(self.html)


_NULL_HREF = re.compile(r"^(#.*|javascript:.*|file:.*|about:blank)?$", re.I)
_ABNORMAL_ACTIONS = frozenset(["", "#", "about:blank", "javascript:true", "javascript:void(0)",
                               "javascript:void(0);"])


def _link_domain(href: str, base: UrlParts) -> str | None:
    """Registrable domain ``href`` points to, or None for non-web targets."""
    href = (href or "").strip()
    if not href or _NULL_HREF.match(href) or re.match(r"^(mailto|tel|data):", href, re.I):
        return None
    absolute = urljoin(base.serialize(), href)
    try:
        sp = urlsplit(absolute)
    except ValueError:
        return None
    if sp.scheme not in ("http", "https") or not sp.hostname:
        return None
    return registrable_domain(sp.hostname.rstrip("."))


def _is_external(href, base: UrlParts) -> bool:
    dom = _link_domain(href, base)
    return dom is not None and dom != base.registrable_domain


def _is_null_or_self(href, base: UrlParts) -> bool:
    href = (href or "").strip()
    if _NULL_HREF.match(href):
        return True
    target = urljoin(base.serialize(), href).split("#")[0]
    return target == base.serialize().split("#")[0]


def _pct(hits: int, total: int) -> float:
    return hits / total if total else 0.0


def extract_content_features(doc: PageDocument) -> tuple[dict[str, float], dict[str, float]]:
    """Content feature values plus auxiliary measurements used by the rule terms."""
    inv, base = doc.inventory, doc.base
    anchors = inv.anchors
    n_anchor = len(anchors)
    ext_anchor = sum(_is_external(h, base) for h in anchors)
    null_anchor = sum(_is_null_or_self(h, base) for h in anchors)
    ext_res = sum(_is_external(h, base) for h in inv.resources)
    ext_msl = sum(_is_external(h, base) for h in inv.meta_script_link)

    actions = [(f.action or "").strip() for f in inv.forms]
    has_action = [f.action is not None for f in inv.forms]
    abnormal = any(h and a.lower() in _ABNORMAL_ACTIONS for a, h in zip(actions, has_action))
    relative = any(a and not re.match(r"^[a-z][a-z0-9+.\-]*:", a, re.I)
                   and not a.startswith("//") and not a.startswith("#") for a in actions)
    ext_action = any(_is_external(a, base) for a in actions if a)
    insecure = any(re.match(r"^http:", a, re.I) for a in actions)
    mailto = any(a.lower().startswith("mailto:") for a in actions)

    domains = Counter(d for d in (_link_domain(h, base) for h in anchors) if d is not None)
    mismatch = 0
    if domains:
        top = sorted(domains.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        mismatch = int(top != base.registrable_domain)

    handlers = "\n".join(inv.handlers)
    code = handlers + "\n" + inv.script_text
    fake_status = any(h.startswith("onmouseover=") and "status" in h.lower() for h in inv.handlers) \
        or bool(re.search(r"window\.status\s*=", inv.script_text))
    right_click = bool(re.search(r"oncontextmenu=\s*(return\s+)?false", handlers, re.I)
                       or re.search(r"event\.button\s*==+\s*2", code)
                       or re.search(r"contextmenu['\"]?\s*[,)]", inv.script_text)
                       or re.search(r"\.oncontextmenu\s*=", inv.script_text))
    popup = "window.open(" in code.replace(" ", "")

    feats = {
        "PctExtHyperlinks": _pct(ext_anchor, n_anchor),
        "PctExtResourceUrls": _pct(ext_res, len(inv.resources)),
        "ExtFavicon": int(inv.favicon is not None and _is_external(inv.favicon, base)),
        "InsecureForms": int(insecure),
        "RelativeFormAction": int(relative),
        "ExtFormAction": int(ext_action),
        "AbnormalFormAction": int(abnormal),
        "PctNullSelfRedirectHyperlinks": _pct(null_anchor, n_anchor),
        "FrequentDomainNameMismatch": mismatch,
        "FakeLinkInStatusBar": int(fake_status),
        "RightClickDisabled": int(right_click),
        "PopUpWindow": int(popup),
        "SubmitInfoToEmail": int(mailto),
        "IframeOrFrame": int(inv.n_frames > 0),
        "MissingTitle": int(not inv.title),
        "ImagesOnlyInForm": int(any(f.n_images > 0 and not f.has_text for f in inv.forms)),
    }
    ext_or_null = sum(_is_external(h, base) or _is_null_or_self(h, base) for h in anchors)
    aux = {
        "pct_ext_meta_script_link": _pct(ext_msl, len(inv.meta_script_link)),
        "pct_ext_null_self_anchors": _pct(ext_or_null, n_anchor),
        "abnormal_form_action": float(abnormal),
        "ext_form_action": float(ext_action),
    }
    return {k: float(v) for k, v in feats.items()}, aux


# --------------------------------------------------------------------------- vectors


@dataclass
class FeatureVector:
    values: dict[str, float]
    label: int | None = None
    provenance: dict[str, str] = field(default_factory=dict)
    aux: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.values) != FEATURE_NAMES:
            missing = set(FEATURE_NAMES) - set(self.values)
            raise ValueError(f"feature vector does not follow the schema; missing {sorted(missing)}")

    def as_array(self) -> np.ndarray:
        return np.array([self.values[n] for n in FEATURE_NAMES], dtype=np.float64)

    def csv_row(self) -> str:
        return ",".join(_fmt(self.values[n]) for n in FEATURE_NAMES)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(round(float(v), 9))


def _band(value: float, low: float, high: float) -> int:
    """1 below ``low``, 0 from ``low`` to ``high`` inclusive, -1 above."""
    if value < low:
        return 1
    if value <= high:
        return 0
    return -1


def derive_rt_features(v: FeatureVector) -> FeatureVector:
    vals = dict(v.values)
    aux = v.aux
    sub = vals["SubdomainLevel"]
    vals["SubdomainLevelRT"] = float(1 if sub <= 1 else (0 if sub == 2 else -1))
    vals["UrlLengthRT"] = float(_band(vals["UrlLength"], 54, 75))
    vals["PctExtResourceUrlsRT"] = float(_band(vals["PctExtResourceUrls"], 0.22, 0.61))
    if aux.get("abnormal_form_action", vals["AbnormalFormAction"]):
        sfh = -1
    elif aux.get("ext_form_action", vals["ExtFormAction"]):
        sfh = 0
    else:
        sfh = 1
    vals["AbnormalExtFormActionR"] = float(sfh)
    vals["ExtMetaScriptLinkRT"] = float(_band(aux.get("pct_ext_meta_script_link", 0.0), 0.17, 0.81))
    vals["PctExtNullSelfRedirectHyperlinksRT"] = float(
        _band(aux.get("pct_ext_null_self_anchors", 0.0), 0.31, 0.67))
    prov = dict(v.provenance)
    prov.update({n: "rule_term" for n in RT_FEATURES})
    return FeatureVector(vals, v.label, prov, dict(aux))


def extract(url_text: str, html: str | None = None, brands=(), label: int | None = None,
            parts: UrlParts | None = None, page: PageDocument | None = None) -> FeatureVector:
    """Full 48-column vector for one website.

    Content features come from ``page`` (e.g. a fetched document, whose base is
    the post-redirect URL) or from ``html`` resolved against ``url_text``.
    Without either they are 0 and marked unavailable.
    """
    parts = parts or parse_url(url_text)
    values = dict.fromkeys(FEATURE_NAMES, 0.0)
    values.update(extract_url_features(parts, url_text, brands))
    prov = {n: "from_url" for n in URL_FEATURES}
    aux = {}
    if page is None and html is not None:
        page = PageDocument(parts, html)
    if page is not None:
        content, aux = extract_content_features(page)
        values.update(content)
        prov.update({n: "from_content" for n in CONTENT_FEATURES})
    else:
        prov.update({n: "unavailable" for n in CONTENT_FEATURES})
    return derive_rt_features(FeatureVector(values, label, prov, aux))


def load_brands(path) -> tuple[str, ...]:
    """One brand per line; blank lines and ``#`` comments ignored."""
    with open(path, encoding="utf-8") as fh:
        return tuple(line.strip().lower() for line in fh
                     if line.strip() and not line.lstrip().startswith("#"))


# --------------------------------------------------------------------------- fetching


def fetch_page(url: str, timeout: float = 10.0, max_bytes: int = 2_000_000) -> PageDocument:
    """GET ``url`` once (up to 5 redirects), truncating the body at ``max_bytes``."""
    import httpx

    parts = parse_url(url)
    try:
        with httpx.Client(follow_redirects=True, max_redirects=5, timeout=timeout) as client:
            with client.stream("GET", parts.serialize()) as resp:
                if not 200 <= resp.status_code < 300:
                    raise FetchError("status", f"HTTP {resp.status_code}")
                chunks, size, truncated = [], 0, False
                for chunk in resp.iter_bytes():
                    chunks.append(chunk)
                    size += len(chunk)
                    if size >= max_bytes:
                        truncated = size > max_bytes
                        break
                body = b"".join(chunks)[:max_bytes]
                final = parse_url(str(resp.url))
                encoding = resp.encoding or "utf-8"
    except httpx.TooManyRedirects as exc:
        raise FetchError("redirect", str(exc)) from None
    except httpx.TimeoutException as exc:
        raise FetchError("timeout", str(exc) or "timed out") from None
    except httpx.ConnectError as exc:
        raise FetchError("connect", str(exc)) from None
    except httpx.HTTPError as exc:
        raise FetchError("other", str(exc)) from None
    return PageDocument(final, body.decode(encoding, errors="replace"), truncated=truncated)


def fetch_many(urls, max_concurrent: int = 4, **kwargs) -> list[PageDocument | FetchError]:
    """Fetch ``urls`` with at most ``max_concurrent`` requests in flight.

    Results keep input order; a failed fetch yields its FetchError instead of raising.
    """
    from concurrent.futures import ThreadPoolExecutor

    if max_concurrent < 1:
        raise ValueError("max_concurrent must be at least 1")

    def one(url):
        try:
            return fetch_page(url, **kwargs)
        except FetchError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max_concurrent) as pool:
        return list(pool.map(one, urls))


# --------------------------------------------------------------------------- ranking


def correlation_rank(x: np.ndarray, y, names=FEATURE_NAMES) -> list[tuple[str, float]]:
    """Pearson correlation of each column with the label, strongest first.

    Constant columns get 0; ties keep schema order.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] < 2 or len(np.unique(y)) < 2:
        raise ValueError("correlation ranking needs at least two samples and both labels")
    xc = x - x.mean(axis=0)
    yc = y - y.mean()
    sx = np.sqrt((xc ** 2).sum(axis=0))
    sy = np.sqrt((yc ** 2).sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(sx > 0, (xc * yc[:, None]).sum(axis=0) / (sx * sy), 0.0)
    r = np.clip(r, -1.0, 1.0)
    order = sorted(range(len(names)), key=lambda j: (-abs(r[j]), j))
    return [(names[j], float(r[j])) for j in order]
