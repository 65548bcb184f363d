"""Registrable-domain lookup backed by a bundled public-suffix snapshot.

The subresource audit needs to know whether ``cdn.site.example`` and
``www.site.example`` belong to the same site. Plain host comparison gets
that wrong, and comparing the last two labels breaks on suffixes like
``co.uk``. This module applies the standard public-suffix matching rules
(longest rule wins, ``!`` exceptions beat wildcards, unknown TLDs fall
back to the one-label default rule) against a snapshot shipped with the
package, so no network access is ever needed.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

_SNAPSHOT = "public_suffix_snapshot.dat"


def _load_rules() -> tuple[set[tuple[str, ...]], set[tuple[str, ...]]]:
    """Return (rules, exceptions) as tuples of labels in wire order."""
    rules: set[tuple[str, ...]] = set()
    exceptions: set[tuple[str, ...]] = set()
    text = resources.files("headaudit.data").joinpath(_SNAPSHOT).read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("//"):
            continue
        if line.startswith("!"):
            exceptions.add(tuple(line[1:].lower().split(".")))
        else:
            rules.add(tuple(line.lower().split(".")))
    return rules, exceptions


@lru_cache(maxsize=1)
def _ruleset() -> tuple[set[tuple[str, ...]], set[tuple[str, ...]]]:
    return _load_rules()


def _matches(rule: tuple[str, ...], labels: tuple[str, ...]) -> bool:
    if len(rule) > len(labels):
        return False
    for rule_label, label in zip(reversed(rule), reversed(labels)):
        if rule_label != "*" and rule_label != label:
            return False
    return True


def public_suffix(host: str) -> str:
    """Return the public suffix of ``host`` per the snapshot rules."""
    labels = tuple(host.lower().rstrip(".").split("."))
    rules, exceptions = _ruleset()

    for exc in exceptions:
        if _matches(exc, labels):
            # An exception rule's suffix is the rule minus its leftmost label.
            return ".".join(labels[len(labels) - len(exc) + 1:])

    best = 1  # default rule: the last label is the suffix
    for rule in rules:
        if len(rule) > best and _matches(rule, labels):
            best = len(rule)
    return ".".join(labels[len(labels) - best:])


def registrable_domain(host: str) -> str | None:
    """Suffix plus one label, or None when ``host`` is itself a suffix.

    IP-address literals are returned unchanged: they have no registrable
    domain but must still compare equal to themselves.
    """
    host = host.lower().rstrip(".")
    if not host:
        return None
    if _looks_like_ip(host):
        return host
    suffix = public_suffix(host)
    if host == suffix:
        return None
    head = host[: -(len(suffix) + 1)]
    return head.rsplit(".", 1)[-1] + "." + suffix


def same_site(host_a: str, host_b: str) -> bool:
    """True when both hosts share a registrable domain."""
    a = registrable_domain(host_a)
    b = registrable_domain(host_b)
    if a is None or b is None:
        return host_a.lower().rstrip(".") == host_b.lower().rstrip(".")
    return a == b


def _looks_like_ip(host: str) -> bool:
    if ":" in host:  # bare IPv6
        return True
    parts = host.split(".")
    return len(parts) == 4 and all(p.isdigit() for p in parts)
