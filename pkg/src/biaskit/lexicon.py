"""Stimulus vocabulary: categories, target/attribute word sets, suffix groups.

The lexicon file is UTF-8 JSON with the exact shape::

    {
      "version": 1,
      "suffix_groups": [{"id": str, "suffixes": [str, ...]}, ...],
      "categories": [
        {
          "id": str, "label": str,
          "targets_x":    [{"surface": str, "suffix_group": str|null}, ...],
          "targets_y":    [...],
          "attributes_a": [...],
          "attributes_b": [...]
        }, ...
      ]
    }

Unknown keys are rejected.  All surfaces and suffixes are NFC-normalized on
load so that canonically equivalent byte sequences compare equal; this
matters for scripts with combining characters.  Loaded objects are frozen
and safe to share across threads.
"""
from __future__ import annotations

import json
import unicodedata
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError

# Soft conformance band for suffix-group sizes; outside it we warn, not reject.
SUFFIX_COUNT_RANGE = (2, 15)

_ROLE_NAMES = ("attributes_a", "attributes_b", "targets_x", "targets_y")


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class SuffixGroup:
    """An ordered, duplicate-free list of inflectional endings."""

    id: str
    suffixes: tuple[str, ...]


@dataclass(frozen=True)
class Stimulus:
    """A root word, optionally linked to the suffix group used to inflect it."""

    surface: str
    suffix_group: str | None = None
    notes: str = ""


@dataclass(frozen=True)
class Category:
    """Two target sets and two attribute sets forming one association test."""

    id: str
    label: str
    targets_x: tuple[Stimulus, ...]
    targets_y: tuple[Stimulus, ...]
    attributes_a: tuple[Stimulus, ...]
    attributes_b: tuple[Stimulus, ...]

    def role(self, name: str) -> tuple[Stimulus, ...]:
        if name not in _ROLE_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def all_stimuli(self) -> tuple[Stimulus, ...]:
        return self.targets_x + self.targets_y + self.attributes_a + self.attributes_b


@dataclass(frozen=True)
class Lexicon:
    """Immutable bundle of categories plus the suffix groups they reference."""

    categories: tuple[Category, ...]
    suffix_groups: dict[str, SuffixGroup] = field(default_factory=dict)

    def category(self, category_id: str) -> Category:
        for cat in self.categories:
            if cat.id == category_id:
                return cat
        raise ValidationError(f"no category with id {category_id!r}")


def _require_keys(obj: dict, required: set[str], optional: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected a JSON object")
    keys = set(obj)
    missing = required - keys
    if missing:
        raise ParseError(f"{where}: missing key(s) {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise ParseError(f"{where}: unknown key(s) {sorted(unknown)}")


def _parse_stimulus(obj: dict, where: str) -> Stimulus:
    _require_keys(obj, {"surface", "suffix_group"}, {"notes"}, where)
    surface = obj["surface"]
    if not isinstance(surface, str):
        raise ParseError(f"{where}: surface must be a string")
    surface = _nfc(surface)
    if not surface:
        raise ValidationError(f"{where}: surface is empty after NFC normalization")
    group = obj["suffix_group"]
    if group is not None and not isinstance(group, str):
        raise ParseError(f"{where}: suffix_group must be a string or null")
    notes = obj.get("notes", "")
    if not isinstance(notes, str):
        raise ParseError(f"{where}: notes must be a string")
    return Stimulus(surface=surface, suffix_group=group, notes=notes)


def _parse_suffix_group(obj: dict, where: str) -> SuffixGroup:
    _require_keys(obj, {"id", "suffixes"}, set(), where)
    gid = obj["id"]
    if not isinstance(gid, str) or not gid:
        raise ParseError(f"{where}: id must be a non-empty string")
    raw = obj["suffixes"]
    if not isinstance(raw, list) or not all(isinstance(s, str) for s in raw):
        raise ParseError(f"{where}: suffixes must be a list of strings")
    suffixes = tuple(_nfc(s) for s in raw)
    if not suffixes:
        raise ValidationError(f"suffix group {gid!r}: suffix list is empty")
    if any(not s for s in suffixes):
        raise ValidationError(f"suffix group {gid!r}: contains an empty suffix")
    if len(set(suffixes)) != len(suffixes):
        raise ValidationError(f"suffix group {gid!r}: duplicate suffixes")
    return SuffixGroup(id=gid, suffixes=suffixes)


def _category_findings(cat: Category, groups: dict[str, SuffixGroup]) -> list[tuple[bool, str]]:
    """All diagnostics for one category as (is_hard_error, message) pairs.

    Ordered by (role name, stimulus surface); category-level findings last.
    """
    findings: list[tuple[bool, str]] = []
    roles_of: dict[str, list[str]] = {}
    for role in _ROLE_NAMES:
        for stim in cat.role(role):
            roles = roles_of.setdefault(stim.surface, [])
            if role not in roles:
                roles.append(role)

    for role in _ROLE_NAMES:
        stimuli = cat.role(role)
        if not stimuli:
            findings.append((True, f"{cat.id}/{role}: set is empty"))
        seen: set[str] = set()
        for stim in sorted(stimuli, key=lambda s: s.surface):
            roles = roles_of[stim.surface]
            if len(roles) > 1 and role == roles[0] and stim.surface not in seen:
                findings.append(
                    (True, f"{cat.id}/{role}: {stim.surface!r} also appears in "
                           f"{', '.join(roles[1:])}")
                )
            if stim.surface in seen:
                findings.append((True, f"{cat.id}/{role}: duplicate stimulus {stim.surface!r}"))
            seen.add(stim.surface)
            if stim.suffix_group is not None:
                group = groups.get(stim.suffix_group)
                if group is None:
                    findings.append(
                        (True, f"{cat.id}/{role}: {stim.surface!r} references "
                               f"unknown suffix group {stim.suffix_group!r}")
                    )
                else:
                    lo, hi = SUFFIX_COUNT_RANGE
                    if not lo <= len(group.suffixes) <= hi:
                        findings.append(
                            (False, f"{cat.id}/{role}: {stim.surface!r} uses suffix group "
                                    f"{group.id!r} with suffix count outside {lo}..{hi} "
                                    f"({len(group.suffixes)})")
                        )
    if len(cat.targets_x) != len(cat.targets_y):
        findings.append(
            (False, f"{cat.id}: target set sizes differ "
                    f"({len(cat.targets_x)} vs {len(cat.targets_y)})")
        )
    if len(cat.attributes_a) != len(cat.attributes_b):
        findings.append(
            (False, f"{cat.id}: attribute set sizes differ "
                    f"({len(cat.attributes_a)} vs {len(cat.attributes_b)})")
        )
    return findings


def validate_category(cat: Category, suffix_groups: dict[str, SuffixGroup] | None = None) -> list[str]:
    """Return all diagnostics for one category, hard violations and warnings alike.

    Empty result means the category is fully conforming.  Ordering is
    deterministic: per-stimulus findings sorted by (role name, surface),
    then category-level size findings.
    """
    return [msg for _, msg in _category_findings(cat, suffix_groups or {})]


def _parse_category(obj: dict, where: str) -> Category:
    required = {"id", "label", "targets_x", "targets_y", "attributes_a", "attributes_b"}
    _require_keys(obj, required, set(), where)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise ParseError(f"{where}: id must be a non-empty string")
    if not isinstance(obj["label"], str):
        raise ParseError(f"{where}: label must be a string")
    roles = {}
    for role in _ROLE_NAMES:
        raw = obj[role]
        if not isinstance(raw, list):
            raise ParseError(f"{where}/{role}: expected a list")
        roles[role] = tuple(
            _parse_stimulus(item, f"{where}/{role}[{i}]") for i, item in enumerate(raw)
        )
    return Category(
        id=obj["id"],
        label=obj["label"],
        targets_x=roles["targets_x"],
        targets_y=roles["targets_y"],
        attributes_a=roles["attributes_a"],
        attributes_b=roles["attributes_b"],
    )


def load_lexicon(path: str | Path) -> Lexicon:
    """Load and validate a lexicon file.

    Raises ParseError for malformed files, ValidationError for structural
    violations (empty sets, duplicate stimuli across roles of one category,
    dangling suffix-group references).  Soft conformance findings (suffix
    counts outside 2..15, unbalanced set sizes) are emitted as warnings.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc

    _require_keys(doc, {"version", "suffix_groups", "categories"}, set(), str(path))
    if doc["version"] != 1:
        raise ValidationError(f"{path}: unsupported version {doc['version']!r}")
    if not isinstance(doc["suffix_groups"], list) or not isinstance(doc["categories"], list):
        raise ParseError(f"{path}: suffix_groups and categories must be lists")

    groups: dict[str, SuffixGroup] = {}
    for i, raw in enumerate(doc["suffix_groups"]):
        group = _parse_suffix_group(raw, f"{path}: suffix_groups[{i}]")
        if group.id in groups:
            raise ValidationError(f"{path}: duplicate suffix group id {group.id!r}")
        groups[group.id] = group

    categories: list[Category] = []
    seen_ids: set[str] = set()
    for i, raw in enumerate(doc["categories"]):
        cat = _parse_category(raw, f"{path}: categories[{i}]")
        if cat.id in seen_ids:
            raise ValidationError(f"{path}: duplicate category id {cat.id!r}")
        seen_ids.add(cat.id)
        hard = [msg for is_err, msg in _category_findings(cat, groups) if is_err]
        if hard:
            raise ValidationError(f"{path}: " + "; ".join(hard))
        for msg in validate_category(cat, groups):
            warnings.warn(msg, stacklevel=2)
        categories.append(cat)

    lo, hi = SUFFIX_COUNT_RANGE
    for group in groups.values():
        if not lo <= len(group.suffixes) <= hi:
            warnings.warn(
                f"suffix group {group.id!r}: suffix count outside {lo}..{hi} "
                f"({len(group.suffixes)})",
                stacklevel=2,
            )
    return Lexicon(categories=tuple(categories), suffix_groups=groups)


def _stimulus_to_dict(stim: Stimulus) -> dict:
    out: dict = {"surface": stim.surface, "suffix_group": stim.suffix_group}
    if stim.notes:
        out["notes"] = stim.notes
    return out


def lexicon_to_dict(lexicon: Lexicon) -> dict:
    """The wire-format dict for a lexicon; json.dumps of it round-trips."""
    return {
        "version": 1,
        "suffix_groups": [
            {"id": g.id, "suffixes": list(g.suffixes)} for g in lexicon.suffix_groups.values()
        ],
        "categories": [
            {
                "id": cat.id,
                "label": cat.label,
                **{role: [_stimulus_to_dict(s) for s in cat.role(role)]
                   for role in ("targets_x", "targets_y", "attributes_a", "attributes_b")},
            }
            for cat in lexicon.categories
        ],
    }


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(lexicon_to_dict(lexicon), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def sample_lexicon_path() -> Path:
    """Path of the demonstration lexicon shipped with the package.

    The word lists are small invented stand-ins that mirror the C1..C9
    category layout; they are not a curated evaluation vocabulary.
    """
    return Path(__file__).parent / "data" / "sample_lexicon.json"
