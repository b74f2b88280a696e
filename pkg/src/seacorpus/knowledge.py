"""Taxon and attribute-fact storage.

Facts are keyed by (taxon, attribute path) under a hierarchical attribute
schema; the shipped default schema has 129 keys and can be replaced by the
operator. Lookups are deterministic: attribute paths sort lexicographically
and facts keep insertion order within a key.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import DuplicateAttributePath, SchemaNotLoaded, SchemaUnreadable

_WS_RE = re.compile(r"\s+")

AttributePath = tuple[str, ...]


def normalize_taxon_id(name: str) -> str:
    """Lowercase and collapse whitespace so spelled variants unify."""
    return _WS_RE.sub(" ", name.strip()).lower()


def parse_attribute_path(text: str) -> AttributePath:
    segments = tuple(seg.strip() for seg in text.split(">"))
    if not all(segments) or not segments:
        raise ValueError(f"bad attribute path: {text!r}")
    return segments


def format_attribute_path(path: AttributePath) -> str:
    return " > ".join(path)


@dataclass(frozen=True)
class AttributeKey:
    path: AttributePath
    display_name: str


@dataclass(frozen=True)
class AttributeFact:
    taxon_id: str
    key: AttributePath
    text: str
    source: str


@dataclass(frozen=True)
class TaxonRecord:
    taxon_id: str
    scientific_name: str
    common_names: tuple[str, ...] = ()
    lineage: tuple[tuple[str, str], ...] = ()


class AttributeSchema:
    def __init__(self, keys: Sequence[AttributeKey]):
        self._keys: dict[AttributePath, AttributeKey] = {}
        for key in keys:
            if key.path in self._keys:
                raise DuplicateAttributePath(format_attribute_path(key.path))
            self._keys[key.path] = key

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, path: AttributePath) -> bool:
        return tuple(path) in self._keys

    @property
    def paths(self) -> list[AttributePath]:
        return sorted(self._keys)

    def groups(self) -> set[str]:
        return {path[0] for path in self._keys}


def load_attribute_schema(schema_file: Union[str, Path]) -> AttributeSchema:
    """Load a schema file: one key per line, segments joined by `>`.

    Blank lines and `#` comments are ignored. Duplicate paths raise
    DuplicateAttributePath; unreadable files raise SchemaUnreadable.
    """
    try:
        lines = Path(schema_file).read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise SchemaUnreadable(f"{schema_file}: {exc}") from exc
    keys = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        path = parse_attribute_path(line)
        keys.append(AttributeKey(path=path, display_name=path[-1]))
    return AttributeSchema(keys)


def default_schema_path() -> Path:
    return Path(str(resources.files("seacorpus.data") / "attribute_schema.txt"))


def load_default_schema() -> AttributeSchema:
    return load_attribute_schema(default_schema_path())


@dataclass
class FactImportReport:
    inserted: int = 0
    duplicate: int = 0
    rejected: list[tuple[AttributeFact, str]] = field(default_factory=list)

    @property
    def rejected_count(self) -> int:
        return len(self.rejected)


class KnowledgeStore:
    """Single-writer fact store; lookups are pure reads."""

    def __init__(self, schema: Optional[AttributeSchema] = None):
        self._schema = schema
        self._taxa: dict[str, TaxonRecord] = {}
        # taxon -> key path -> fact texts in insertion order
        self._facts: dict[str, dict[AttributePath, list[AttributeFact]]] = {}
        self._seen: set[tuple[str, AttributePath, str]] = set()
        self._write_lock = threading.RLock()

    @property
    def schema(self) -> Optional[AttributeSchema]:
        return self._schema

    def load_schema(self, schema_file: Union[str, Path]) -> AttributeSchema:
        with self._write_lock:
            self._schema = load_attribute_schema(schema_file)
            return self._schema

    def add_taxon(self, record: TaxonRecord) -> TaxonRecord:
        with self._write_lock:
            normalized = normalize_taxon_id(record.taxon_id)
            record = TaxonRecord(
                taxon_id=normalized,
                scientific_name=record.scientific_name,
                common_names=record.common_names,
                lineage=record.lineage,
            )
            self._taxa[normalized] = record
            return record

    def taxon(self, taxon_id: str) -> Optional[TaxonRecord]:
        return self._taxa.get(normalize_taxon_id(taxon_id))

    @property
    def taxa(self) -> list[TaxonRecord]:
        return [self._taxa[k] for k in sorted(self._taxa)]

    def import_facts(self, records: Iterable[AttributeFact]) -> FactImportReport:
        """Insert facts, rejecting unknown attribute keys and counting exact
        duplicates without double-storing them. Idempotent per batch."""
        if self._schema is None:
            raise SchemaNotLoaded("load an attribute schema before importing facts")
        report = FactImportReport()
        with self._write_lock:
            for fact in records:
                taxon_id = normalize_taxon_id(fact.taxon_id)
                key = tuple(fact.key)
                if key not in self._schema:
                    report.rejected.append((fact, "UnknownAttribute"))
                    continue
                text = fact.text.strip()
                if not text:
                    report.rejected.append((fact, "EmptyText"))
                    continue
                identity = (taxon_id, key, text)
                if identity in self._seen:
                    report.duplicate += 1
                    continue
                self._seen.add(identity)
                stored = AttributeFact(taxon_id=taxon_id, key=key, text=text, source=fact.source)
                self._facts.setdefault(taxon_id, {}).setdefault(key, []).append(stored)
                report.inserted += 1
        return report

    def lookup_facts(
        self,
        taxon_id: str,
        keys: Optional[Sequence[AttributePath]] = None,
    ) -> dict[AttributePath, list[str]]:
        """Fact texts for a taxon, ordered by key path then insertion.

        Unknown taxa return an empty map.
        """
        by_key = self._facts.get(normalize_taxon_id(taxon_id), {})
        wanted = sorted(by_key) if keys is None else [tuple(k) for k in keys]
        result: dict[AttributePath, list[str]] = {}
        for key in sorted(wanted):
            facts = by_key.get(key)
            if facts:
                result[key] = [fact.text for fact in facts]
        return result

    def ordered_facts(self, taxon_id: str) -> list[AttributeFact]:
        """Flat deterministic fact list used by the caption sampler."""
        by_key = self._facts.get(normalize_taxon_id(taxon_id), {})
        return [fact for key in sorted(by_key) for fact in by_key[key]]


def load_facts_file(path: Union[str, Path], schema: AttributeSchema) -> list[AttributeFact]:
    """Parse a facts import file: `taxon<TAB>key_path<TAB>text<TAB>source` per line."""
    facts = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise ValueError(f"facts line needs taxon, key_path, text: {line!r}")
        taxon, key_path, text = fields[0], fields[1], fields[2]
        source = fields[3] if len(fields) > 3 else ""
        facts.append(
            AttributeFact(
                taxon_id=normalize_taxon_id(taxon),
                key=parse_attribute_path(key_path),
                text=text.strip(),
                source=source.strip(),
            )
        )
    return facts


def load_taxa_file(path: Union[str, Path]) -> list[TaxonRecord]:
    """Parse a taxa file: `scientific_name<TAB>common,names<TAB>rank:name;...` per line."""
    taxa = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.rstrip("\n").split("\t")
        scientific = fields[0].strip()
        common = tuple(
            name.strip() for name in (fields[1].split(",") if len(fields) > 1 else []) if name.strip()
        )
        lineage = []
        if len(fields) > 2:
            for part in fields[2].split(";"):
                if ":" in part:
                    rank, _, name = part.partition(":")
                    lineage.append((rank.strip(), name.strip()))
        taxa.append(
            TaxonRecord(
                taxon_id=normalize_taxon_id(scientific),
                scientific_name=scientific,
                common_names=common,
                lineage=tuple(lineage),
            )
        )
    return taxa
