"""Synthetic review corpus generator.

Template-filled documents over small gazetteers: labeled include/exclude
abstracts for screening experiments, chunk units with gold token spans for
the tagger, sentence units with label sets for the sentence classifier, and
a record of every planted measurement so the output table can be checked
fact by fact.  Countries share the label-relevant vocabulary (so transfer is
free by construction); region names are country-specific up to an overlap
knob.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..docproc import AnnotationUnit, tokenize
from ..extract.bio import SpanAnnotation
from ..extract.sentences import LabeledSentence

DISEASES = (
    "brucellosis",
    "anthrax",
    "bovine tuberculosis",
    "foot and mouth disease",
    "lumpy skin disease",
    "contagious bovine pleuropneumonia",
    "peste des petits ruminants",
    "blackleg",
    "fasciolosis",
    "trypanosomosis",
)
SPECIES = ("cattle", "sheep", "goats", "camels", "small ruminants")
TESTS = (
    "Rose Bengal Plate Test",
    "complement fixation test",
    "indirect ELISA",
    "tuberculin skin test",
    "serum agglutination test",
)
SAMPLE_TYPES = ("serum", "blood", "milk", "faecal samples", "tissue")
ECOSYSTEMS = ("highland", "lowland", "midland", "semi-arid")
PRODUCTION_SYSTEMS = ("extensive", "semi-intensive", "intensive", "mixed crop-livestock")
ANALYSES = ("logistic regression", "chi-square test", "multivariable regression")
DESIGNS = ("cross-sectional study", "longitudinal study", "cohort study")
AGES = ("above two years", "older than 6 months", "between 1 and 3 years")
REFERENCES = ("Marden et al. (2014)", "Silvas and Brandt (2009)", "Okafor et al. (2017)")

REGIONS = {
    "Astoria": ("Kelvand", "Morivo", "Tessily", "Ardonne", "Veska", "Quillar"),
    "Borenia": ("Zamette", "Hollick", "Brunmoor", "Caldew", "Ferrin", "Oslett"),
    "Cavella": ("Pellago", "Windmere", "Sarvona", "Luthby", "Grenholt", "Navessa"),
}
SHARED_REGIONS = ("Centrum", "Eastmark", "Westfold", "Southmoor")

CROPS = ("maize", "wheat", "sorghum", "barley")
EXCLUDE_TOPICS = (
    "market price dynamics",
    "household income diversification",
    "irrigation scheduling",
    "soil fertility management",
    "feed supplementation economics",
    "breeding value estimation",
)


@dataclass
class PlantedFact:
    """One measurement written into a document, with its expected table cells."""

    doc_id: str
    kind: str  # individual_prevalence | herd_prevalence | mortality
    number_positive: str = ""
    number_tested: str = ""
    percentage: str = ""


@dataclass
class SynthDoc:
    doc_id: str
    title: str
    abstract: str
    label: str  # include | exclude
    country: str
    facts: list[PlantedFact] = field(default_factory=list)


@dataclass
class SynthCorpus:
    docs: list[SynthDoc]
    chunk_units: list[AnnotationUnit]
    chunk_spans: dict[str, list[SpanAnnotation]]  # unit_id -> gold spans
    sentences: list[LabeledSentence]
    unit_doc: dict[str, str]  # unit_id -> doc_id
    unit_section: dict[str, str]

    def spans_for_doc(self, doc_id: str) -> list[SpanAnnotation]:
        out = []
        for unit in self.chunk_units:
            if self.unit_doc[unit.unit_id] == doc_id:
                out.extend(self.chunk_spans[unit.unit_id])
        return out

    def units_for_doc(self, doc_id: str) -> list[AnnotationUnit]:
        return [u for u in self.chunk_units if self.unit_doc[u.unit_id] == doc_id]


@dataclass
class SynthConfig:
    n_docs: int = 600
    countries: tuple[str, ...] = tuple(REGIONS)
    include_fraction: float = 0.5
    region_overlap: float = 0.0  # chance a document uses a shared region name
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "SynthConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = cls()
        for key in ("n_docs", "include_fraction", "region_overlap", "seed"):
            if key in obj:
                setattr(cfg, key, obj[key])
        if "countries" in obj:
            cfg.countries = tuple(obj["countries"])
        return cfg


@dataclass
class _Fragment:
    text: str
    label: Optional[str] = None


def _sentence(fragments: Sequence[_Fragment]) -> tuple[str, list[tuple[str, int, int]]]:
    """Join fragments into one sentence and return token-index spans.

    Joining never merges tokens across fragments (the tokenizer splits on
    whitespace and punctuation), so per-fragment token counts line up with
    the tokenization of the joined text.
    """
    parts: list[str] = []
    spans: list[tuple[str, int, int]] = []
    pos = 0
    for frag in fragments:
        n_toks = len(tokenize(frag.text))
        if frag.label is not None and n_toks:
            spans.append((frag.label, pos, pos + n_toks))
        pos += n_toks
        if parts and frag.text in (".", ",", ")", "%"):
            parts[-1] = parts[-1] + frag.text
        else:
            parts.append(frag.text)
    text = " ".join(parts)
    assert len(tokenize(text)) == pos, f"token drift in template: {text!r}"
    return text, spans


def _pct_string(k: int, n: int) -> str:
    return f"{100.0 * k / n:.2f}"


class _IncludeDocBuilder:
    """Assembles one prevalence-study abstract sentence by sentence."""

    def __init__(self, rng: random.Random, doc_id: str, country: str, region: str):
        self.rng = rng
        self.doc_id = doc_id
        self.country = country
        self.region = region
        self.disease = rng.choice(DISEASES)
        self.species = rng.choice(SPECIES)
        self.test = rng.choice(TESTS)
        self.sentences: list[tuple[str, list[tuple[str, int, int]]]] = []
        self.facts: list[PlantedFact] = []

    def design_sentence(self) -> None:
        y1 = self.rng.randint(1998, 2016)
        y2 = y1 + self.rng.randint(0, 3)
        self.sentences.append(_sentence([
            _Fragment("A"),
            _Fragment(self.rng.choice(DESIGNS), "study_design"),
            _Fragment("was conducted from"),
            _Fragment(f"{y1} to {y2}", "study_date"),
            _Fragment("to estimate the prevalence of"),
            _Fragment(self.disease, "disease"),
            _Fragment("in"),
            _Fragment(self.species, "species"),
            _Fragment("in"),
            _Fragment(self.region, "region"),
            _Fragment(","),
            _Fragment(self.country),
            _Fragment("."),
        ]))

    def sampling_sentence(self, n: int) -> None:
        self.sentences.append(_sentence([
            _Fragment("A total of"),
            _Fragment(str(n), "sample_size"),
            _Fragment(self.species, "species"),
            _Fragment("were sampled from"),
            _Fragment(self.rng.choice(PRODUCTION_SYSTEMS), "production_system"),
            _Fragment("production systems in the"),
            _Fragment(self.rng.choice(ECOSYSTEMS), "ecosystem"),
            _Fragment("agroecology"),
            _Fragment("."),
        ]))

    def testing_sentence(self) -> None:
        self.sentences.append(_sentence([
            _Fragment("Collected"),
            _Fragment(self.rng.choice(SAMPLE_TYPES), "sample_type"),
            _Fragment("specimens were examined using the"),
            _Fragment(self.test, "diagnostic_test"),
            _Fragment("."),
        ]))

    def prevalence_sentence(self, k: int, n: int) -> None:
        pct = _pct_string(k, n)
        if self.rng.random() < 0.3:
            # ratio only: the table percentage must be computed downstream
            self.sentences.append(_sentence([
                _Fragment("Seropositivity was detected in"),
                _Fragment(f"{k}/{n}", "individual_prevalence"),
                _Fragment("of the examined animals"),
                _Fragment("."),
            ]))
        else:
            self.sentences.append(_sentence([
                _Fragment(self.test, "diagnostic_test"),
                _Fragment("found"),
                _Fragment(f"{pct}% ({k}/{n})", "individual_prevalence"),
                _Fragment("of the samples to be positive for"),
                _Fragment(self.disease, "disease"),
                _Fragment("."),
            ]))
        self.facts.append(PlantedFact(
            doc_id=self.doc_id, kind="individual_prevalence",
            number_positive=str(k), number_tested=str(n), percentage=pct,
        ))

    def herd_sentence(self, k: int, n: int) -> None:
        pct = _pct_string(k, n)
        self.sentences.append(_sentence([
            _Fragment("Herd level prevalence of"),
            _Fragment(self.disease, "disease"),
            _Fragment("was"),
            _Fragment(f"{pct}% ({k}/{n})", "herd_prevalence"),
            _Fragment("."),
        ]))
        self.facts.append(PlantedFact(
            doc_id=self.doc_id, kind="herd_prevalence",
            number_positive=str(k), number_tested=str(n), percentage=pct,
        ))

    def mortality_sentence(self, pct: str) -> None:
        self.sentences.append(_sentence([
            _Fragment("An overall mortality rate of"),
            _Fragment(f"{pct}%", "mortality"),
            _Fragment("was reported in affected herds"),
            _Fragment("."),
        ]))
        self.facts.append(PlantedFact(
            doc_id=self.doc_id, kind="mortality", percentage=pct,
        ))

    def age_sentence(self) -> None:
        self.sentences.append(_sentence([
            _Fragment("Seroprevalence was higher in animals"),
            _Fragment(self.rng.choice(AGES), "age"),
            _Fragment("."),
        ]))

    def analysis_sentence(self) -> None:
        self.sentences.append(_sentence([
            _Fragment("Data were analysed using"),
            _Fragment(self.rng.choice(ANALYSES), "statistical_analysis"),
            _Fragment(", consistent with"),
            _Fragment(self.rng.choice(REFERENCES), "reference"),
            _Fragment("."),
        ]))


def _exclude_abstract(rng: random.Random, region: str, country: str) -> tuple[str, str]:
    topic = rng.choice(EXCLUDE_TOPICS)
    crop = rng.choice(CROPS)
    y1 = rng.randint(1998, 2016)
    title = f"{topic.capitalize()} of {crop} growers in {region}, {country}"
    sentences = [
        f"This paper examines {topic} for {crop} producing households in {region}, {country}.",
        f"Survey data were collected across village markets between {y1} and {y1 + 2}.",
        "Price transmission and input use were estimated with panel econometric models.",
        "Implications for storage, trade policy and extension services are discussed.",
    ]
    if rng.random() < 0.4:
        sentences.insert(2, f"Households keeping {rng.choice(SPECIES)} were interviewed about feed purchases.")
    return title, " ".join(sentences)


def generate_corpus(cfg: SynthConfig) -> SynthCorpus:
    """Deterministic corpus for the given config (seeded RNG throughout)."""
    rng = random.Random(cfg.seed)
    docs: list[SynthDoc] = []
    chunk_units: list[AnnotationUnit] = []
    chunk_spans: dict[str, list[SpanAnnotation]] = {}
    sentences: list[LabeledSentence] = []
    unit_doc: dict[str, str] = {}
    unit_section: dict[str, str] = {}

    per_country = cfg.n_docs // len(cfg.countries)
    doc_no = 0
    for country in cfg.countries:
        n_include = int(round(per_country * cfg.include_fraction))
        for j in range(per_country):
            doc_no += 1
            doc_id = f"synth-{doc_no:04d}"
            if rng.random() < cfg.region_overlap:
                region = rng.choice(SHARED_REGIONS)
            else:
                region = rng.choice(REGIONS.get(country, SHARED_REGIONS))
            if j < n_include:
                doc, built = _build_include_doc(rng, doc_id, country, region)
                _emit_units(doc, built, chunk_units, chunk_spans, sentences, unit_doc, unit_section)
            else:
                title, abstract = _exclude_abstract(rng, region, country)
                doc = SynthDoc(doc_id=doc_id, title=title, abstract=abstract,
                               label="exclude", country=country)
            docs.append(doc)
    return SynthCorpus(
        docs=docs,
        chunk_units=chunk_units,
        chunk_spans=chunk_spans,
        sentences=sentences,
        unit_doc=unit_doc,
        unit_section=unit_section,
    )


def _build_include_doc(
    rng: random.Random, doc_id: str, country: str, region: str
) -> tuple[SynthDoc, list[tuple[str, list[tuple[str, int, int]]]]]:
    builder = _IncludeDocBuilder(rng, doc_id, country, region)
    builder.design_sentence()
    n = rng.randint(120, 900)
    k = rng.randint(1, max(2, n // 4))
    builder.sampling_sentence(n)
    builder.testing_sentence()
    builder.prevalence_sentence(k, n)
    if rng.random() < 0.35:
        hn = rng.randint(20, 80)
        hk = rng.randint(1, hn - 1)
        builder.herd_sentence(hk, hn)
    if rng.random() < 0.2:
        builder.mortality_sentence(f"{rng.uniform(0.1, 9.9):.1f}")
    builder.age_sentence()
    builder.analysis_sentence()
    abstract = " ".join(text for text, _ in builder.sentences)
    title = f"Seroprevalence of {builder.disease} in {builder.species} in {region}, {country}"
    doc = SynthDoc(doc_id=doc_id, title=title, abstract=abstract,
                   label="include", country=country)
    doc.facts = builder.facts
    return doc, builder.sentences


def _emit_units(
    doc: SynthDoc,
    built: list[tuple[str, list[tuple[str, int, int]]]],
    chunk_units: list[AnnotationUnit],
    chunk_spans: dict[str, list[SpanAnnotation]],
    sentences: list[LabeledSentence],
    unit_doc: dict[str, str],
    unit_section: dict[str, str],
) -> None:
    # sentence units: one per template sentence, labels = span labels present
    for i, (text, spans) in enumerate(built):
        unit_id = f"{doc.doc_id}:sent:{i}"
        sentences.append(LabeledSentence(
            unit_id=unit_id, text=text,
            labels=frozenset(label for label, _, _ in spans),
        ))
    # chunk units: consecutive sentences, 3 per chunk, trailing partial kept
    idx = 0
    chunk_no = 0
    while idx < len(built):
        size = min(3, len(built) - idx)
        group = built[idx:idx + size]
        idx += size
        text = " ".join(t for t, _ in group)
        unit_id = f"{doc.doc_id}:chunk:{chunk_no}"
        chunk_no += 1
        token_spans = tokenize(text)
        unit = AnnotationUnit(
            unit_id=unit_id, doc_id=doc.doc_id, kind="chunk", section="abstract",
            text=text, token_spans=token_spans,
            sentence_indices=tuple(range(idx - size, idx)),
        )
        spans: list[SpanAnnotation] = []
        offset = 0
        for sent_text, sent_spans in group:
            toks = [sent_text[a:b] for a, b in tokenize(sent_text)]
            for label, a, b in sent_spans:
                spans.append(SpanAnnotation(
                    unit_id=unit_id, label=label, start=offset + a, end=offset + b,
                    text=" ".join(toks[a:b]),
                ))
            offset += len(toks)
        chunk_units.append(unit)
        chunk_spans[unit_id] = spans
        unit_doc[unit_id] = doc.doc_id
        unit_section[unit_id] = "abstract"
