"""Factual-precision metrics for long-form text with ambiguous entities.

The package computes two paragraph-level scores over decomposed atomic
facts: a plain supported-fact fraction (FS) and a disambiguation-aware
variant (D-FS) that groups facts by the individual they appear to
describe and verifies each group against a single linked entity page.
Around the metrics sit a passage store, a lexical retriever, judge
clients with replayable transcripts, a generation harness, aggregation
and agreement analysis, and an annotation service.
"""

__version__ = "0.1.0"
