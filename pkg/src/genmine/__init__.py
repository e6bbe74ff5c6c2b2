"""genmine: mine bare-plural generic and quantified sentences from document corpora.

The pipeline stages are: ingest documents -> segment into sentences ->
prefilter -> dependency-based bare-plural filter -> quantifier labeling ->
genericity scoring -> thresholded dataset emission.  Corpus statistics,
diversity metrics and a human-annotation service sit on top of the mined
records.
"""

__version__ = "0.1.0"
