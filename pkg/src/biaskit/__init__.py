"""biaskit: association-bias measurement for embeddings and masked LMs.

Submodules
----------
lexicon   stimulus categories, word sets, suffix groups
stats     cosine associations, effect sizes, permutation significance
ceat      context-sampled tests pooled with a random-effects model
mlm       masked-template probing and log-probability bias scores
extract   suffix-aware sentence extraction over large corpora
archive   binary embedding archives and context stores
cli       the ``biaskit`` command-line interface
"""
from . import archive, ceat, cli, errors, extract, lexicon, mlm, stats

__version__ = "0.1.0"

__all__ = ["archive", "ceat", "cli", "errors", "extract", "lexicon", "mlm", "stats",
           "__version__"]
