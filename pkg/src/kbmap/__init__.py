"""kbmap: map open subject-predicate-object triples onto a fixed relation
schema via weak alignment, a pluggable generator, and corroborative
ranking, with baselines and an automatic evaluation suite."""

from .align_embed import (
    EmbeddingAligner,
    HttpEmbedder,
    MockEmbedder,
    knn_align,
    serialize_triple,
)
from .align_rule import RuleAligner, align_rule_based
from .alignments import Alignment, AlignmentSet, load_alignments, save_alignments
from .baselines import (
    ManualMapper,
    ManualTable,
    Rule,
    RuleMiningMapper,
    TsvTaxonomy,
    apply_rules,
    build_meta_kb,
    load_manual_table,
    load_taxonomy,
    map_manual,
    mine_rules,
)
from .index import ClosedIndex, index_closed_kb
from .metrics import (
    EvalReport,
    SOReport,
    alignment_test_metrics,
    automatic_precision,
    automatic_recall,
    evaluate,
    generalized_mrr,
    precision_at_k,
    relative,
    so_conservation,
)
from .normalize import NormalizedPhrase, lemmatize_token, normalize_phrase, tokenize
from .pipeline import PipelineConfig, load_config, run, split_alignments
from .scoring import CorroborationRanker, RankedKB, ScoredClosedTriple, aggregate, final_score
from .translate import (
    Generation,
    HttpGenerator,
    MockGenerator,
    Rejection,
    TripleTranslator,
    filter_generations,
    format_training_example,
    parse_generation,
    translate_kb,
)
from .triples import (
    ClosedKB,
    ClosedTriple,
    KBFormatError,
    OpenKB,
    OpenTriple,
    RelationSchema,
    load_closed_kb,
    load_open_kb,
    load_schema,
    save_closed_kb,
    save_open_kb,
)

__version__ = "0.1.0"
