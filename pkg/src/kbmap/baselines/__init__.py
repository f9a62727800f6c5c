from .manual import ManualMapper, ManualTable, load_manual_table, map_manual, map_manual_kb
from .rulemine import (
    Atom,
    MetaKB,
    Rule,
    RuleCandidate,
    RuleMiningMapper,
    TsvTaxonomy,
    apply_rules,
    build_meta_kb,
    candidates_to_generations,
    load_rules,
    load_taxonomy,
    mine_rules,
    save_rule_candidates,
    save_rules,
    top_predicate_tokens,
)

__all__ = [
    "ManualMapper", "ManualTable", "load_manual_table", "map_manual", "map_manual_kb",
    "Atom", "MetaKB", "Rule", "RuleCandidate", "RuleMiningMapper", "TsvTaxonomy",
    "apply_rules", "build_meta_kb", "candidates_to_generations", "load_rules",
    "load_taxonomy", "mine_rules", "save_rule_candidates", "save_rules",
    "top_predicate_tokens",
]
