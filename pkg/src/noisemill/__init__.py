"""noisemill: recoverability-controlled corruption of multi-facet catalog
objects into denoising training corpora, plus the matching verification
oracle and evaluation metric suite."""

from .corpus import (
    BOS_MARK,
    EOS_MARK,
    CorpusStats,
    QualityFilterConfig,
    TemplateViolation,
    TrainingSample,
    build_corpus,
    filter_record,
    parse_sample,
    render_sample,
)
from .metrics import (
    BulletRules,
    EmptyInput,
    EvalThresholds,
    MetricsReport,
    TitleRules,
    UndefinedMetric,
    aggregate,
    attribute_precision,
    attribute_recall,
    bullet_quality,
    evaluate_pair,
    fuzzy_match,
    rouge_l_f1,
    title_quality,
)
from .noising import (
    CREATIVE,
    GROUNDED,
    CorruptionLedger,
    Evidence,
    LedgerEntry,
    NoiseConfig,
    corrupt,
    find_evidence,
    noise_attributes,
    noise_bullets,
    noise_description,
    noise_title,
    record_seed,
    register_noise_op,
    soup_of_words,
)
from .objects import (
    AttributeSpec,
    CategoryMismatch,
    MalformedObject,
    Schema,
    SchemaFileInvalid,
    StructuredObject,
    Violation,
    load_schemas,
    parse,
    serialize,
    validate_against,
)
from .oracle import (
    LedgerMismatch,
    VerificationReport,
    apply_recoveries,
    recover_attributes,
    verify_ledger,
)
from .synth import generate_object, generate_objects, generate_schemas

__version__ = "0.1.0"
