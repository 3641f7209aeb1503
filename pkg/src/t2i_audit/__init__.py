"""Audit pipeline for country-representation bias in text-to-image models.

Generates a country x concept x model image matrix, codes each image with
a four-coder vision ensemble on five dimensions (political symbols,
cultural symbols, flag prominence, sovereignty, modernity), controls
quality with cross-coder entropy and confidence, routes uncertain images
to human validators, computes composite representation indices (SI, PSI,
CEI, VOI) and runs the hypothesis battery that turns a finished study
into report tables.

Typical library use:

    from t2i_audit import load_config, build_design, StudyStore, pipeline

    config = load_config()                      # packaged default registries
    store = StudyStore.open_or_init("study", config)
    pipeline.run_all(store, config, mock=True)

or from the shell: `t2i-audit run-all --mock --seed 7 --store study`.
"""

from . import pipeline
from .battery import AnalysisProducts, run_hypothesis_battery
from .coding import (CodingRecord, CodingScheme, DimensionSpec, ParseError,
                     ValidationError, default_scheme, parse_coder_output,
                     render_coding_prompt)
from .design import (Concept, Country, ModelSpec, StudyCell, StudyConfig,
                     StudyDesign, VlmCoderSpec, build_design, build_prompt,
                     group_cells, load_config)
from .indices import (IndexRecord, NormalizationContext, aggregate_indices,
                      cei, compute_indices, psi, symbolization_index, voi)
from .providers import ImageRecord, ProviderGateway, RawCoderOutput
from .quality import (ConsensusRecord, ValidationQueueEntry, consensus,
                      external_entropy, prioritize_for_validation, quality_score)
from .reliability import (ReliabilityMatrix, ReliabilityResult,
                          krippendorff_alpha, percent_agreement,
                          stratified_agreement)
from .stats import (AnovaTable, Sample, StatResult, chi_square_2x2, cohens_d,
                    mixed_anova_balanced, student_t, tukey_hsd, two_way_anova)
from .store import StudyStore

__version__ = "0.1.0"

__all__ = [
    "AnalysisProducts", "AnovaTable", "CodingRecord", "CodingScheme",
    "Concept", "ConsensusRecord", "Country", "DimensionSpec", "ImageRecord",
    "IndexRecord", "ModelSpec", "NormalizationContext", "ParseError",
    "ProviderGateway", "RawCoderOutput", "ReliabilityMatrix",
    "ReliabilityResult", "Sample", "StatResult", "StudyCell", "StudyConfig",
    "StudyDesign", "StudyStore", "ValidationError", "ValidationQueueEntry",
    "VlmCoderSpec", "aggregate_indices", "build_design", "build_prompt",
    "cei", "chi_square_2x2", "cohens_d", "compute_indices", "consensus",
    "default_scheme", "external_entropy", "group_cells", "krippendorff_alpha",
    "load_config", "mixed_anova_balanced", "parse_coder_output",
    "percent_agreement", "pipeline", "prioritize_for_validation", "psi",
    "quality_score", "render_coding_prompt", "run_hypothesis_battery",
    "student_t", "stratified_agreement", "symbolization_index",
    "tukey_hsd", "two_way_anova", "voi",
]
