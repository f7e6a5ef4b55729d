"""Match sung-phrase phoneme posteriorgrams to candidate score phrases.

Candidate phrases become left-to-right phoneme state chains with score-derived
duration means; a query posteriorgram is decoded against every chain with a
duration-informed Viterbi variant and candidates are ranked by decoded log
posterior probability.
"""

from .score import (
    AnnotationRecord,
    ParseError,
    PhonemeInventory,
    PronunciationDictionary,
    ScorePhrase,
    Syllable,
    default_dictionary,
    default_inventory,
    load_annotations,
    load_score_dataset,
    phonetize,
    save_annotations,
    save_score_dataset,
)
from .durations import (
    DurationStats,
    StateDurationDist,
    compute_duration_stats,
    discretize_duration,
    gaussian_log_density,
    geometric_occupancy,
    normalize_path_durations,
    split_syllable_duration,
)
from .network import (
    DecodablePath,
    ExcludedPath,
    LyricPath,
    MatchingNetwork,
    build_network,
    instantiate_for_query,
    load_network,
    save_network,
)
from .decode import (
    DecodeOutcome,
    ObservationMatrix,
    brute_force_decode,
    duration_log_score,
    hmm_viterbi,
    hsmm_viterbi,
    post_processor_rescore,
)
from .acoustic import (
    FeatureMatrix,
    GmmModel,
    fit_gmm_em,
    frame_accuracy,
    posteriorize,
    synth_query,
)
from .evaluate import (
    Candidate,
    GridSearchResult,
    MatchReport,
    grid_search,
    match_queries,
    mrr,
    rank_candidates,
    top_m_hit,
)

__version__ = "0.1.0"
