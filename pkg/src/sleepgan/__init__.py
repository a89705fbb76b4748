"""Event-stream to cross-sectional sleep data, WGAN synthesis, and evaluation."""
from .codec import Codec, ColumnSpec, decode, decode_matrix, encode, encode_matrix, fit_codec
from .evaluate import (
    AGE_GROUPS,
    EvalReport,
    build_report,
    covariate_probabilities,
    mean_sleep_per_hour,
    quantile_curves,
    stratified_means,
)
from .ingest import (
    CovariateSet,
    EventRecord,
    PersonDay,
    awake_fraction_at,
    parse_events,
    parse_events_with_stats,
)
from .simulate import (
    GroupProfile,
    PopulationConfig,
    SleepParams,
    default_population,
    simulate_events_csv,
    simulate_population,
)
from .temporalize import (
    COLUMNS,
    FeatureMatrix,
    bin_sleep_minutes,
    build_feature_matrix,
    total_sleep_minutes,
)
from .wgan import (
    GanConfig,
    ModelCheckpoint,
    clip_weights,
    load_checkpoint,
    sample,
    save_checkpoint,
    train,
    wasserstein_estimate,
)

__version__ = "0.1.0"
