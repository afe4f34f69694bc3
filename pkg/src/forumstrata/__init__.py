"""forumstrata: graph-based stratified sampling for forum text classification.

The toolkit turns a forum corpus into a typed graph, computes member
centrality over a projected population, induces the log-binned post
distribution, draws proportional or uniform stratified samples, trains and
evaluates text classifiers on them, and compares classifiers on the full
population with agreement statistics.
"""

from .centrality import (
    BETWEENNESS,
    EIGENVECTOR,
    POST_DEGREE,
    THREAD_DEGREE,
    CentralityVector,
    betweenness_exact,
    eigenvector,
    post_degree,
    thread_degree,
)
from .classifier import (
    HoldoutRun,
    LinearModel,
    TrainConfig,
    load_model,
    predict,
    repeated_holdout,
    save_model,
    train,
)
from .errors import (
    BinExhaustedError,
    DataError,
    EmptyPopulationError,
    ForumstrataError,
    IngestError,
    InfeasibleError,
    NotFoundError,
    ValidationError,
)
from .evaluation import (
    AgreementReport,
    EvalReport,
    KappaResult,
    agreement,
    agresti_coull,
    aggregate_reports,
    cohen_kappa,
    disagreement_sample,
    fleiss_kappa,
    geometric_mean,
    precision_recall,
)
from .graph import (
    ForumGraph,
    PopulationGraph,
    PostEdge,
    SelectionRule,
    build_interact,
    exclude_member,
    ingest,
    ingest_jsonl,
    ingest_jsonl_file,
    project,
)
from .strata import (
    PROPORTIONAL,
    UNIFORM,
    InducedDistribution,
    SampleSpec,
    StratifiedSample,
    distribution,
    induce,
    merge_bins,
    proportion_std_error,
    sample,
)
from .synth import SynthConfig, generate, write_corpus
from .textpipe import (
    Document,
    FeatureMatrix,
    VectorizerConfig,
    VectorSpace,
    documents_for_population,
    fit,
    fit_transform,
    oversample,
    preprocess,
    transform,
)

__version__ = "0.1.0"
