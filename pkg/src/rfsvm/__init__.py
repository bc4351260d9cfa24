"""Multi-view classification with random-forest dissimilarity fusion.

Each feature group (view) trains its own random forest; two samples'
dissimilarity under a forest is the fraction of trees in which they land in
different leaves. Per-view dissimilarity matrices are fused by elementwise
averaging, the complement ``1 - D`` serves as a precomputed SVM kernel, and
an SMO solver with one-vs-one voting does the classification. The harness
reproduces a repeated stratified-holdout protocol end to end, and the
texture module extracts PFTAS and GLCM features from RGB images.
"""

from .errors import (
    AlignmentError,
    ConvergenceError,
    FormatError,
    LabelError,
    ParameterError,
    ParseError,
    RfsvmError,
    StratificationError,
    TrainingError,
    ValidationError,
)
from .forest import (
    DecisionTree,
    RandomForestModel,
    forests_equal,
    leaf_assign,
    load_forest,
    predict_forest,
    save_forest,
    train_forest,
    tree_apply,
)
from .harness import (
    EvalReport,
    Metrics,
    SplitPlan,
    compute_metrics,
    emit_report,
    render_text,
    report_from_dict,
    report_to_dict,
    reports_equal,
    run_rfsvm,
    run_single_view_baseline,
    stratified_split,
)
from .ingest import (
    FeatureView,
    LabeledDataset,
    RunConfig,
    assemble_dataset,
    load_config,
    load_labels,
    load_view,
    resolve_mtry,
    write_view,
)
from .rfd import (
    CrossDissimilarityBlock,
    DissimilarityMatrix,
    cross_dissimilarity,
    forest_dissimilarity_matrix,
    joint_cross_dissimilarity,
    joint_dissimilarity,
    load_matrix_csv,
    psd_clip,
    save_matrix_csv,
    similarity_from_dissimilarity,
    tree_dissimilarity,
)
from .svm import (
    BinarySvmModel,
    MulticlassSvmModel,
    PairModel,
    grid_search_c,
    load_svm,
    predict_multiclass,
    save_svm,
    smo_solve,
    stratified_folds,
    train_binary_svm,
    train_multiclass_svm,
)
from .texture import (
    CorpusReport,
    TextureFeatures,
    decode_image,
    extract_corpus,
    extract_features,
    glcm_extract,
    haralick_features,
    otsu_threshold,
    pftas_extract,
)

__version__ = "0.1.0"
