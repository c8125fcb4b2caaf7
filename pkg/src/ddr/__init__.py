"""Deep dimension reduction: learn low-dimensional, disentangled,
sufficient representations by maximizing distance covariance with the
response while a particle flow pulls the representation's law toward a
standard Gaussian.  Classical linear reducers (SIR, SAVE, PCA) and the
simulated benchmarks are included for comparison.
"""

from .baselines import (
    LinearReducer,
    accuracy,
    fit_pca,
    fit_save,
    fit_sir,
    knn_classify,
    ols_fit_predict,
    prediction_error,
    rmse,
    sym_eig,
)
from .datagen import (
    Dataset,
    FoldPlan,
    Standardization,
    gen_classification,
    gen_regression1,
    gen_regression2,
    kfold_split,
    load_csv,
    save_csv,
    standardize,
)
from .dependence import (
    dcorr,
    dcov_gradient,
    dcov_u_fast,
    dcov_u_naive,
    pairwise_distances,
)
from .divergence import (
    FDivergenceSpec,
    divergence_by_name,
    fdiv_eval,
    logistic_ratio_loss,
    variational_divergence,
)
from .flow import (
    FlowConfig,
    ParticleState,
    fit_discriminator,
    flow_step,
    gaussianize,
    velocity_field,
)
from .nn import (
    Activation,
    Adam,
    MlpNetwork,
    Sgd,
    backward,
    forward,
    identity,
    init_network,
    leaky_relu,
    load_checkpoint,
    optimizer_apply,
    relu,
    save_checkpoint,
)
from .trainer import DdrModel, TrainConfig, ddr_embed, ddr_train, objective_eval

__version__ = "0.1.0"
