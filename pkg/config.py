"""
Configuration file for the Subgradient MCMC sampler application
"""

import os

# Model families and the samplers that can drive them
SUPPORTED_MODELS = {
    'linear_svm': 'Bayesian linear SVM (Gaussian prior, hinge pseudo-likelihood)',
    'mixture_svm': 'Parametric mixture of SVMs with Gaussian input components',
    'sparse_logistic': 'Sparse Bayesian logistic regression with a Laplace prior',
}

SUPPORTED_SAMPLERS = {
    'hmc': 'Subgradient leapfrog HMC (optional MH correction in full-batch mode)',
    'ssgld': 'Stochastic subgradient Langevin dynamics',
    'ssgnht': 'Stochastic subgradient Nose-Hoover thermostat',
    'srwm': 'Stochastic random walk Metropolis baseline',
    'da_gibbs': 'Data augmentation Gibbs baseline',
    'ds_hmc': 'Doubly stochastic HMC for mixtures of SVMs',
    'hmc_gibbs': 'Stochastic subgradient HMC within Gibbs for mixtures of SVMs',
}

# Compatibility mappings - which samplers can run which model
COMPATIBILITY_MATRIX = {
    'linear_svm': ['hmc', 'ssgld', 'ssgnht', 'srwm', 'da_gibbs'],
    'sparse_logistic': ['hmc', 'ssgld', 'ssgnht', 'srwm'],
    'mixture_svm': ['ds_hmc', 'hmc_gibbs'],
}

# Samplers used inside the mixture rounds
MIXTURE_INNER_SAMPLERS = ['ssgld', 'ssgnht']

SCHEDULE_KINDS = ['constant', 'polynomial', 'adaptive']

SYNTHETIC_KINDS = ['svm2d', 'sparse']

# Model defaults
DEFAULT_C = 1.0
DEFAULT_LAPLACE_SCALE = 1.0
DEFAULT_COMPONENTS = 2
SYNTHETIC_PRIOR_PRECISION = 3.0
MU_PRIOR_VARIANCE = 100.0
L_DIAGONAL_FLOOR = 1e-6
DENSE_FACTORIZATION_LIMIT = 2000
KMEANS_POOL_SIZE = 10

# Sampler defaults
ADAPTIVE_DELTA = 1e-8
DIVERGENCE_LIMIT = 1e10
DEFAULT_DIFFUSION = 1.0
DEFAULT_PROPOSAL_SD = 0.1
DEFAULT_LEAPFROG_STEPS = 1

# Minibatch sizes compared by the batch-size sweep
DEFAULT_SWEEP_BATCH_SIZES = [10, 100, 1000]

# Samplers that always use the full dataset
FULL_DATA_SAMPLERS = ['da_gibbs']

# Trace defaults
BURN_IN_FRACTION = 0.2
NONZERO_TOLERANCE = 1e-2
# arviz returns nan below this many draws per chain
MIN_MCSE_DRAWS = 4

# Sparse storage is used above this dimension or below this density
SPARSE_DIM_THRESHOLD = 100
SPARSE_DENSITY_THRESHOLD = 0.2

# Default output directory
DEFAULT_OUTPUT_DIR = os.path.join(os.getcwd(), 'runs')

# Environment variable naming the dataset root directory
DATA_ROOT_ENV = 'SUBGRAD_MCMC_DATA'

# Application settings
APP_NAME = "Subgradient MCMC"
APP_VERSION = "1.0.0"

# Logging configuration
LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
LOG_FILE = "subgradient_mcmc.log"

# Exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2
