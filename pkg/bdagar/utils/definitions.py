# define scope of package
__all__ = [
    "KINDS", "MODELS", "MODEL_KIND", "TRANSFORMS", "PRIOR_DEFAULTS",
    "MCMC_DEFAULTS", "INTERVAL", "TARGET_ACCEPT", "EXIT_OK",
    "MIN_ESS_DRAWS", "EXIT_VALIDATION", "EXIT_RUNTIME", "DRAWS_FLOAT_FORMAT",
    "TABLE_FLOAT_FORMAT", "FIT_FILES",
]
def __dir__():
    default = [key for key in globals().keys() if key[:2] == '__']
    return default + __all__

##########################
# define model vocabulary #
##########################
# spatial precision families
KINDS = ('dagar', 'car')
# user-facing model names and the precision family each one uses
MODELS = ('bdagar', 'gmcar')
MODEL_KIND = {'bdagar': 'dagar', 'gmcar': 'car'}
# outcome transforms applied before fitting
TRANSFORMS = ('identity', 'log')

##################
# define priors #
##################
# IG(1/tau | 2, 0.1), IG(sigma^2 | 2, 1), N(beta | 0, 10^3), N(eta | 0, 10^2)
PRIOR_DEFAULTS = {
    'a_tau': 2.0,
    'b_tau': 0.1,
    'a_sigma': 2.0,
    'b_sigma': 1.0,
    'beta_var': 1e3,
    'eta_var': 1e2,
}

###################
# define sampling #
###################
# Metropolis acceptance rate the burn-in adaptation steers towards
TARGET_ACCEPT = 0.40
# arviz needs at least four draws per chain
MIN_ESS_DRAWS = 4
MCMC_DEFAULTS = {
    'iterations': 5000,
    'burn_in': 2500,
    'thin': 5,
    'n_chains': 1,
    'seed': 2020,
    'adapt': True,
    'initial_step': (0.5, 0.5),
    'target_accept': TARGET_ACCEPT,
    'adapt_interval': 50,
    'log_every': 1000,
}
# equal-tailed credible interval
INTERVAL = (0.025, 0.975)

#################
# define output #
#################
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
DRAWS_FLOAT_FORMAT = '%.17g'
TABLE_FLOAT_FORMAT = '%.6g'
FIT_FILES = {
    'draws': 'draws.csv',
    'summary': 'summary.csv',
    'waic': 'waic.json',
    'config': 'config_echo.json',
    'acceptance': 'acceptance.json',
    'failure': 'failure_state.json',
}
