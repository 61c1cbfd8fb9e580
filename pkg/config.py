# Configuration constants for the D2D relay planner

TOOL_VERSION = "0.3.0"

# Numerical tolerances
ANGLE_TOLERANCE = 1e-9  # radians, collinearity and domain-boundary clamp
EXP_UNDERFLOW = -700.0  # exp() arguments below this evaluate to 0
QUADRATURE_NODES = 128
QUADRATURE_MAX_NODES = 2048
QUADRATURE_TOLERANCE = 1e-8
GERM_DILATION = 3.0  # germ window dilation in units of 1/sqrt(germ intensity)

# Percolation
MIN_INTERIOR_VERTICES = 500
CROSSING_LEVEL = 0.5
COARSE_SWEEP_POINTS = 11
REFINE_SWEEP_POINTS = 7
BOOTSTRAP_RESAMPLES = 200

# Value the occupied-crossroad threshold approaches when r is large
ASYMPTOTIC_P_STAR = 0.713

# Economics
TUNING_TOLERANCE = 0.05
MONTHS_PER_YEAR = 12

# Environment override for the worker count
THREADS_ENV_VAR = "RELAY_PLANNER_THREADS"

# Output format
CSV_FLOAT_FORMAT = "%.9g"

# Config file sections. None means "automatic" (documented per key).
STREET_CONFIG = {
    'gamma': 20.0,  # km/km^2, classical European city centre
    'window_width_km': 5.0,
    'window_height_km': 5.0,
    'margin_km': None,  # auto: r + mean edge length 4/(3 gamma)
}

NETWORK_CONFIG = {
    'lambda': 45.0,  # users per km of street
    'range_m': 200.0,  # D2D range r
    'occupation_p': 0.5,  # used by dump-streets --with-network
}

CROSSROAD_CONFIG = {
    'street_width_m': 20.0,
    'surface_kind': 'circumcircle',
    'lambda_grid': '0:100:5',
    'p_grid': '0:1:0.05',
    'mc_samples': 0,  # > 0 adds a Monte Carlo column F_mc to the occupation grid
}

PERCOLATION_CONFIG = {
    'seed': 1,
    'replicates': 50,
    'direction': 'left-right',
    'contact_band_km': None,  # auto: r, or one mean edge length when r = 0
    'p_star': None,  # supply p* instead of estimating it
    'stability_window_km': None,  # second window for the finite-size check
    'bootstrap': BOOTSTRAP_RESAMPLES,
    'threads': None,  # auto: available parallelism
    'progress': False,
}

# Reference business case
ECONOMICS_CONFIG = {
    'c_capex': 1200.0,  # currency per relay
    'eta': 0.10,  # yearly OPEX / CAPEX
    'g_revenue': 3.0,  # currency per user per month
    't_dep': 84,  # months
    't_launch': 12,
    't_critical': 30,
    'p_min': 0.10,
    'p_max': 0.20,
    'gamma': 20.0,
    'area_km2': 25.0,
    'horizon': 120,
    'adoption_curve': 'logistic-saturating',
    'adoption_scale': 0.2,
    'adoption_early_cap': 180.0,
    'adoption_early_spread': 200.0,
    'adoption_early_rate': 0.5,
    'adoption_onset_lag': -0.039,  # months relative to t_launch
    'adoption_late_cap': 100.0,
    'adoption_late_tau': 36.0,
    'adoption_slope': 2.0,  # linear-ramp, users/km per month
    'adoption_cap': 56.0,  # linear-ramp plateau
    'remainder_policy': 'final-month',
    'opex_start': 'purchase-month',
    'tuning_tolerance': TUNING_TOLERANCE,
    'estimate_p_star': False,
}

CONFIG_SECTIONS = {
    'street': STREET_CONFIG,
    'network': NETWORK_CONFIG,
    'crossroad': CROSSROAD_CONFIG,
    'percolation': PERCOLATION_CONFIG,
    'economics': ECONOMICS_CONFIG,
}

# Types of the keys whose default is automatic
AUTO_KEY_TYPES = {
    'margin_km': float,
    'contact_band_km': float,
    'p_star': float,
    'stability_window_km': float,
    'threads': int,
}
