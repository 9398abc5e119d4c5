# src/config.py - Defaults shared by the engines and the command line

# Search budgets
DEFAULT_NODE_BUDGET = 10 ** 6
DEFAULT_NODE_CAP = 2 ** 22
DEFAULT_TIME_LIMIT = None
DEFAULT_SYMBOLIC_ATTEMPTS = 1000
SMOKE_TEST_TIME_LIMIT = 60.0

# Brute-force SAT oracle
MAX_BRUTE_FORCE_VARS = 24
BRUTE_FORCE_CHUNK_BITS = 16

DEFAULT_SEED = 0
DEFAULT_THREADS = 1

# Exit codes of main_system.py
EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

# Component roles accepted in project manifests
ROLES = ('environment', 'monitor', 'process')

ENGINES = ('explicit', 'bdd')
SAT_ENGINES = ('explicit', 'bdd', 'brute')

NONBLOCKING_MODES = ('none', 'weak', 'strong')

# Requirement names, in the order checks are reported
REQUIREMENTS = ('deadlock', 'safety', 'liveness', 'nonblocking')

DOT_STYLE = {
    'error_color': 'red',
    'accepting_color': 'green',
    'added_style': 'dashed',
    'rankdir': 'LR',
}

# Option keys a manifest may set with `option <key> <value>`
MANIFEST_OPTIONS = {
    'engine': str,
    'budget': int,
    'node_cap': int,
    'seed_order': str,
    'threads': int,
    'time_limit': float,
    'compat_liveness': lambda v: v.lower() in ('1', 'true', 'yes', 'on'),
    'var_order': str,
}
