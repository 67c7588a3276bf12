import os

# Path to the root directory which contains the src directory
ROOT_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# Path into the mounted volume:
#   set to environment variable PRICING_INPUTS_OUTPUTS_PATH if it exists
#   else: set to default path which would be <path_to_root>/model_inputs_outputs/
PRICING_INPUTS_OUTPUTS = os.environ.get(
    "PRICING_INPUTS_OUTPUTS_PATH", os.path.join(ROOT_DIR, "model_inputs_outputs/")
)

# Path to inputs
INPUT_DIR = os.path.join(PRICING_INPUTS_OUTPUTS, "inputs")
# Optional user run config placed in the inputs directory
USER_RUN_CONFIG_FILE_PATH = os.path.join(INPUT_DIR, "run_config.json")

# Path to outputs
OUTPUT_DIR = os.path.join(PRICING_INPUTS_OUTPUTS, "outputs")

# Names of the files written into the output directory
TRAJECTORY_FILE_NAME = "trajectory.csv"
SUMMARY_FILE_NAME = "summary.txt"
STEADY_FILE_NAME = "steady.csv"
GAP_FILE_NAME = "gap.csv"
SIMULATION_FILE_NAME = "simulation.csv"
SIMULATION_SUMMARY_FILE_NAME = "simulation_summary.csv"
VERIFICATION_FILE_NAME = "verification.csv"
RESOLVED_CONFIG_FILE_NAME = "run_config.json"

# Path to logs directory inside outputs directory
ERRORS_DIR = os.path.join(OUTPUT_DIR, "errors")
# Error file paths
SOLVE_ERROR_FILE_PATH = os.path.join(ERRORS_DIR, "solve_error.txt")
STEADY_ERROR_FILE_PATH = os.path.join(ERRORS_DIR, "steady_error.txt")
GAP_ERROR_FILE_PATH = os.path.join(ERRORS_DIR, "gap_error.txt")
SIMULATE_ERROR_FILE_PATH = os.path.join(ERRORS_DIR, "simulate_error.txt")
VERIFY_ERROR_FILE_PATH = os.path.join(ERRORS_DIR, "verify_error.txt")

# Paths inside the source directory
# Path to source directory
SRC_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
# Path to config directory
CONFIG_DIR = os.path.join(SRC_DIR, "config")
# Path to the run config with default values
DEFAULT_RUN_CONFIG_FILE_PATH = os.path.join(CONFIG_DIR, "default_run_config.json")
