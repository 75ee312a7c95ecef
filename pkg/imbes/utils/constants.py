import os
import time

DIGEST_DIR = "digest"
START_TIME = time.time()
START_TIME_INT = int(START_TIME)
LOGS_PATH = os.getenv("IMBES_LOG_FILE", f"{DIGEST_DIR}/{START_TIME_INT}/logs.txt")
DEFAULT_CONFIG_PATH = "imbes.json"

DEFAULT_DEPTH = 12
DEFAULT_MODAL_USES = 4
DEFAULT_FRESH = 3
DEFAULT_POOL_EXTRA = 2
DEFAULT_SUPPORT_STEPS = 50000

CORPUS_RANDOM_CASES = 1000
CORPUS_FLATTEN_CASES = 10000
CORPUS_ROUND_TRIP = 50
DEFAULT_SEED = 0
DEFAULT_FORMAT = "json"

# reserved namespaces, never accepted from user input
FRESH_LABEL_PREFIX = "w"
FLAT_ATOM_PREFIX = "f"
TOP_ATOM = "top"
BOT_ATOM = "bot"
METAVAR_PREFIX = "?"

EXIT_OK = 0
EXIT_NOT_FOUND = 1
EXIT_PARSE_ERROR = 2
EXIT_INVALID_PROOF = 3

# fmt: off
FRAME_TABLE = {
    "D": ("Seriality",    "forall x. exists y. xRy",                   "<> top"),
    "T": ("Reflexivity",  "forall x. xRx",                             "[]p -> p"),
    "B": ("Symmetry",     "forall x,y. xRy => yRx",                    "p -> []<>p"),
    "4": ("Transitivity", "forall x,y,z. xRy & yRz => xRz",            "[]p -> [][]p"),
    "5": ("Euclidean",    "forall x,y,z. xRy & xRz => yRz",            "<>p -> []<>p"),
    "2": ("Directed",     "forall x,y,z. xRy & xRz => exists w. yRw & zRw", "<>[]p -> []<>p"),
}
# fmt: on
