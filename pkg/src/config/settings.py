import os
from dotenv import load_dotenv

load_dotenv()

# Data / Logging Configuration
DATA_DIR = os.environ.get("CELF_DATA_DIR", "./data")
LOG_LEVEL = os.environ.get("CELF_LOG_LEVEL", "INFO")

# Light Field Geometry
VIEW_GRID = 8
N_VIEWS = VIEW_GRID * VIEW_GRID

# Sensor Defaults (event model)
SENSOR_TAU = 0.30
SENSOR_EPSILON = 0.01
SENSOR_SIGMA_W = 0.175
SENSOR_SIGMA_Z = 0.04
SENSOR_Z_FLOOR = 1e-6

# Training Defaults
TRAIN_N = 4
TRAIN_EPOCHS = 600
TRAIN_BATCH_SIZE = 16
TRAIN_S_INIT = 1.0
TRAIN_S_GROWTH = 1.02
TRAIN_LR = 1e-3
VAL_FRACTION = 0.1

# RecNet Defaults
RECNET_DEPTH = 8
RECNET_WIDTH = 32
RECNET_MAX_DEPTH = 23

# Adam Defaults
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# File Formats
FORMAT_VERSION = 1
MAGIC_LIGHTFIELD = b"CELF-LF4"
MAGIC_EVENT_STREAM = b"CELF-EV1"
MAGIC_EVENT_IMAGE = b"CELF-EI1"
MAGIC_NETWORK = b"CELF-NN1"
MAGIC_PATTERNS = b"CELF-AP1"

# Data Rate Accounting
COO_BITS_PER_EVENT = 29
INTENSITY_BIT_DEPTH = 8
SENSOR_THROUGHPUT_EPS = 1.066e9
SENSOR_PIXELS = 1280 * 720

# Synthetic Scenes
SYNTH_OCTAVES = (4, 8, 16)
SYNTH_MAX_DISPARITY = 3
