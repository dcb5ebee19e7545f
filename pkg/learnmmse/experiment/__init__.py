from .estimate import run_estimate
from .predict import run_predict
from .run import ModelCache, SweepPoint, run_sweep, snr_points
from .save import RESULT_COLUMNS, emit_results, results_frame
