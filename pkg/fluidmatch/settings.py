import os
from fluidmatch.application.context import ctx

TESTING = os.getenv('TESTING')
SLOW_TESTS = os.getenv('FLUIDMATCH_SLOW_TESTS')

FEASIBILITY_TOLERANCE = 1e-9
OBJECTIVE_TOLERANCE = 1e-9
DUALITY_GAP_TOLERANCE = 1e-6
MAX_ENUMERATION_EDGES = 20

LOGFILE = None
if not TESTING:
    LOGFILE = '%s/fluidmatch.log' % ctx.datadir
