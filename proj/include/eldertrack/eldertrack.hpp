#pragma once

#include "eldertrack/error.hpp"
#include "eldertrack/time.hpp"
#include "eldertrack/core.hpp"
#include "eldertrack/csv.hpp"
#include "eldertrack/trajectory_io.hpp"
#include "eldertrack/localize.hpp"
#include "eldertrack/preprocess.hpp"
#include "eldertrack/similarity.hpp"
#include "eldertrack/parallel.hpp"
#include "eldertrack/spectral.hpp"
#include "eldertrack/metrics.hpp"
#include "eldertrack/norms.hpp"
#include "eldertrack/deviation.hpp"
#include "eldertrack/classify.hpp"
#include "eldertrack/synth.hpp"
#include "eldertrack/pipeline.hpp"
#include "eldertrack/stages.hpp"
