#pragma once

#include "conformal/bench.hpp"
#include "conformal/config.hpp"
#include "conformal/csv.hpp"
#include "conformal/datagen.hpp"
#include "conformal/dataset.hpp"
#include "conformal/icp.hpp"
#include "conformal/measures.hpp"
#include "conformal/metrics.hpp"
#include "conformal/parallel.hpp"
#include "conformal/regression.hpp"
#include "conformal/scorer.hpp"
#include "conformal/scores.hpp"
#include "conformal/stats.hpp"
