#pragma once

#include "arccpd/core.hpp"
#include "arccpd/rng.hpp"
#include "arccpd/parallel.hpp"
#include "arccpd/rume.hpp"
#include "arccpd/detector.hpp"
#include "arccpd/metrics.hpp"
#include "arccpd/tune.hpp"
#include "arccpd/simgen.hpp"
#include "arccpd/bench.hpp"
#include "arccpd/report.hpp"
