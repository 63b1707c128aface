#pragma once

// Everything. Finite layer first, then the metric layer, then reporting.
#include "topoderiv/error.hpp"
#include "topoderiv/finite_topology.hpp"
#include "topoderiv/filter_algebra.hpp"
#include "topoderiv/graded_filter.hpp"
#include "topoderiv/pair_calculus.hpp"
#include "topoderiv/sampling.hpp"
#include "topoderiv/geometry.hpp"
#include "topoderiv/metric_filters.hpp"
#include "topoderiv/snowflake.hpp"
#include "topoderiv/flows.hpp"
#include "topoderiv/catalog.hpp"
#include "topoderiv/report.hpp"
#include "topoderiv/io.hpp"
#include "topoderiv/suites.hpp"
