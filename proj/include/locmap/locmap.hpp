#pragma once

#include "locmap/boundary.hpp"
#include "locmap/box_eval.hpp"
#include "locmap/core.hpp"
#include "locmap/direct_eval.hpp"
#include "locmap/edge_eval.hpp"
#include "locmap/errors.hpp"
#include "locmap/filters.hpp"
#include "locmap/fixtures.hpp"
#include "locmap/grid.hpp"
#include "locmap/hns.hpp"
#include "locmap/manifest.hpp"
#include "locmap/npy.hpp"
#include "locmap/parallel.hpp"
#include "locmap/pipeline.hpp"
#include "locmap/png.hpp"
#include "locmap/random.hpp"
#include "locmap/report.hpp"
#include "locmap/sem.hpp"
