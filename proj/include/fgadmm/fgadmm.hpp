// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fgadmm/bench.hpp"
#include "fgadmm/engine.hpp"
#include "fgadmm/error.hpp"
#include "fgadmm/factor_graph.hpp"
#include "fgadmm/graph_io.hpp"
#include "fgadmm/problems.hpp"
#include "fgadmm/prox.hpp"
#include "fgadmm/prox_library.hpp"
#include "fgadmm/prox_reference.hpp"
#include "fgadmm/worker_pool.hpp"
