#pragma once

#include "hyperttsv/error.hpp"
#include "hyperttsv/combinatorics.hpp"
#include "hyperttsv/hypergraph.hpp"
#include "hyperttsv/genpoly.hpp"
#include "hyperttsv/ccss.hpp"
#include "hyperttsv/oracle.hpp"
#include "hyperttsv/parallel.hpp"
#include "hyperttsv/ttsv.hpp"
#include "hyperttsv/centrality.hpp"
