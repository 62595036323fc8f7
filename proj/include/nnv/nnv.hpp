#pragma once

#include "nnv/rational.hpp"
#include "nnv/graph.hpp"
#include "nnv/graph_io.hpp"
#include "nnv/formula.hpp"
#include "nnv/sat.hpp"
#include "nnv/simplex.hpp"
#include "nnv/lra.hpp"
#include "nnv/dpllt.hpp"
#include "nnv/property.hpp"
#include "nnv/encoder.hpp"
#include "nnv/reluplex.hpp"
#include "nnv/interval.hpp"
#include "nnv/zonotope.hpp"
#include "nnv/polyhedron.hpp"
#include "nnv/verifier.hpp"
#include "nnv/pipeline.hpp"
#include "nnv/ibp.hpp"
