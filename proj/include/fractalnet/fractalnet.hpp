#pragma once

#include "fractalnet/box_dim.hpp"
#include "fractalnet/errors.hpp"
#include "fractalnet/fractal_loss.hpp"
#include "fractalnet/generators.hpp"
#include "fractalnet/graph.hpp"
#include "fractalnet/graph_io.hpp"
#include "fractalnet/parallel.hpp"
#include "fractalnet/random.hpp"
#include "fractalnet/regression.hpp"
#include "fractalnet/renorm.hpp"
#include "fractalnet/stats.hpp"
#include "fractalnet/version.hpp"
