#ifndef DGS_DGS_HPP
#define DGS_DGS_HPP

// Umbrella header.

#include "dgs/se3.hpp"
#include "dgs/pose_graph.hpp"
#include "dgs/assembly.hpp"
#include "dgs/chordal.hpp"
#include "dgs/block_solvers.hpp"
#include "dgs/metrics.hpp"
#include "dgs/scenario.hpp"
#include "dgs/runtime.hpp"
#include "dgs/object_slam.hpp"
#include "dgs/bench.hpp"
#include "dgs/graph_io.hpp"

#endif  // DGS_DGS_HPP
