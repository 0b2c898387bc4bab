#ifndef GFB_GFB_HPP
#define GFB_GFB_HPP

#include "gfb/baselines.hpp"
#include "gfb/bench.hpp"
#include "gfb/checkpoint.hpp"
#include "gfb/config.hpp"
#include "gfb/core_math.hpp"
#include "gfb/error.hpp"
#include "gfb/gradcheck.hpp"
#include "gfb/graph_io.hpp"
#include "gfb/model.hpp"
#include "gfb/pooling.hpp"
#include "gfb/report.hpp"
#include "gfb/synth.hpp"
#include "gfb/textgraph.hpp"
#include "gfb/train.hpp"

#endif // GFB_GFB_HPP
