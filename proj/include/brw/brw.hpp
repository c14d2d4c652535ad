#ifndef BRW_BRW_HPP
#define BRW_BRW_HPP

#include "brw/acceptance.hpp"
#include "brw/config.hpp"
#include "brw/convex_analysis.hpp"
#include "brw/csv.hpp"
#include "brw/error.hpp"
#include "brw/evaluable_function.hpp"
#include "brw/extended_real.hpp"
#include "brw/front.hpp"
#include "brw/mc_sim.hpp"
#include "brw/models.hpp"
#include "brw/random.hpp"
#include "brw/runner.hpp"
#include "brw/speeds.hpp"

#endif  // BRW_BRW_HPP
