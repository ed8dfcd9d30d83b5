#pragma once

#include "psl/arith.hpp"
#include "psl/cli.hpp"
#include "psl/criteria.hpp"
#include "psl/equidist.hpp"
#include "psl/family.hpp"
#include "psl/measures.hpp"
#include "psl/series.hpp"
#include "psl/smooth_sum.hpp"
