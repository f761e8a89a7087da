#pragma once

#include "ppsr/cg.hpp"
#include "ppsr/config.hpp"
#include "ppsr/denoisers.hpp"
#include "ppsr/errors.hpp"
#include "ppsr/io.hpp"
#include "ppsr/metrics.hpp"
#include "ppsr/operators.hpp"
#include "ppsr/random.hpp"
#include "ppsr/solver.hpp"
#include "ppsr/synthetic.hpp"
#include "ppsr/volume.hpp"
