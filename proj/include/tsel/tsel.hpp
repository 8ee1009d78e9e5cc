#pragma once

#include "tsel/types.hpp"
#include "tsel/rng.hpp"
#include "tsel/parallel.hpp"
#include "tsel/dgp.hpp"
#include "tsel/blocks.hpp"
#include "tsel/elcore.hpp"
#include "tsel/selfnorm.hpp"
#include "tsel/penalized.hpp"
#include "tsel/estimate.hpp"
#include "tsel/pivotal.hpp"
#include "tsel/bounds.hpp"
#include "tsel/inference.hpp"
#include "tsel/io.hpp"
