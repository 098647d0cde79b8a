#pragma once

#include "jpcw/errors.hpp"
#include "jpcw/rng.hpp"
#include "jpcw/log_concave.hpp"
#include "jpcw/sample.hpp"
#include "jpcw/likelihood.hpp"
#include "jpcw/simulate.hpp"
#include "jpcw/mle.hpp"
#include "jpcw/bayes.hpp"
#include "jpcw/gof.hpp"
#include "jpcw/predictive.hpp"
#include "jpcw/study.hpp"
#include "jpcw/io.hpp"
