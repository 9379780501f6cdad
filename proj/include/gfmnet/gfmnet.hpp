#pragma once

#include <gfmnet/errors.hpp>
#include <gfmnet/polynomial.hpp>
#include <gfmnet/rational_tf.hpp>
#include <gfmnet/state_space.hpp>
#include <gfmnet/response.hpp>
#include <gfmnet/units.hpp>
#include <gfmnet/network.hpp>
#include <gfmnet/system.hpp>
#include <gfmnet/analysis.hpp>
#include <gfmnet/config.hpp>
#include <gfmnet/run.hpp>
