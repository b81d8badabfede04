#pragma once

#include "cf/analysis.hpp"
#include "cf/core.hpp"
#include "cf/experiments.hpp"
#include "cf/rate.hpp"
#include "cf/search.hpp"
