#pragma once

#include "kinetiq/animation.hpp"
#include "kinetiq/chart.hpp"
#include "kinetiq/color.hpp"
#include "kinetiq/game_data.hpp"
#include "kinetiq/gif.hpp"
#include "kinetiq/kinetics.hpp"
#include "kinetiq/pipeline.hpp"
#include "kinetiq/png.hpp"
#include "kinetiq/query_spec.hpp"
#include "kinetiq/registry.hpp"
#include "kinetiq/synthetic.hpp"
#include "kinetiq/xapi.hpp"
