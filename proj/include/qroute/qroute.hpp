#pragma once

#include "qroute/classifiers/model.hpp"
#include "qroute/config.hpp"
#include "qroute/corpus.hpp"
#include "qroute/cost.hpp"
#include "qroute/eval.hpp"
#include "qroute/grid.hpp"
#include "qroute/pipeline.hpp"
#include "qroute/report.hpp"
#include "qroute/router.hpp"
