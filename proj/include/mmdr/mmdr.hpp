#pragma once

#include "mmdr/autodiff.hpp"
#include "mmdr/checkpoint.hpp"
#include "mmdr/config.hpp"
#include "mmdr/datagen.hpp"
#include "mmdr/dataset.hpp"
#include "mmdr/drd.hpp"
#include "mmdr/engine.hpp"
#include "mmdr/feature_io.hpp"
#include "mmdr/gradcheck.hpp"
#include "mmdr/gradient_suite.hpp"
#include "mmdr/iaf.hpp"
#include "mmdr/layers.hpp"
#include "mmdr/losses.hpp"
#include "mmdr/matrix.hpp"
#include "mmdr/metrics.hpp"
#include "mmdr/model.hpp"
#include "mmdr/mutual_info.hpp"
#include "mmdr/optim.hpp"
#include "mmdr/probe.hpp"
#include "mmdr/reports.hpp"
