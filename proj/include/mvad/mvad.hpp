#pragma once

// Umbrella header for the whole library except the CLI and TOML config.

#include "mvad/autodiff.hpp"
#include "mvad/dataset_io.hpp"
#include "mvad/datagen.hpp"
#include "mvad/decoders.hpp"
#include "mvad/encoders.hpp"
#include "mvad/fusion.hpp"
#include "mvad/graph.hpp"
#include "mvad/matrix.hpp"
#include "mvad/metrics.hpp"
#include "mvad/model.hpp"
#include "mvad/optim.hpp"
#include "mvad/training.hpp"
