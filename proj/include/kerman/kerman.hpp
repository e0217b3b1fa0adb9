#pragma once

// Library surface without the CLI layer.
#include "kerman/background.hpp"
#include "kerman/config.hpp"
#include "kerman/evaluate.hpp"
#include "kerman/fusion.hpp"
#include "kerman/kalman.hpp"
#include "kerman/kcf.hpp"
#include "kerman/manager.hpp"
#include "kerman/pipeline.hpp"
#include "kerman/scenario.hpp"
