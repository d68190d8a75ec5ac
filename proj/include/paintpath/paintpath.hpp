#pragma once

#include "core.hpp"
#include "geometry.hpp"
#include "kvfile.hpp"
#include "learner.hpp"
#include "linker.hpp"
#include "objective.hpp"
#include "pipeline.hpp"
#include "spraysim.hpp"
#include "synthdata.hpp"
