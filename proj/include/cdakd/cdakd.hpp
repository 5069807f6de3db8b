#pragma once

#include "cdakd/agent.hpp"
#include "cdakd/context.hpp"
#include "cdakd/env.hpp"
#include "cdakd/errors.hpp"
#include "cdakd/harness.hpp"
#include "cdakd/metrics.hpp"
#include "cdakd/nn.hpp"
#include "cdakd/observation.hpp"
#include "cdakd/random.hpp"
#include "cdakd/replay.hpp"
