#pragma once

#include "spinctl/errors.hpp"
#include "spinctl/quat.hpp"
#include "spinctl/path.hpp"
#include "spinctl/magnus.hpp"
#include "spinctl/noise.hpp"
#include "spinctl/evolution.hpp"
#include "spinctl/fidelity.hpp"
#include "spinctl/optimizer.hpp"
#include "spinctl/config.hpp"
#include "spinctl/run.hpp"
