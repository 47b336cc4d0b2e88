#pragma once

#include "ada/attention.hpp"
#include "ada/cascade.hpp"
#include "ada/errors.hpp"
#include "ada/linalg.hpp"
#include "ada/metrics.hpp"
#include "ada/report.hpp"
#include "ada/selector.hpp"
#include "ada/synth.hpp"
#include "ada/trace.hpp"
