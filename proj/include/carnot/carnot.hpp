#pragma once

#include "carnot/experiments.hpp"
#include "carnot/fields.hpp"
#include "carnot/gauge.hpp"
#include "carnot/group.hpp"
#include "carnot/mollifier.hpp"
#include "carnot/nonlocal.hpp"
#include "carnot/quad.hpp"
#include "carnot/util.hpp"
