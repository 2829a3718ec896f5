#pragma once

#include "lmg/analytic.hpp"
#include "lmg/classical.hpp"
#include "lmg/core.hpp"
#include "lmg/errors.hpp"
#include "lmg/protocols.hpp"
#include "lmg/quantum.hpp"
