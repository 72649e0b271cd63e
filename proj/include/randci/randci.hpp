#pragma once

#include "randci/citest.hpp"
#include "randci/data.hpp"
#include "randci/errors.hpp"
#include "randci/eval.hpp"
#include "randci/features.hpp"
#include "randci/graph.hpp"
#include "randci/pc.hpp"
#include "randci/rng.hpp"
#include "randci/serialize.hpp"
#include "randci/synth.hpp"
#include "randci/wchi2.hpp"
