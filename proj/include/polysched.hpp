#pragma once

#include "polysched/constraints.hpp"
#include "polysched/errors.hpp"
#include "polysched/farkas.hpp"
#include "polysched/fcg.hpp"
#include "polysched/frontend.hpp"
#include "polysched/generate.hpp"
#include "polysched/model.hpp"
#include "polysched/pluto.hpp"
#include "polysched/postpass.hpp"
#include "polysched/rational.hpp"
#include "polysched/ratlp.hpp"
#include "polysched/serialize.hpp"
#include "polysched/verify.hpp"
