#pragma once

#include "treeclone/core.hpp"
#include "treeclone/transf.hpp"
#include "treeclone/dfta.hpp"
#include "treeclone/preclone.hpp"
#include "treeclone/reclang.hpp"
#include "treeclone/deciders.hpp"
#include "treeclone/psv.hpp"
#include "treeclone/corpus.hpp"
