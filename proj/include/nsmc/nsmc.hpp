#pragma once

#include "nsmc/expr.hpp"
#include "nsmc/lexer.hpp"
#include "nsmc/model.hpp"
#include "nsmc/monitor.hpp"
#include "nsmc/output.hpp"
#include "nsmc/parser.hpp"
#include "nsmc/query.hpp"
#include "nsmc/remote.hpp"
#include "nsmc/rng.hpp"
#include "nsmc/runner.hpp"
#include "nsmc/simulator.hpp"
#include "nsmc/stat.hpp"
#include "nsmc/timeset.hpp"
