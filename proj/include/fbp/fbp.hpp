#pragma once

#include "fbp/value.hpp"
#include "fbp/pattern.hpp"
#include "fbp/stream.hpp"
#include "fbp/propagation.hpp"
#include "fbp/guards.hpp"
#include "fbp/runtime.hpp"
#include "fbp/operators/source.hpp"
#include "fbp/operators/select.hpp"
#include "fbp/operators/impute.hpp"
#include "fbp/operators/pace.hpp"
#include "fbp/operators/aggregate.hpp"
#include "fbp/operators/join.hpp"
#include "fbp/operators/sink.hpp"
#include "fbp/io/stream_file.hpp"
#include "fbp/io/csv.hpp"
#include "fbp/io/plan_config.hpp"
#include "fbp/harness/generator.hpp"
#include "fbp/harness/oracle.hpp"
#include "fbp/harness/experiments.hpp"
