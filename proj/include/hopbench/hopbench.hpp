// Umbrella include for the whole toolkit.
#pragma once

#include "hopbench/answerers.hpp"
#include "hopbench/causal.hpp"
#include "hopbench/cave.hpp"
#include "hopbench/common.hpp"
#include "hopbench/dataset.hpp"
#include "hopbench/eval.hpp"
#include "hopbench/gateway.hpp"
#include "hopbench/http.hpp"
#include "hopbench/kg.hpp"
#include "hopbench/retrieval.hpp"
#include "hopbench/rng.hpp"
#include "hopbench/sampler.hpp"
#include "hopbench/serialize.hpp"
