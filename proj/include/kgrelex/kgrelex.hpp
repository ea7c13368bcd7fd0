#ifndef KGRELEX_KGRELEX_HPP
#define KGRELEX_KGRELEX_HPP

#include "kgrelex/aggregation.hpp"
#include "kgrelex/checkpoint.hpp"
#include "kgrelex/context.hpp"
#include "kgrelex/error.hpp"
#include "kgrelex/explain.hpp"
#include "kgrelex/ingestion.hpp"
#include "kgrelex/kg.hpp"
#include "kgrelex/linkpred.hpp"
#include "kgrelex/matrix.hpp"
#include "kgrelex/pipeline.hpp"
#include "kgrelex/random.hpp"
#include "kgrelex/reasoning.hpp"

#endif  // KGRELEX_KGRELEX_HPP
