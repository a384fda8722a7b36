// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include "soa/analysis.hpp"
#include "soa/corpus.hpp"
#include "soa/ensemble.hpp"
#include "soa/error.hpp"
#include "soa/eval.hpp"
#include "soa/features.hpp"
#include "soa/hash.hpp"
#include "soa/labels.hpp"
#include "soa/lda.hpp"
#include "soa/linear.hpp"
#include "soa/pipeline.hpp"
#include "soa/protocols.hpp"
#include "soa/random.hpp"
#include "soa/sentiment.hpp"
#include "soa/serialize.hpp"
#include "soa/text.hpp"
