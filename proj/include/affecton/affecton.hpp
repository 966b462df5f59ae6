#pragma once

#include "affecton/common.hpp"
#include "affecton/corpus.hpp"
#include "affecton/decoder.hpp"
#include "affecton/language_model.hpp"
#include "affecton/lemmatizer.hpp"
#include "affecton/lexicon.hpp"
#include "affecton/metrics.hpp"
#include "affecton/ngram_model.hpp"
#include "affecton/trace_io.hpp"
