#pragma once

#include "altext/alem.hpp"
#include "altext/config.hpp"
#include "altext/corpus.hpp"
#include "altext/engine.hpp"
#include "altext/experiment.hpp"
#include "altext/lda.hpp"
#include "altext/live_session.hpp"
#include "altext/metrics.hpp"
#include "altext/provider.hpp"
#include "altext/strategies.hpp"
#include "altext/svm.hpp"
#include "altext/tfidf.hpp"
#include "altext/text.hpp"
#include "altext/word_vectors.hpp"
