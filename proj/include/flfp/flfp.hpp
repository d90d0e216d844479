#pragma once

// Umbrella header: traffic-fingerprinting toolkit for federated
// learning captures. Parse or synthesize pcap sessions, extract
// layer-3 statistical features, rank them, train forest/svm/gbm
// fingerprinting models, and evaluate them.

#include "flfp/classifier.hpp"
#include "flfp/config.hpp"
#include "flfp/cross_validation.hpp"
#include "flfp/error.hpp"
#include "flfp/eval.hpp"
#include "flfp/features.hpp"
#include "flfp/forest.hpp"
#include "flfp/gbm.hpp"
#include "flfp/model_io.hpp"
#include "flfp/pcap.hpp"
#include "flfp/pipeline.hpp"
#include "flfp/rng.hpp"
#include "flfp/scaler.hpp"
#include "flfp/svm.hpp"
#include "flfp/synth.hpp"
#include "flfp/trace.hpp"
#include "flfp/tree.hpp"
