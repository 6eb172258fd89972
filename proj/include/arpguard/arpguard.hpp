#pragma once

#include "arpguard/addr.hpp"
#include "arpguard/aggregator.hpp"
#include "arpguard/dataset.hpp"
#include "arpguard/edge_detector.hpp"
#include "arpguard/ensemble.hpp"
#include "arpguard/error.hpp"
#include "arpguard/evaluation.hpp"
#include "arpguard/features.hpp"
#include "arpguard/format.hpp"
#include "arpguard/logistic.hpp"
#include "arpguard/mlp.hpp"
#include "arpguard/model_io.hpp"
#include "arpguard/pcap.hpp"
#include "arpguard/rng.hpp"
#include "arpguard/simulator.hpp"
#include "arpguard/trace.hpp"
#include "arpguard/tree.hpp"
