#pragma once

#include "gale/attention.hpp"
#include "gale/channels.hpp"
#include "gale/checkpoint.hpp"
#include "gale/common.hpp"
#include "gale/corpus.hpp"
#include "gale/embedding.hpp"
#include "gale/graph.hpp"
#include "gale/ot.hpp"
#include "gale/pipeline.hpp"
#include "gale/rng.hpp"
#include "gale/synth.hpp"
#include "gale/tagging.hpp"
#include "gale/tensor.hpp"
#include "gale/vocab.hpp"
