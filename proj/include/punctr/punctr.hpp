#pragma once

// Umbrella header for the whole library.

#include "punctr/ablate.hpp"
#include "punctr/adam.hpp"
#include "punctr/checkpoint.hpp"
#include "punctr/config.hpp"
#include "punctr/corpus.hpp"
#include "punctr/decode.hpp"
#include "punctr/encode.hpp"
#include "punctr/errors.hpp"
#include "punctr/eval.hpp"
#include "punctr/labels.hpp"
#include "punctr/loss.hpp"
#include "punctr/mlm.hpp"
#include "punctr/model.hpp"
#include "punctr/rng.hpp"
#include "punctr/selftrain.hpp"
#include "punctr/synth.hpp"
#include "punctr/tensor.hpp"
#include "punctr/text.hpp"
#include "punctr/vocab.hpp"
