// Copyright 2026 The tonemdd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "tonemdd/autodiff/adam.hpp"
#include "tonemdd/autodiff/checkpoint.hpp"
#include "tonemdd/autodiff/grad_check.hpp"
#include "tonemdd/autodiff/ops.hpp"
#include "tonemdd/autodiff/tensor.hpp"
#include "tonemdd/common/error.hpp"
#include "tonemdd/eval/align.hpp"
#include "tonemdd/eval/corpus.hpp"
#include "tonemdd/eval/mdd.hpp"
#include "tonemdd/lexicon/phoneme.hpp"
#include "tonemdd/lexicon/vocabulary.hpp"
#include "tonemdd/model/blocks.hpp"
#include "tonemdd/model/config.hpp"
#include "tonemdd/model/transducer.hpp"
#include "tonemdd/pipeline/features.hpp"
#include "tonemdd/pipeline/gradcheck.hpp"
#include "tonemdd/pipeline/manifest.hpp"
#include "tonemdd/pipeline/model_io.hpp"
#include "tonemdd/pipeline/run.hpp"
#include "tonemdd/pipeline/synth.hpp"
#include "tonemdd/pipeline/train.hpp"
#include "tonemdd/rnnt/brute_force.hpp"
#include "tonemdd/rnnt/greedy.hpp"
#include "tonemdd/rnnt/loss.hpp"
#include "tonemdd/signal/dio.hpp"
#include "tonemdd/signal/melspec.hpp"
#include "tonemdd/signal/pitch.hpp"
#include "tonemdd/signal/waveform.hpp"
