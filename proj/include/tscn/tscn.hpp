// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "tscn/core/error.hpp"
#include "tscn/core/random.hpp"
#include "tscn/core/tensor.hpp"
#include "tscn/dsp/fft.hpp"
#include "tscn/dsp/stft.hpp"
#include "tscn/model/tscn.hpp"
#include "tscn/nn/layers.hpp"
#include "tscn/nn/params.hpp"
#include "tscn/nn/tcm.hpp"
#include "tscn/nn/weight_file.hpp"
#include "tscn/pipeline/config_file.hpp"
#include "tscn/pipeline/engine.hpp"
#include "tscn/pipeline/mix.hpp"
#include "tscn/pipeline/spectra_csv.hpp"
#include "tscn/pipeline/wav.hpp"
#include "tscn/pp/expint.hpp"
#include "tscn/pp/post_processor.hpp"
#include "tscn/train/losses.hpp"
#include "tscn/train/micro_overfit.hpp"
