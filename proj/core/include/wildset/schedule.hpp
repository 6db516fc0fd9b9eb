// Copyright 2026-present the wildset authors
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

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wildset {

inline constexpr uint64_t kReferenceMinibatch = 256;

/// A piecewise-constant learning-rate plan: linear warm-up from the base
/// LR to the minibatch-scaled peak, then either n_decays equally spaced
/// multiplications by decay_factor (step count fixed, spacing derived), or
/// explicit per-segment lengths in epochs (ImageNet style). Weight decay
/// rides along as metadata.
struct ScheduleSpec {
    std::string name;
    double base_lr = 0.1;     // per 256 images unless absolute_lr
    bool absolute_lr = false; // base_lr is the peak itself, no scaling
    uint64_t minibatch = kReferenceMinibatch;
    uint64_t total_images = 0;  // images processed over the whole run
    uint64_t warmup_images = 0;
    double decay_factor = 0.5;
    uint32_t n_decays = 0;            // equal-spacing mode
    std::vector<double> step_epochs;  // explicit mode when non-empty
    uint64_t epoch_images = 0;        // images per epoch (explicit mode)
    double weight_decay = 1e-4;
};

/// Linear scaling rule: base / reference * minibatch.
double scaled_lr(double base, uint64_t reference, uint64_t minibatch);

/// The post-warm-up starting LR.
double peak_lr(const ScheduleSpec& spec);

void validate(const ScheduleSpec& spec);

/// Image counts at which the LR is multiplied by decay_factor, ascending.
/// Equal-spacing mode places them strictly inside (warmup, total]; explicit
/// mode at the cumulative segment boundaries.
std::vector<uint64_t> decay_points(const ScheduleSpec& spec);

/// LR after images_seen images. Warm-up ramps linearly from base_lr to the
/// peak; each decay point at or before images_seen multiplies by
/// decay_factor.
double lr_at(uint64_t images_seen, const ScheduleSpec& spec);

/// Training length for a dataset size between two (dataset_size,
/// images_processed) anchor points; linear in dataset size, or in its log
/// when log_size is set. Sizes outside the anchors clamp with a warning.
double interpolate_length(double dataset_images,
                          std::pair<double, double> lo,
                          std::pair<double, double> hi, bool log_size = false);

/// Compiled-in presets: pretraining ("in1k", "ig-940m-1.5k", ...),
/// finetuning ("ft-ig-940m-1.5k-to-in1k", ...), and detection
/// ("det-ig-3.5b-17k", ...). Unknown name -> invalid argument listing the
/// valid names.
ScheduleSpec preset(const std::string& name);
std::vector<std::string> preset_names();

/// Schedule for a hashtag-supervised corpus of arbitrary size: length is
/// interpolated between the family's small and large anchors; the 17k
/// family also interpolates the decay count, keeping the total LR
/// reduction at 0.5^20.
ScheduleSpec ig_preset(double dataset_images, const std::string& family);

/// Machine-readable dump (JSON object, stable key order).
std::string schedule_json(const ScheduleSpec& spec);

}  // namespace wildset
