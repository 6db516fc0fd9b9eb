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

#include "wildset/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "wildset/common.hpp"

namespace wildset {

namespace {

// Reference dataset sizes for epoch-denominated schedules.
constexpr uint64_t kIn1kImages = 1281167;
constexpr uint64_t kIn5kImages = 6600000;
constexpr uint64_t kIn9kImages = 10500000;
constexpr uint64_t kCubImages = 5994;
constexpr uint64_t kPlacesImages = 1803460;

uint64_t images_for_epochs(double epochs, uint64_t epoch_images) {
    return static_cast<uint64_t>(
        std::llround(epochs * static_cast<double>(epoch_images)));
}

// Warm-up defaults to 5% of the run (five epochs of the canonical
// 100-epoch schedule), configurable on the spec afterwards.
uint64_t default_warmup(uint64_t total_images) {
    return static_cast<uint64_t>(
        std::llround(0.05 * static_cast<double>(total_images)));
}

ScheduleSpec epoch_preset(std::string name, double total_epochs,
                          std::vector<double> steps, double base_lr,
                          double decay, double weight_decay,
                          uint64_t epoch_images, uint64_t minibatch,
                          uint64_t warmup_images) {
    ScheduleSpec s;
    s.name = std::move(name);
    s.base_lr = base_lr;
    s.minibatch = minibatch;
    s.epoch_images = epoch_images;
    s.total_images = images_for_epochs(total_epochs, epoch_images);
    s.warmup_images = warmup_images;
    s.decay_factor = decay;
    s.step_epochs = std::move(steps);
    s.n_decays = static_cast<uint32_t>(s.step_epochs.size() - 1);
    s.weight_decay = weight_decay;
    return s;
}

ScheduleSpec ig_pretrain_preset(std::string name, double total_images,
                                uint32_t n_decays, double decay,
                                uint64_t dataset_images) {
    ScheduleSpec s;
    s.name = std::move(name);
    s.base_lr = 0.1;
    s.minibatch = 8064;
    s.epoch_images = dataset_images;
    s.total_images = static_cast<uint64_t>(std::llround(total_images));
    s.warmup_images = default_warmup(s.total_images);
    s.decay_factor = decay;
    s.n_decays = n_decays;
    s.weight_decay = 1e-4;
    return s;
}

ScheduleSpec finetune_preset(std::string name, double total_epochs,
                             std::vector<double> steps, double base_lr,
                             double weight_decay, uint64_t epoch_images) {
    // Finetuning runs start at the scaled LR directly; no warm-up given.
    return epoch_preset(std::move(name), total_epochs, std::move(steps),
                        base_lr, 0.1, weight_decay, epoch_images,
                        kReferenceMinibatch, 0);
}

ScheduleSpec detection_preset(std::string name, double lr) {
    // Mask R-CNN style: minibatch 8, 180k iterations, decays at 120k/160k.
    ScheduleSpec s;
    s.name = std::move(name);
    s.base_lr = lr;
    s.absolute_lr = true;
    s.minibatch = 8;
    s.epoch_images = 8;  // one "epoch" unit = one iteration
    s.total_images = uint64_t{180000} * 8;
    s.warmup_images = 0;
    s.decay_factor = 0.1;
    s.step_epochs = {120000.0, 40000.0, 20000.0};
    s.n_decays = 2;
    s.weight_decay = 1e-4;
    return s;
}

std::vector<ScheduleSpec> build_presets() {
    std::vector<ScheduleSpec> p;
    // Pretraining on labeled datasets, lengths in epochs.
    p.push_back(epoch_preset("in1k", 100, {30, 30, 30, 10}, 0.1, 0.1, 1e-4,
                             kIn1kImages, 3072,
                             default_warmup(100 * kIn1kImages)));
    p.push_back(epoch_preset("in5k", 40, {15, 15, 6, 2}, 0.1, 0.1, 1e-4,
                             kIn5kImages, 3072,
                             default_warmup(40 * kIn5kImages)));
    p.push_back(epoch_preset("in9k", 25, {9.35, 9.35, 3.75, 1.25}, 0.1, 0.1,
                             1e-4, kIn9kImages, 3072,
                             default_warmup(25 * kIn9kImages)));
    // Pretraining on hashtag corpora, lengths in images processed.
    p.push_back(ig_pretrain_preset("ig-940m-1.5k", 1925e6, 20, 0.5,
                                   940000000));
    p.push_back(ig_pretrain_preset("ig-940k-1.5k", 300e6, 20, 0.5, 940000));
    p.push_back(ig_pretrain_preset("ig-3.5b-17k", 7000e6, 40,
                                   std::sqrt(0.5), 3500000000));
    p.push_back(ig_pretrain_preset("ig-3.5m-17k", 300e6, 20, 0.5, 3500000));
    // Full-network finetuning.
    for (const char* src : {"ig-940m-1.5k", "ig-1b-17k", "ig-3.5b-17k"}) {
        const bool small_source = std::string(src) == "ig-940m-1.5k";
        p.push_back(finetune_preset(std::string("ft-") + src + "-to-in1k", 30,
                                    {10, 10, 10}, 0.00025, 1e-4, kIn1kImages));
        p.push_back(finetune_preset(std::string("ft-") + src + "-to-in5k", 30,
                                    {10, 10, 10},
                                    small_source ? 0.0025 : 0.00025, 1e-4,
                                    kIn5kImages));
        p.push_back(finetune_preset(std::string("ft-") + src + "-to-in9k", 24,
                                    {8, 8, 8}, small_source ? 0.0025 : 0.00025,
                                    1e-4, kIn9kImages));
        p.push_back(finetune_preset(std::string("ft-") + src + "-to-cub200",
                                    300, {100, 100, 100}, 0.00025, 1e-3,
                                    kCubImages));
        p.push_back(finetune_preset(std::string("ft-") + src +
                                        "-to-places365",
                                    8, {4, 2, 2}, 0.00025, 1e-4,
                                    kPlacesImages));
    }
    p.push_back(finetune_preset("ft-in-1.3m-1k-to-cub200", 300,
                                {100, 100, 100}, 0.0025, 1e-2, kCubImages));
    p.push_back(finetune_preset("ft-in-1.3m-1k-to-places365", 18, {8, 6, 2, 2},
                                0.0025, 1e-4, kPlacesImages));
    // Detection finetuning LRs.
    p.push_back(detection_preset("det-in1k", 0.01));
    p.push_back(detection_preset("det-in5k", 0.01));
    p.push_back(detection_preset("det-ig-940m-1.5k", 0.0025));
    p.push_back(detection_preset("det-ig-1b-17k", 0.0025));
    p.push_back(detection_preset("det-ig-3.5b-17k", 0.00075));
    return p;
}

const std::vector<ScheduleSpec>& presets() {
    static const std::vector<ScheduleSpec> p = build_presets();
    return p;
}

}  // namespace

double scaled_lr(double base, uint64_t reference, uint64_t minibatch) {
    if (!(base > 0.0)) throw InvalidArgument("non-positive base LR");
    if (reference == 0) throw InvalidArgument("zero reference minibatch");
    if (minibatch == 0) throw InvalidArgument("zero minibatch");
    return base / static_cast<double>(reference) *
           static_cast<double>(minibatch);
}

double peak_lr(const ScheduleSpec& spec) {
    if (spec.absolute_lr) return spec.base_lr;
    return scaled_lr(spec.base_lr, kReferenceMinibatch, spec.minibatch);
}

void validate(const ScheduleSpec& spec) {
    if (spec.total_images == 0) {
        throw InvalidArgument("schedule \"" + spec.name + "\": zero length");
    }
    if (!(spec.base_lr > 0.0)) {
        throw InvalidArgument("schedule \"" + spec.name +
                              "\": non-positive base LR");
    }
    if (spec.minibatch == 0) {
        throw InvalidArgument("schedule \"" + spec.name + "\": zero minibatch");
    }
    if (!(spec.decay_factor > 0.0 && spec.decay_factor <= 1.0)) {
        throw InvalidArgument("schedule \"" + spec.name +
                              "\": decay factor outside (0, 1]");
    }
    if (spec.warmup_images > spec.total_images) {
        throw InvalidArgument("schedule \"" + spec.name +
                              "\": warm-up longer than the run");
    }
    if (!spec.step_epochs.empty()) {
        if (spec.epoch_images == 0) {
            throw InvalidArgument("schedule \"" + spec.name +
                                  "\": explicit steps need epoch_images");
        }
        double sum = 0.0;
        for (double e : spec.step_epochs) {
            if (!(e > 0.0)) {
                throw InvalidArgument("schedule \"" + spec.name +
                                      "\": non-positive step length");
            }
            sum += e;
        }
        if (sum * static_cast<double>(spec.epoch_images) >
            static_cast<double>(spec.total_images) + 0.5) {
            throw InvalidArgument("schedule \"" + spec.name +
                                  "\": steps exceed the total length");
        }
    }
}

std::vector<uint64_t> decay_points(const ScheduleSpec& spec) {
    validate(spec);
    std::vector<uint64_t> points;
    if (!spec.step_epochs.empty()) {
        double cum = 0.0;
        for (size_t i = 0; i + 1 < spec.step_epochs.size(); ++i) {
            cum += spec.step_epochs[i];
            points.push_back(images_for_epochs(cum, spec.epoch_images));
        }
        return points;
    }
    const double span =
        static_cast<double>(spec.total_images - spec.warmup_images);
    for (uint32_t i = 1; i <= spec.n_decays; ++i) {
        points.push_back(spec.warmup_images +
                         static_cast<uint64_t>(std::llround(
                             span * i / (spec.n_decays + 1))));
    }
    return points;
}

double lr_at(uint64_t images_seen, const ScheduleSpec& spec) {
    validate(spec);
    if (images_seen > spec.total_images) {
        throw InvalidArgument("images seen " + std::to_string(images_seen) +
                              " beyond schedule length " +
                              std::to_string(spec.total_images));
    }
    const double peak = peak_lr(spec);
    if (images_seen < spec.warmup_images) {
        const double frac = static_cast<double>(images_seen) /
                            static_cast<double>(spec.warmup_images);
        return spec.base_lr + (peak - spec.base_lr) * frac;
    }
    double lr = peak;
    for (uint64_t point : decay_points(spec)) {
        if (point <= images_seen) lr *= spec.decay_factor;
    }
    return lr;
}

double interpolate_length(double dataset_images, std::pair<double, double> lo,
                          std::pair<double, double> hi, bool log_size) {
    if (!(lo.first > 0.0) || !(hi.first > 0.0)) {
        throw InvalidArgument("interpolation anchors need positive sizes");
    }
    if (lo.first > hi.first) {
        throw InvalidArgument("interpolation anchors out of order");
    }
    if (lo.first == hi.first) {
        if (lo.second != hi.second) {
            throw InvalidArgument(
                "equal anchor sizes with different lengths");
        }
        return lo.second;
    }
    double n = dataset_images;
    if (n < lo.first || n > hi.first) {
        const double clamped = std::clamp(n, lo.first, hi.first);
        log::warn("dataset size %.3g outside schedule anchors [%.3g, %.3g]; "
                  "clamping to %.3g",
                  n, lo.first, hi.first, clamped);
        n = clamped;
    }
    double frac;
    if (log_size) {
        frac = (std::log(n) - std::log(lo.first)) /
               (std::log(hi.first) - std::log(lo.first));
    } else {
        frac = (n - lo.first) / (hi.first - lo.first);
    }
    return lo.second + (hi.second - lo.second) * frac;
}

ScheduleSpec preset(const std::string& name) {
    for (const auto& p : presets()) {
        if (p.name == name) return p;
    }
    std::string known;
    for (const auto& p : presets()) {
        if (!known.empty()) known += ", ";
        known += p.name;
    }
    throw InvalidArgument("unknown schedule preset \"" + name +
                          "\" (known: " + known + ")");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    names.reserve(presets().size());
    for (const auto& p : presets()) names.push_back(p.name);
    return names;
}

ScheduleSpec ig_preset(double dataset_images, const std::string& family) {
    if (!(dataset_images > 0.0)) {
        throw InvalidArgument("non-positive dataset size");
    }
    ScheduleSpec s;
    s.base_lr = 0.1;
    s.minibatch = 8064;
    s.weight_decay = 1e-4;
    s.epoch_images = static_cast<uint64_t>(std::llround(dataset_images));
    if (family == "1.5k") {
        s.total_images = static_cast<uint64_t>(std::llround(
            interpolate_length(dataset_images, {940e3, 300e6},
                               {940e6, 1925e6})));
        s.n_decays = 20;
        s.decay_factor = 0.5;
    } else if (family == "17k") {
        s.total_images = static_cast<uint64_t>(std::llround(
            interpolate_length(dataset_images, {3.5e6, 300e6},
                               {3.5e9, 7000e6})));
        // Decay count follows the anchors (20 at 3.5M, 40 at 3.5B); the
        // factor compensates so the full run always decays by 0.5^20.
        s.n_decays = static_cast<uint32_t>(std::llround(
            interpolate_length(dataset_images, {3.5e6, 20}, {3.5e9, 40})));
        s.decay_factor = std::pow(0.5, 20.0 / s.n_decays);
    } else {
        throw InvalidArgument("unknown hashtag family \"" + family +
                              "\" (known: 1.5k, 17k)");
    }
    s.warmup_images = default_warmup(s.total_images);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "ig-%.4g-%s", dataset_images,
                  family.c_str());
    s.name = buf;
    return s;
}

std::string schedule_json(const ScheduleSpec& spec) {
    validate(spec);
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["base_lr"] = spec.base_lr;
    j["absolute_lr"] = spec.absolute_lr;
    j["minibatch"] = spec.minibatch;
    j["peak_lr"] = peak_lr(spec);
    j["total_images"] = spec.total_images;
    j["warmup_images"] = spec.warmup_images;
    j["decay_factor"] = spec.decay_factor;
    j["n_decays"] = spec.n_decays;
    j["step_epochs"] = spec.step_epochs;
    j["epoch_images"] = spec.epoch_images;
    j["weight_decay"] = spec.weight_decay;
    j["decay_points"] = decay_points(spec);
    return j.dump(2);
}

}  // namespace wildset
