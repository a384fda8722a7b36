// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace soa {

/// The nine subjects of anxiety, in canonical column order.
enum class Subject : std::uint8_t {
    kFinance,
    kRestrict,
    kHealth,
    kGuide,
    kWork,
    kMental,
    kDeath,
    kTravel,
    kFuture,
};

inline constexpr std::size_t kNumSubjects = 9;

inline constexpr std::array<std::string_view, kNumSubjects> kSubjectNames = {
    "finance", "restrict", "health", "guide", "work", "mental", "death", "travel", "future"};

inline constexpr std::string_view subject_name(Subject s) {
    return kSubjectNames[static_cast<std::size_t>(s)];
}

inline std::optional<Subject> subject_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNumSubjects; ++i) {
        if (kSubjectNames[i] == name) return static_cast<Subject>(i);
    }
    return std::nullopt;
}

/// Nine independent binary flags; a post may carry any subset.
struct SoaLabels {
    std::array<bool, kNumSubjects> flags{};

    bool operator[](Subject s) const { return flags[static_cast<std::size_t>(s)]; }
    bool& operator[](Subject s) { return flags[static_cast<std::size_t>(s)]; }
    bool operator[](std::size_t i) const { return flags[i]; }
    bool& operator[](std::size_t i) { return flags[i]; }

    std::size_t count() const {
        std::size_t n = 0;
        for (bool f : flags) n += f ? 1 : 0;
        return n;
    }

    friend bool operator==(const SoaLabels&, const SoaLabels&) = default;
};

/// Anxiety-language intensity: 0 none, 1 mild, 2 extreme.
enum class IntensityLevel : std::uint8_t { kNone = 0, kMild = 1, kExtreme = 2 };

inline std::optional<IntensityLevel> intensity_from_int(long long v) {
    if (v < 0 || v > 2) return std::nullopt;
    return static_cast<IntensityLevel>(v);
}

/// Binary target for the intensity classifier: levels 0 and 1 are pooled.
constexpr bool combine_intensity_labels(IntensityLevel level) {
    return level == IntensityLevel::kExtreme;
}

inline constexpr std::string_view kIntensityName = "intensity";

}  // namespace soa
