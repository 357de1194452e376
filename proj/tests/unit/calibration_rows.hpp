#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "atomscan/attack_detect.hpp"

namespace testutil {

// Reference attacker profiles. The account prefix identifies the row; the
// rest of the address is zero padding.
inline atomscan::IndicatorVector profile(const std::string& prefix, const char* i1, const char* i2, const char* i4,
                                         const char* i6, bool i5 = false) {
    std::string a = "0x" + prefix;
    for (auto& c : a) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    a.append(42 - a.size(), '0');
    atomscan::Json j{{"account", a}, {"swap_count", 1}, {"i5", i5}};
    j["i1"] = i1 ? atomscan::Json(i1) : atomscan::Json(nullptr);
    j["i2"] = i2 ? atomscan::Json(i2) : atomscan::Json(nullptr);
    j["i4"] = i4 ? i4 : "0";
    j["i6"] = i6 ? i6 : "0";
    return atomscan::indicator_from_json(j);
}

inline std::vector<atomscan::IndicatorVector> training_profiles() {
    return {
        profile("9799", "422", "371", "0", "37/43"),
        profile("0c08", "3/2", nullptr, "0", "3/4"),
        profile("5617", "13", "1574", "0", "57/61"),
        profile("7f15", nullptr, "96", "15/15", "1"),
        profile("7c65", "68", nullptr, nullptr, "1"),
        profile("e84f", "11/10", nullptr, nullptr, "9/13", true),
        profile("ca85", "7/5", nullptr, "39/40", "0"),
        profile("17e8", "3061", nullptr, nullptr, "1"),
        profile("f90e", "1402", nullptr, nullptr, "1"),
        profile("42d0", "0", nullptr, "1", "0"),
        profile("EA67", "1/2", "686", "6/7", "1"),
        profile("25d4", "38", nullptr, "1", "1"),
        profile("D224", "32", "617", "1", "3/4"),
        profile("b8aa", "351", nullptr, nullptr, "1"),
        profile("829B", nullptr, "696", "1", "1"),
    };
}

inline std::vector<atomscan::IndicatorVector> test_profiles() {
    return {
        profile("2a2e", "3/100", nullptr, "1", "1"),
        profile("db40", "5/2", "665", "1", "14/17"),
        profile("b6bf", "224", "600", "1", "1222/1231"),
        profile("c762", "3", "53/10", "1", "70/83"),
        profile("a32d", nullptr, "942", "1", "1"),
    };
}

}  // namespace testutil
