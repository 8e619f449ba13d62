/**
 * @file scenarios.hpp
 * @brief Named load presets: bend, stretch, drain, mixed and zero.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "poroplate/error.hpp"
#include "poroplate/params.hpp"

namespace poroplate {

/// Amplitudes of the preset loads; each preset switches a subset on.
struct ScenarioAmplitudes {
    double normal = 1.0;      ///< P3 on each face
    double tangential = 1.0;  ///< P1, P2 on each face (equal on both faces)
    double flux = 1.0;        ///< U on the top and bottom faces
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"bend", "stretch", "drain", "mixed", "zero"};
    return names;
}

/// Load set of a named preset, ramped from zero over the first quarter of [0, t_end].
///
/// bend: P3 = sin(pi y1) sin(pi y2) on both faces. stretch: face-symmetric tangential
/// tractions (sin(2 pi y1) sin(pi y2), sin(pi y1) sin(2 pi y2)). drain: normal flux
/// U = sin(pi y1) sin(pi y2) on both faces. mixed: all three. zero: no data.
inline LoadSpec make_scenario(const std::string& name, double t_end, const ScenarioAmplitudes& amp = {}) {
    if (!(t_end > 0.0)) throw InvalidParameter("time.t_end", "must be positive");
    const bool bend = name == "bend" || name == "mixed";
    const bool stretch = name == "stretch" || name == "mixed";
    const bool drain = name == "drain" || name == "mixed";
    if (!bend && !stretch && !drain && name != "zero") throw InvalidParameter("scenario", "unknown scenario '" + name + "'");
    const Ramp ramp = default_ramp(t_end);
    constexpr double pi = std::numbers::pi;
    LoadSpec l;
    if (bend) {
        const double a = amp.normal;
        for (int f = 0; f < 2; ++f)
            l.traction[f][2] = [a, ramp](double y1, double y2, double t) {
                return a * std::sin(pi * y1) * std::sin(pi * y2) * ramp(t);
            };
    }
    if (stretch) {
        const double a = amp.tangential;
        for (int f = 0; f < 2; ++f) {
            l.traction[f][0] = [a, ramp](double y1, double y2, double t) {
                return a * std::sin(2 * pi * y1) * std::sin(pi * y2) * ramp(t);
            };
            l.traction[f][1] = [a, ramp](double y1, double y2, double t) {
                return a * std::sin(pi * y1) * std::sin(2 * pi * y2) * ramp(t);
            };
        }
    }
    if (drain) {
        const double a = amp.flux;
        l.flux = [a, ramp](double y1, double y2, double t) { return a * std::sin(pi * y1) * std::sin(pi * y2) * ramp(t); };
    }
    return l;
}

}  // namespace poroplate
