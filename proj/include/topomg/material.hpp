#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace topomg {

/// Modified SIMP: E(rho) = E_min + (E_max - E_min) rho^p, E_min = 1e-10 E_max.
struct SimpLaw {
    double e_max = 1.0;
    double e_min = 1e-10;
    double penalty = 1.0;

    static SimpLaw with_penalty(double penalty, double e_max = 1.0) { return {e_max, 1e-10 * e_max, penalty}; }
};

/// Stress-stiffness interpolation: E_max rho^p above the 0.1 threshold, 0 below.
struct StressSimpLaw {
    double e_max = 1.0;
    double penalty = 1.0;
    double threshold = 0.1;
};

[[nodiscard]] double simp_modulus(const SimpLaw& law, double rho);
[[nodiscard]] double simp_modulus_derivative(const SimpLaw& law, double rho);
[[nodiscard]] double stress_simp_modulus(const StressSimpLaw& law, double rho);
/// Right-branch derivative at the threshold.
[[nodiscard]] double stress_simp_modulus_derivative(const StressSimpLaw& law, double rho);

/// Penalty continuation: start..stop in `increment` steps, `steps_per_value`
/// iterations each, optionally followed by a second stage.
struct PenaltySchedule {
    double start = 1.0;
    double stop = 4.0;
    double increment = 0.25;
    int steps_per_value = 20;

    struct Extension {
        double stop = 12.0;
        double increment = 0.25;
        int steps_per_value = 40;
    };
    std::optional<Extension> extension;

    void validate() const;
};

/// Flat list of (penalty, iterations at that penalty).
[[nodiscard]] std::vector<std::pair<double, int>> penalty_sequence(const PenaltySchedule& schedule);
/// Penalty for every optimization step, expanded from penalty_sequence.
[[nodiscard]] std::vector<double> penalty_per_step(const PenaltySchedule& schedule);

}  // namespace topomg
