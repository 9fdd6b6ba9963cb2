#include "topomg/material.hpp"

#include <cmath>
#include <stdexcept>

namespace topomg {

namespace {

void check_density(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("density outside [0, 1]");
}

// Number of values start, start+inc, ... not exceeding stop (with slack for
// accumulated rounding in the increment).
int value_count(double start, double stop, double inc) {
    return static_cast<int>(std::floor((stop - start) / inc + 1e-9)) + 1;
}

}  // namespace

double simp_modulus(const SimpLaw& law, double rho) {
    check_density(rho);
    return law.e_min + (law.e_max - law.e_min) * std::pow(rho, law.penalty);
}

double simp_modulus_derivative(const SimpLaw& law, double rho) {
    check_density(rho);
    if (law.penalty == 1.0) return law.e_max - law.e_min;
    return law.penalty * (law.e_max - law.e_min) * std::pow(rho, law.penalty - 1.0);
}

double stress_simp_modulus(const StressSimpLaw& law, double rho) {
    check_density(rho);
    return rho < law.threshold ? 0.0 : law.e_max * std::pow(rho, law.penalty);
}

double stress_simp_modulus_derivative(const StressSimpLaw& law, double rho) {
    check_density(rho);
    if (rho < law.threshold) return 0.0;
    if (law.penalty == 1.0) return law.e_max;
    return law.penalty * law.e_max * std::pow(rho, law.penalty - 1.0);
}

void PenaltySchedule::validate() const {
    if (!(start >= 1.0)) throw std::invalid_argument("penalty schedule: start must be >= 1");
    if (!(stop >= start)) throw std::invalid_argument("penalty schedule: stop < start");
    if (!(increment > 0.0)) throw std::invalid_argument("penalty schedule: increment must be > 0");
    if (steps_per_value < 1) throw std::invalid_argument("penalty schedule: steps_per_value must be >= 1");
    if (extension) {
        if (!(extension->increment > 0.0) || extension->steps_per_value < 1 || extension->stop < stop) {
            throw std::invalid_argument("penalty schedule: invalid extension stage");
        }
    }
}

std::vector<std::pair<double, int>> penalty_sequence(const PenaltySchedule& schedule) {
    schedule.validate();
    std::vector<std::pair<double, int>> seq;
    const int n1 = value_count(schedule.start, schedule.stop, schedule.increment);
    for (int i = 0; i < n1; ++i) seq.emplace_back(schedule.start + i * schedule.increment, schedule.steps_per_value);
    if (schedule.extension) {
        const auto& ext = *schedule.extension;
        const double last = seq.back().first;
        const int n2 = value_count(last, ext.stop, ext.increment) - 1;
        for (int i = 1; i <= n2; ++i) seq.emplace_back(last + i * ext.increment, ext.steps_per_value);
    }
    return seq;
}

std::vector<double> penalty_per_step(const PenaltySchedule& schedule) {
    std::vector<double> out;
    for (const auto& [p, n] : penalty_sequence(schedule)) out.insert(out.end(), n, p);
    return out;
}

}  // namespace topomg
