#pragma once

#include "subgrad/cells.hpp"
#include "subgrad/diagnostics.hpp"
#include "subgrad/engine.hpp"
#include "subgrad/piecewise.hpp"
#include "subgrad/strata.hpp"

#include <map>
#include <string>
#include <vector>

namespace sg {

struct BenchmarkEntry {
    std::string name;
    std::string description;
    PiecewiseFunction f;
    Stratification strata;
    std::vector<Vector> critical_points;
    double f_star = 0.0;
    // Analytic KL exponents of the strata where the inequality is not vacuous.
    std::map<int, double> known_theta;
    double theta = 0.5;      // exponent used by the bound diagnostics
    double epsilon = 1.0;    // level window |f - f*| <= epsilon covering the box
    double kl_epsilon = 1.0; // level window used when sampling for KL fits
    Vector x0;
    Box start_box; // random starts are drawn here
    StepSchedule schedule;
    Policy policy = Policy::MinNorm;
    ProofConstants constants;
};

std::vector<std::string> list_benchmarks();
const BenchmarkEntry& get_benchmark(const std::string& name);

// Uniform draw from the entry's start box.
Vector random_start(const BenchmarkEntry& e, unsigned long long seed);

// Exponent used by the bound diagnostics: the largest KL exponent over
// non-open strata with a non-vacuous inequality, else over open strata,
// kept inside [0.01, 1).
double bound_theta(const Stratification& S, const std::map<int, double>& thetas);

struct NamedCell {
    LRegularCell cell;
    ShrinkParams params;
};

std::vector<std::string> list_cells();
NamedCell get_cell(const std::string& name);

} // namespace sg
