#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pushq/cost_model.hpp"
#include "pushq/exec.hpp"

namespace pushq {

// One experiment = one parameter sweep over one or more strategies, on data
// generated deterministically from (seed, scale, partitions).
struct ExperimentSpec {
    std::string id;  // see experiment_ids()
    uint64_t seed = 1;
    double scale = 1.0;
    std::size_t partitions = 8;
    ExecMode mode = ExecMode::Parallel;
    PriceCard card;
    bool multirange = false;
    int latency_ms = 0;
};

std::vector<std::string> experiment_ids();

struct SweepCell {
    std::string experiment;
    std::string strategy;
    std::string param;   // grid point, e.g. "selectivity=1e-4"
    double runtime_seconds = 0;
    std::size_t result_rows = 0;
    CostReport report;
    std::string error;  // non-empty = this cell failed, sweep continued
    std::map<std::string, std::string> extra;
};

struct SweepTable {
    std::vector<SweepCell> cells;

    std::string to_csv() const;
    std::string to_json() const;
    void print(std::ostream& out) const;
    // writes <dir>/<experiment>.<timestamp>.{csv,json}; returns the csv path
    std::string write(const std::string& dir, const std::string& experiment) const;
};

SweepTable run_experiment(const ExperimentSpec& spec);

// Cross-strategy equivalence and invariant checks at verification scale.
// Prints one line per check; returns false when any check fails.
bool verify(uint64_t seed, std::ostream& log);

}  // namespace pushq
