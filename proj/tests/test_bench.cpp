#include <doctest.h>

#include <sstream>

#include "pushq/bench.hpp"

using namespace pushq;

TEST_SUITE_BEGIN("bench");

TEST_CASE("unknown experiment ids are rejected") {
    ExperimentSpec spec;
    spec.id = "nope";
    CHECK_THROWS_AS(run_experiment(spec), InvalidParams);
}

TEST_CASE("filter sweep has one cell per (strategy, grid point)") {
    ExperimentSpec spec;
    spec.id = "filter";
    spec.scale = 0.2;
    auto table = run_experiment(spec);
    CHECK(table.cells.size() == 3 * 5);
    for (const auto& cell : table.cells) CHECK(cell.error.empty());
    auto csv = table.to_csv();
    CHECK(csv.find("experiment,strategy,param") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);  // header + 15 cells
}

TEST_CASE("reruns with the same seed reproduce every counter") {
    ExperimentSpec spec;
    spec.id = "filter";
    spec.scale = 0.2;
    spec.seed = 99;
    auto a = run_experiment(spec);
    auto b = run_experiment(spec);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CAPTURE(i);
        CHECK(a.cells[i].report.meter == b.cells[i].report.meter);
        CHECK(a.cells[i].result_rows == b.cells[i].result_rows);
    }
}

TEST_CASE("suite emits geo-mean rows with ratio columns") {
    ExperimentSpec spec;
    spec.id = "suite";
    spec.scale = 0.1;
    auto table = run_experiment(spec);
    const SweepCell* opt = nullptr;
    for (const auto& cell : table.cells) {
        CHECK(cell.error.empty());
        if (cell.param == "geo-mean" && cell.strategy == "optimized") opt = &cell;
    }
    REQUIRE(opt);
    CHECK(opt->extra.count("cost_ratio_vs_baseline") == 1);
    CHECK(opt->extra.count("bytes_ratio_vs_baseline") == 1);
    CHECK(opt->extra.count("runtime_ratio_vs_baseline") == 1);
}

TEST_CASE("verify passes on fresh data") {
    std::ostringstream log;
    CHECK(verify(5, log));
    CHECK(log.str().find("FAIL") == std::string::npos);
}

TEST_SUITE_END();
