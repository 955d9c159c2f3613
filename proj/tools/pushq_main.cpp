#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "pushq/bench.hpp"
#include "pushq/datagen.hpp"

using namespace pushq;

namespace {

struct CommonFlags {
    uint64_t seed = 1;
    double scale = 1.0;
    std::size_t partitions = 8;
    std::string out_dir = "out";
    std::string price_card;
    std::string mode = "parallel";
    std::string multirange = "off";
    int latency_ms = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "deterministic generator seed");
    cmd->add_option("--scale", flags.scale, "row-count multiplier for generated tables");
    cmd->add_option("--partitions", flags.partitions, "objects per table");
    cmd->add_option("--out-dir", flags.out_dir, "directory for result files");
    cmd->add_option("--price-card", flags.price_card, "JSON file overriding the price card");
    cmd->add_option("--mode", flags.mode, "serial|parallel execution")
        ->check(CLI::IsMember({"serial", "parallel"}));
    cmd->add_option("--multirange-get", flags.multirange, "on|off multi-range GETs (indexing)")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--latency-ms", flags.latency_ms, "fixed per-request latency");
}

ExperimentSpec to_spec(const CommonFlags& flags, const std::string& id) {
    ExperimentSpec spec;
    spec.id = id;
    spec.seed = flags.seed;
    spec.scale = flags.scale;
    spec.partitions = flags.partitions;
    spec.mode = flags.mode == "serial" ? ExecMode::Serial : ExecMode::Parallel;
    spec.multirange = flags.multirange == "on";
    spec.latency_ms = flags.latency_ms;
    if (!flags.price_card.empty()) spec.card = PriceCard::from_json_file(flags.price_card);
    return spec;
}

int cmd_gen(const CommonFlags& flags) {
    std::filesystem::create_directories(flags.out_dir);
    nlohmann::json manifest = nlohmann::json::array();
    auto emit = [&](const TableData& t) {
        t.write_dir(flags.out_dir);
        manifest.push_back(nlohmann::json::parse(t.manifest_json()));
        std::cout << "wrote " << t.info.name << ": " << t.info.rows << " rows, "
                  << t.info.partitions.size() << " objects\n";
    };

    FilterTableParams filter;
    filter.rows = std::size_t(100000 * flags.scale);
    filter.partitions = flags.partitions;
    filter.seed = flags.seed;
    emit(gen_filter_table(filter));

    GroupTableParams uniform;
    uniform.rows = std::size_t(100000 * flags.scale);
    uniform.partitions = flags.partitions;
    uniform.seed = flags.seed;
    uniform.name = "groups_uniform";
    emit(gen_group_table(uniform));

    for (double theta : {0.0, 0.7, 1.3}) {
        GroupTableParams zipf = uniform;
        zipf.dist = GroupDist::Zipf;
        zipf.theta = theta;
        zipf.name = "groups_zipf_" + std::to_string(int(theta * 10));
        emit(gen_group_table(zipf));
    }

    TpchParams tpch;
    tpch.customers = std::size_t(100000 * flags.scale);
    tpch.orders = std::size_t(1000000 * flags.scale);
    tpch.lineitems = std::size_t(1000000 * flags.scale);
    tpch.partitions = flags.partitions;
    tpch.seed = flags.seed;
    auto tables = gen_tpch_like(tpch);
    emit(tables.customer);
    emit(tables.orders);
    emit(tables.lineitem);

    std::ofstream mf(flags.out_dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";
    std::cout << "manifest: " << flags.out_dir << "/manifest.json\n";
    return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& experiment) {
    std::vector<std::string> ids;
    if (experiment == "all") {
        ids = experiment_ids();
    } else {
        ids.push_back(experiment);
    }
    for (const auto& id : ids) {
        auto table = run_experiment(to_spec(flags, id));
        table.print(std::cout);
        if (!flags.out_dir.empty()) {
            auto path = table.write(flags.out_dir, id);
            std::cout << "results: " << path << "\n";
        }
        for (const auto& cell : table.cells)
            if (!cell.error.empty()) return 1;
    }
    return 0;
}

int cmd_report(const std::string& out_dir) {
    // Aggregate every sweep CSV in the directory: geometric-mean model cost
    // per (experiment, strategy).
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        nlohmann::json rows;
        try {
            rows = nlohmann::json::parse(in);
        } catch (...) {
            continue;
        }
        if (!rows.is_array()) continue;
        ++files;
        for (const auto& row : rows) {
            if (!row.contains("model_cost") || row.contains("error")) continue;
            double cost = row["model_cost"];
            if (cost <= 0) continue;
            auto key = std::make_pair(std::string(row["experiment"]),
                                      std::string(row["strategy"]));
            acc[key].first += std::log(cost);
            acc[key].second += 1;
        }
    }
    if (files == 0) {
        std::cerr << "no sweep .json files in " << out_dir << "\n";
        return 1;
    }
    std::cout << "experiment           strategy      cells  geomean_model_cost\n";
    for (const auto& [key, v] : acc) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-20s %-13s %5zu  %.6e\n", key.first.c_str(),
                      key.second.c_str(), v.second, std::exp(v.first / double(v.second)));
        std::cout << line;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pushq: pushdown query strategies over a metered object-store emulator"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* gen = app.add_subcommand("gen", "generate benchmark tables as CSV objects on disk");
    add_common(gen, flags);

    auto* run = app.add_subcommand("run", "run an experiment sweep");
    std::string experiment = "all";
    run->add_option("--experiment", experiment,
                    "experiment id or 'all' (see --list)")
        ->required();
    add_common(run, flags);

    auto* list = app.add_subcommand("list", "list experiment ids");

    auto* verify_cmd = app.add_subcommand("verify", "run cross-strategy invariant checks");
    add_common(verify_cmd, flags);

    auto* report = app.add_subcommand("report", "aggregate sweep files in --out-dir");
    report->add_option("--out-dir", flags.out_dir, "directory holding sweep .json files");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(flags);
        if (run->parsed()) return cmd_run(flags, experiment);
        if (list->parsed()) {
            for (const auto& id : experiment_ids()) std::cout << id << "\n";
            return 0;
        }
        if (verify_cmd->parsed()) return verify(flags.seed, std::cout) ? 0 : 1;
        if (report->parsed()) return cmd_report(flags.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
