#pragma once

#include <string>

#include "pushq/store.hpp"

namespace pushq {

// US-East price card. "Per GB" divides by gb_bytes, which defaults to GiB;
// the decimal reading (10^9) is available as a knob.
struct PriceCard {
    double scan_per_gb = 0.002;
    double return_per_gb = 0.0007;
    double get_per_1000 = 0.0004;
    double compute_per_hour = 2.128;
    double gb_bytes = double(uint64_t(1) << 30);
    // Whether Select requests also pay the per-request fee (assumed yes).
    bool bill_select_requests = true;

    static PriceCard from_json_file(const std::string& path);
    std::string to_json() const;
};

struct CostReport {
    double scan_cost = 0;
    double transfer_cost = 0;
    double request_cost = 0;
    double compute_cost = 0;
    double total = 0;

    MeterSnapshot meter;
    double compute_seconds = 0;

    // Counter-only cost (no compute term); the cross-environment comparison
    // surface, since wall clock here is not EC2 wall clock.
    double model_cost() const { return scan_cost + transfer_cost + request_cost; }

    std::string to_json() const;
};

// Translates meter counters and measured compute time into dollars.
// Transfer is priced only on Select-returned bytes: ranged-GET traffic within
// the region is free.
CostReport price(const MeterSnapshot& meter, double compute_seconds,
                 const PriceCard& card = {});

}  // namespace pushq
