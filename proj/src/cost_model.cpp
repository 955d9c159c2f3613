#include "pushq/cost_model.hpp"

#include <fstream>

#include <json.hpp>

namespace pushq {

using nlohmann::json;

CostReport price(const MeterSnapshot& meter, double compute_seconds, const PriceCard& card) {
    if (compute_seconds < 0) throw InvalidParams("compute_seconds must be >= 0");
    CostReport r;
    r.meter = meter;
    r.compute_seconds = compute_seconds;
    r.scan_cost = double(meter.bytes_scanned) / card.gb_bytes * card.scan_per_gb;
    r.transfer_cost = double(meter.bytes_returned_select) / card.gb_bytes * card.return_per_gb;
    uint64_t requests = meter.get_requests + (card.bill_select_requests ? meter.select_requests : 0);
    r.request_cost = double(requests) / 1000.0 * card.get_per_1000;
    r.compute_cost = compute_seconds / 3600.0 * card.compute_per_hour;
    r.total = r.scan_cost + r.transfer_cost + r.request_cost + r.compute_cost;
    return r;
}

std::string CostReport::to_json() const {
    json j{{"scan_cost", scan_cost},
           {"transfer_cost", transfer_cost},
           {"request_cost", request_cost},
           {"compute_cost", compute_cost},
           {"total", total},
           {"bytes_scanned", meter.bytes_scanned},
           {"bytes_returned", meter.bytes_returned()},
           {"get_requests", meter.get_requests},
           {"select_requests", meter.select_requests},
           {"compute_seconds", compute_seconds}};
    return j.dump();
}

PriceCard PriceCard::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open price card: " + path);
    json j = json::parse(in);
    PriceCard card;
    card.scan_per_gb = j.value("scan_per_gb", card.scan_per_gb);
    card.return_per_gb = j.value("return_per_gb", card.return_per_gb);
    card.get_per_1000 = j.value("get_per_1000", card.get_per_1000);
    card.compute_per_hour = j.value("compute_per_hour", card.compute_per_hour);
    card.gb_bytes = j.value("gb_bytes", card.gb_bytes);
    card.bill_select_requests = j.value("bill_select_requests", card.bill_select_requests);
    if (card.scan_per_gb < 0 || card.return_per_gb < 0 || card.get_per_1000 < 0 ||
        card.compute_per_hour < 0 || card.gb_bytes <= 0)
        throw InvalidParams("prices must be non-negative");
    return card;
}

std::string PriceCard::to_json() const {
    json j{{"scan_per_gb", scan_per_gb},
           {"return_per_gb", return_per_gb},
           {"get_per_1000", get_per_1000},
           {"compute_per_hour", compute_per_hour},
           {"gb_bytes", gb_bytes},
           {"bill_select_requests", bill_select_requests}};
    return j.dump();
}

}  // namespace pushq
