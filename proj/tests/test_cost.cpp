#include <doctest.h>

#include <json.hpp>

#include "pushq/cost_model.hpp"

using namespace pushq;

TEST_SUITE_BEGIN("cost");

TEST_CASE("price card point values") {
    PriceCard card;
    MeterSnapshot m;

    m.bytes_scanned = uint64_t(1) << 30;
    CHECK(price(m, 0, card).scan_cost == doctest::Approx(0.002).epsilon(1e-9));

    m = {};
    m.get_requests = 1000;
    CHECK(price(m, 0, card).request_cost == doctest::Approx(0.0004).epsilon(1e-9));

    m = {};
    CHECK(price(m, 3600, card).compute_cost == doctest::Approx(2.128).epsilon(1e-9));

    m = {};
    m.bytes_returned_select = uint64_t(1) << 30;
    CHECK(price(m, 0, card).transfer_cost == doctest::Approx(0.0007).epsilon(1e-9));
}

TEST_CASE("zero meter and zero time price to zero") {
    auto r = price({}, 0);
    CHECK(r.scan_cost == 0);
    CHECK(r.transfer_cost == 0);
    CHECK(r.request_cost == 0);
    CHECK(r.compute_cost == 0);
    CHECK(r.total == 0);
}

TEST_CASE("linearity in counters and time") {
    MeterSnapshot m;
    m.bytes_scanned = 123456789;
    m.bytes_returned_select = 7654321;
    m.bytes_returned_get = 999;
    m.get_requests = 17;
    m.select_requests = 3;
    auto r1 = price(m, 12.5);
    for (uint64_t k : {2, 7, 100}) {
        MeterSnapshot mk;
        mk.bytes_scanned = m.bytes_scanned * k;
        mk.bytes_returned_select = m.bytes_returned_select * k;
        mk.bytes_returned_get = m.bytes_returned_get * k;
        mk.get_requests = m.get_requests * k;
        mk.select_requests = m.select_requests * k;
        auto rk = price(mk, 12.5 * double(k));
        CHECK(rk.scan_cost == doctest::Approx(r1.scan_cost * double(k)).epsilon(1e-12));
        CHECK(rk.transfer_cost == doctest::Approx(r1.transfer_cost * double(k)).epsilon(1e-12));
        CHECK(rk.request_cost == doctest::Approx(r1.request_cost * double(k)).epsilon(1e-12));
        CHECK(rk.compute_cost == doctest::Approx(r1.compute_cost * double(k)).epsilon(1e-12));
        CHECK(rk.total == doctest::Approx(r1.total * double(k)).epsilon(1e-12));
    }
}

TEST_CASE("total is the exact sum of the four components") {
    MeterSnapshot m;
    m.bytes_scanned = 10'000'000'000ull;
    m.bytes_returned_select = 123'456'789;
    m.get_requests = 4242;
    m.select_requests = 17;
    auto r = price(m, 77.7);
    CHECK(r.total == r.scan_cost + r.transfer_cost + r.request_cost + r.compute_cost);
}

TEST_CASE("GET traffic is free of transfer cost; Select requests are billed") {
    MeterSnapshot m;
    m.bytes_returned_get = uint64_t(1) << 30;
    auto r = price(m, 0);
    CHECK(r.transfer_cost == 0);

    m = {};
    m.select_requests = 1000;
    CHECK(price(m, 0).request_cost == doctest::Approx(0.0004).epsilon(1e-9));
    PriceCard no_select_fee;
    no_select_fee.bill_select_requests = false;
    CHECK(price(m, 0, no_select_fee).request_cost == 0);
}

TEST_CASE("gb_bytes knob switches GiB to decimal GB") {
    PriceCard card;
    card.gb_bytes = 1e9;
    MeterSnapshot m;
    m.bytes_scanned = 1'000'000'000;
    CHECK(price(m, 0, card).scan_cost == doctest::Approx(0.002).epsilon(1e-9));
}

TEST_CASE("report serializes with fixed field names") {
    MeterSnapshot m;
    m.bytes_scanned = 42;
    m.bytes_returned_select = 10;
    m.bytes_returned_get = 7;
    m.get_requests = 2;
    m.select_requests = 1;
    auto j = nlohmann::json::parse(price(m, 1.5).to_json());
    for (const char* field :
         {"scan_cost", "transfer_cost", "request_cost", "compute_cost", "total", "bytes_scanned",
          "bytes_returned", "get_requests", "select_requests", "compute_seconds"})
        CHECK(j.contains(field));
    CHECK(j["bytes_returned"] == 17);
    CHECK(j["compute_seconds"] == 1.5);
}

TEST_CASE("negative compute time is rejected") {
    CHECK_THROWS_AS(price({}, -1.0), InvalidParams);
}

TEST_SUITE_END();
