#include "pushq/bloom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pushq/value.hpp"

namespace pushq {

int bloom_hash_count(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidRate("false-positive rate must be in (0, 1)");
    return static_cast<int>(std::ceil(std::log2(1.0 / p)));
}

int64_t bloom_bit_count(std::size_t s, double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidRate("false-positive rate must be in (0, 1)");
    if (s == 0) throw InvalidRate("cannot size a filter for zero keys");
    constexpr double ln2_sq = 0.4804530139182014;  // (ln 2)^2
    return static_cast<int64_t>(std::ceil(double(s) * std::abs(std::log(p)) / ln2_sq));
}

int64_t next_prime_at_least(int64_t value) {
    auto is_prime = [](int64_t x) {
        if (x < 2) return false;
        if (x % 2 == 0) return x == 2;
        for (int64_t d = 3; d * d <= x; d += 2)
            if (x % d == 0) return false;
        return true;
    };
    int64_t candidate = std::max<int64_t>(value, 2);
    while (!is_prime(candidate)) ++candidate;
    return candidate;
}

int64_t BloomFilter::position(const BloomHash& h, int64_t key) const {
    return (wrap_add(wrap_mul(h.a, key), h.b) % n) % m;
}

void BloomFilter::insert(int64_t key) {
    if (key < 0) throw InvalidRate("negative keys are not supported by the hash family");
    for (const auto& h : hashes) bits[static_cast<std::size_t>(position(h, key))] = '1';
}

bool BloomFilter::query(int64_t key) const {
    for (const auto& h : hashes) {
        int64_t pos = position(h, key);
        if (pos < 0 || bits[static_cast<std::size_t>(pos)] != '1') return false;
    }
    return true;
}

std::string BloomFilter::to_sql_predicate(const std::string& column) const {
    std::string out;
    out.reserve(hashes.size() * (bits.size() + 64 + column.size()));
    for (std::size_t i = 0; i < hashes.size(); ++i) {
        if (i) out += " AND ";
        out += "SUBSTRING('";
        out += bits;
        out += "', ((";
        out += std::to_string(hashes[i].a);
        out += " * CAST(";
        out += column;
        out += " AS INT) + ";
        out += std::to_string(hashes[i].b);
        out += ") MOD ";
        out += std::to_string(n);
        out += ") MOD ";
        out += std::to_string(m);
        out += " + 1, 1) = '1'";
    }
    return out;
}

BloomFilter bloom_create(std::span<const int64_t> keys, double p, uint64_t seed) {
    if (keys.empty()) throw InvalidRate("cannot build a filter from an empty key set");
    int64_t max_key = *std::max_element(keys.begin(), keys.end());
    BloomFilter f;
    f.m = bloom_bit_count(keys.size(), p);
    // n must sit above the key universe, not just above m: keys congruent
    // mod n collide under every hash of the family, which floors the
    // false-positive rate at s/n.
    f.n = next_prime_at_least(std::max(f.m, max_key + 1));
    f.bits.assign(static_cast<std::size_t>(f.m), '0');
    int k = bloom_hash_count(p);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int64_t> gen_a(1, f.n - 1);
    std::uniform_int_distribution<int64_t> gen_b(0, f.n - 1);
    f.hashes.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) f.hashes.push_back({gen_a(rng), gen_b(rng)});
    for (int64_t key : keys) f.insert(key);
    return f;
}

double bloom_measure_fpr(const BloomFilter& filter, std::span<const int64_t> probe_keys) {
    if (probe_keys.empty()) return 0.0;
    std::size_t hits = 0;
    for (int64_t key : probe_keys)
        if (filter.query(key)) ++hits;
    return double(hits) / double(probe_keys.size());
}

std::size_t bloom_predicate_size_bound(std::size_t s, double p, std::size_t column_len,
                                       int64_t max_key) {
    int64_t m = bloom_bit_count(s, p);
    int64_t n = next_prime_at_least(std::max(m, max_key + 1));
    std::size_t digits = std::to_string(n).size();  // a, b < n and m <= n
    // One term: SUBSTRING('<bits>', ((a * CAST(col AS INT) + b) MOD n) MOD m + 1, 1) = '1'
    std::size_t term = 12 + m + 5 + digits + 8 + column_len + 10 + digits + 6 + digits + 6 +
                       digits + 14;
    std::size_t k = static_cast<std::size_t>(bloom_hash_count(p));
    return k * term + (k - 1) * 5;  // " AND " separators
}

std::optional<double> bloom_fit_to_limit(std::size_t s, double p0, std::size_t limit_bytes,
                                         std::size_t column_len, int64_t max_key) {
    if (!(p0 > 0.0 && p0 < 1.0)) throw InvalidRate("false-positive rate must be in (0, 1)");
    if (s == 0) return p0;
    std::vector<double> ladder{p0};
    for (double rung : {0.0001, 0.001, 0.01, 0.1, 0.3, 0.5})
        if (rung > p0) ladder.push_back(rung);
    for (double p : ladder)
        if (bloom_predicate_size_bound(s, p, column_len, max_key) <= limit_bytes) return p;
    return std::nullopt;
}

}  // namespace pushq
