#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pushq/common.hpp"

namespace pushq {

// Universal hash pair: position = ((a*x + b) mod n) mod m, 1 <= a < n,
// 0 <= b < n, n the smallest prime >= m.
struct BloomHash {
    int64_t a = 0;
    int64_t b = 0;
};

// Bit array stored as '0'/'1' characters: the storage dialect has no bitwise
// operators or binary payloads, so the same representation that goes into the
// rendered predicate is used for local queries.
struct BloomFilter {
    int64_t m = 0;  // bit count
    int64_t n = 0;  // prime modulus >= m
    std::vector<BloomHash> hashes;
    std::string bits;  // bits.size() == m

    int k() const { return static_cast<int>(hashes.size()); }
    int64_t position(const BloomHash& h, int64_t key) const;
    void insert(int64_t key);
    bool query(int64_t key) const;

    // Conjunction of one SUBSTRING test per hash over the shared bit string,
    // 1-based, compared to '1'. The bit-string literal is repeated per term.
    std::string to_sql_predicate(const std::string& column) const;
};

// k = ceil(log2(1/p))
int bloom_hash_count(double p);
// m = ceil(s * |ln p| / (ln 2)^2)
int64_t bloom_bit_count(std::size_t s, double p);
int64_t next_prime_at_least(int64_t value);

// Sizes by the formulas above, draws (a_i, b_i) from a seeded generator, and
// inserts every key. Keys must be non-negative (the rendered arithmetic has
// no non-negative MOD for negative operands). n is the smallest prime >=
// max(m, max_key + 1): keys congruent mod n collide under every hash, so n
// must clear the key universe for the family to hit its target rate.
BloomFilter bloom_create(std::span<const int64_t> keys, double p, uint64_t seed);

// Fraction of probe keys answering true; probes disjoint from insertions
// measure the false-positive rate.
double bloom_measure_fpr(const BloomFilter& filter, std::span<const int64_t> probe_keys);

// Upper bound on to_sql_predicate() length for a filter of s keys at rate p.
std::size_t bloom_predicate_size_bound(std::size_t s, double p, std::size_t column_len,
                                       int64_t max_key);

// Smallest rate >= p0 on the ladder {p0, 0.0001, 0.001, 0.01, 0.1, 0.3, 0.5}
// whose rendered predicate fits in limit_bytes; nullopt means no rate < 1
// fits and the caller must degrade to a plain filtered scan.
std::optional<double> bloom_fit_to_limit(std::size_t s, double p0, std::size_t limit_bytes,
                                         std::size_t column_len, int64_t max_key);

}  // namespace pushq
