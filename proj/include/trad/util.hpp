#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trad::util {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset) {
    std::uint64_t h = seed;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

std::string hex64(std::uint64_t value);

// Lowercased ASCII alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, std::string_view sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);
std::string collapse_spaces(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// SplitMix64: small, fully specified generator so seeded runs are identical
// across standard library implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    // Uniform in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    // Uniform in [lo, hi].
    int range(int lo, int hi);
    double unit();

private:
    std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace trad::util
