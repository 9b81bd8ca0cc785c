#pragma once

#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tabsem {

// Base class for all recoverable data/format errors raised by this library.
// Programmer errors (broken invariants) use assertions instead.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

namespace detail {
std::string format_v(const char* fmt, va_list ap);
}

std::string format(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;

[[noreturn]] void fail(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;

[[noreturn]] void fail_parse(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;

// Logging goes to stderr so command output on stdout stays clean.
void set_quiet(bool quiet);
bool quiet();
void log_info(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;
void log_warn(const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 1, 2)))
#endif
    ;

// SplitMix64: the fixed pseudo-random generator used everywhere randomness is
// needed, so runs are bit-reproducible across platforms and implementations.
// Update recurrence, on unsigned 64-bit integers with wrapping arithmetic:
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z XOR (z >> 27)) * 0x94D049BB133111EB
//   output = z XOR (z >> 31)
// split(): child seed = next() of the parent; the child is an independent
// stream. next_double() maps the top 53 bits into [0,1).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, n), unbiased via rejection
    uint64_t next_below(uint64_t n) {
        if (n == 0) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    SplitMix64 split() { return SplitMix64(next_u64()); }

private:
    uint64_t state_;
};

uint64_t fnv1a64(std::string_view s);

// string helpers ------------------------------------------------------------

std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool iequals(std::string_view a, std::string_view b);

// Canonical, locale-free number formatting: integers print without a decimal
// point, everything else uses the shortest round-trip form.
std::string format_number(double v);

// Parses a decimal number; returns false on any trailing garbage.
bool parse_number(std::string_view s, double& out);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace tabsem
